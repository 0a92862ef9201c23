//! Deterministic CSV emission and parsing for spectrum curves.
//!
//! Format: header `alpha,value,kind,status`, one row per requested grid
//! point in alpha order, 12 significant digits, LF line endings. Dropped
//! (infeasible) points keep their row with an empty value; transition rows
//! carry status `transition`.

use crate::spectra::{SpectrumCurve, SpectrumKind};

/// 12 significant digits, scientific, round-trippable.
pub fn sig12(x: f64) -> String {
    format!("{:.11e}", x)
}

pub fn curve_to_csv(curve: &SpectrumCurve) -> String {
    let kind = curve.kind.as_str();
    let mut rows: Vec<(f64, Option<f64>)> = curve
        .grid
        .iter()
        .zip(&curve.values)
        .map(|(&a, &v)| (a, Some(v)))
        .chain(curve.dropped.iter().map(|&a| (a, None)))
        .collect();
    rows.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut out = String::from("alpha,value,kind,status\n");
    for (a, v) in rows {
        let status = match v {
            None => "dropped",
            Some(_) if curve.transitions.contains(&a) => "transition",
            Some(_) => "ok",
        };
        let value = v.map(sig12).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", sig12(a), value, kind, status));
    }
    out
}

pub fn parse_curve_csv(text: &str) -> Result<SpectrumCurve, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("alpha,value,kind,status") => {}
        other => return Err(format!("bad header: {other:?}")),
    }
    let mut kind = None;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut transitions = Vec::new();
    let mut dropped = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format!("row {}: expected 4 fields", ln + 2));
        }
        let alpha: f64 = fields[0]
            .parse()
            .map_err(|e| format!("row {}: alpha: {e}", ln + 2))?;
        let row_kind = match fields[2] {
            "packing" => SpectrumKind::PackingBirkhoff,
            "hausdorff" => SpectrumKind::HausdorffBirkhoff,
            "localdim" => SpectrumKind::LocalDim,
            "localdim-lower" => SpectrumKind::LocalDimLower,
            other => return Err(format!("row {}: unknown kind {other}", ln + 2)),
        };
        match kind {
            None => kind = Some(row_kind),
            Some(k) if k == row_kind => {}
            Some(_) => return Err(format!("row {}: mixed kinds", ln + 2)),
        }
        match fields[3] {
            "dropped" => dropped.push(alpha),
            status @ ("ok" | "transition") => {
                let value: f64 = fields[1]
                    .parse()
                    .map_err(|e| format!("row {}: value: {e}", ln + 2))?;
                grid.push(alpha);
                values.push(value);
                if status == "transition" {
                    transitions.push(alpha);
                }
            }
            other => return Err(format!("row {}: unknown status {other}", ln + 2)),
        }
    }
    Ok(SpectrumCurve {
        kind: kind.ok_or("empty curve")?,
        grid,
        values,
        transitions,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_curve_to_12_digits() {
        let curve = SpectrumCurve {
            kind: SpectrumKind::PackingBirkhoff,
            grid: vec![0.0, 0.25, 0.5, 0.75],
            values: vec![0.63092975357, 1.2, 1.315, 1.1],
            transitions: vec![0.5],
            dropped: vec![0.9],
        };
        let csv = curve_to_csv(&curve);
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
        let back = parse_curve_csv(&csv).unwrap();
        assert_eq!(back.kind, curve.kind);
        assert_eq!(back.grid.len(), curve.grid.len());
        for (a, b) in back.values.iter().zip(&curve.values) {
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0));
        }
        assert_eq!(back.transitions, vec![0.5]);
        assert_eq!(back.dropped, vec![0.9]);
    }

    #[test]
    fn sig12_is_parseable() {
        for &x in &[0.0, 1.0 / 3.0, -2.7e-13, 1.36907024643e0] {
            let s = sig12(x);
            let y: f64 = s.parse().unwrap();
            assert!((x - y).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }
}
