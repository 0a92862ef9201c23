//! Minimal hand-emitted SVG plots, byte-deterministic for fixed inputs.
//! No plotting dependency: a viewBox, axis lines, tick labels, one
//! polyline, and dashed markers at detected transitions.

use crate::spectra::SpectrumCurve;
use std::fmt::Write;

const W: f64 = 800.0;
const H: f64 = 520.0;
const ML: f64 = 72.0; // left margin
const MR: f64 = 24.0;
const MT: f64 = 28.0;
const MB: f64 = 56.0;

fn fmt3(x: f64) -> String {
    format!("{:.3}", x)
}

pub fn curve_to_svg(curve: &SpectrumCurve) -> String {
    let (xlo, xhi) = match (curve.grid.first(), curve.grid.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    let ymax = curve
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(1e-9);
    let (ylo, yhi) = (0.0, ymax * 1.05);
    let sx = |x: f64| ML + (x - xlo) / (xhi - xlo) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        fmt3(ML),
        fmt3(H - MB),
        fmt3(W - MR),
        fmt3(H - MB)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        fmt3(ML),
        fmt3(MT),
        fmt3(ML),
        fmt3(H - MB)
    );
    // ticks
    for i in 0..=5 {
        let x = xlo + (xhi - xlo) * i as f64 / 5.0;
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>"#,
            fmt3(px),
            fmt3(H - MB),
            fmt3(H - MB + 5.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt3(px),
            fmt3(H - MB + 20.0),
            fmt3(x)
        );
        let y = ylo + (yhi - ylo) * i as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r#"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}" stroke="black"/>"#,
            fmt3(py),
            fmt3(ML - 5.0),
            fmt3(ML)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt3(ML - 8.0),
            fmt3(py + 4.0),
            fmt3(y)
        );
    }
    // axis labels and curve kind
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">alpha</text>"#,
        fmt3((ML + W - MR) / 2.0),
        fmt3(H - 12.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="start">dimension ({})</text>"#,
        fmt3(ML),
        fmt3(MT - 8.0),
        curve.kind.as_str()
    );
    // transitions
    for &t in &curve.transitions {
        let px = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="red" stroke-dasharray="4 3"/>"#,
            fmt3(px),
            fmt3(MT),
            fmt3(H - MB)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="red" text-anchor="middle">{}</text>"#,
            fmt3(px),
            fmt3(MT + 12.0),
            fmt3(t)
        );
    }
    // the spectrum polyline
    if !curve.grid.is_empty() {
        let pts: Vec<String> = curve
            .grid
            .iter()
            .zip(&curve.values)
            .map(|(&x, &y)| format!("{},{}", fmt3(sx(x)), fmt3(sy(y))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="blue" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SpectrumKind;

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let curve = SpectrumCurve {
            kind: SpectrumKind::PackingBirkhoff,
            grid: vec![0.0, 0.5, 1.0],
            values: vec![0.6, 1.3, 0.0],
            transitions: vec![0.5],
            dropped: Vec::new(),
        };
        let a = curve_to_svg(&curve);
        let b = curve_to_svg(&curve);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("polyline"));
        assert!(a.contains("stroke-dasharray"));
    }
}
