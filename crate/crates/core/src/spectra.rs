//! Multifractal spectra of Birkhoff averages for locally constant potentials.
//!
//! The packing spectrum at level alpha is the weighted sum of d independent
//! maxima: for each k, maximize the level-k projected entropy over Bernoulli
//! measures with mean alpha. The Hausdorff spectrum is a single coupled
//! maximization of the weighted entropy under the same constraint. Both are
//! concave in alpha; the packing spectrum can fail to be analytic, and its
//! maximum reaches the packing dimension of the sponge exactly when
//! compatible uniform-marginal measures share a common mean.

use crate::dimension::{level_term, packing_dimension, weighted_entropy_terms};
use crate::measures::ProbVector;
use crate::optimize::{
    self, lp, maximize_entropy_program, EntropyProgram, Status,
};
use crate::potential::Potential;
use crate::sponge::SpongeSpec;
use rayon::prelude::*;

/// Snap tolerance for alphas that fall just outside the domain.
const ENDPOINT_SNAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("alpha lies outside the achievable-average domain A(phi)")]
    OutsideDomain,
    #[error("curve sampling requires a scalar potential")]
    NotScalar,
    #[error("the domain A(phi) is a single point; a multi-point grid is degenerate")]
    DegenerateDomain,
    #[error("phase-transition detection needs a uniform grid of at least 5 points")]
    GridTooCoarse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumKind {
    PackingBirkhoff,
    HausdorffBirkhoff,
    LocalDim,
    LocalDimLower,
}

impl SpectrumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumKind::PackingBirkhoff => "packing",
            SpectrumKind::HausdorffBirkhoff => "hausdorff",
            SpectrumKind::LocalDim => "localdim",
            SpectrumKind::LocalDimLower => "localdim-lower",
        }
    }
}

/// A sampled spectrum: values over a strictly increasing alpha grid, with
/// infeasible grid points dropped and non-smooth points flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumCurve {
    pub kind: SpectrumKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub transitions: Vec<f64>,
    /// Grid points that turned out infeasible and were dropped.
    pub dropped: Vec<f64>,
}

/// The interval A(phi) of achievable Birkhoff averages of a scalar locally
/// constant potential: the convex hull of the digit values.
pub fn birkhoff_interval(spec: &SpongeSpec, phi: &Potential) -> Result<(f64, f64), SpectrumError> {
    if !phi.is_scalar() {
        return Err(SpectrumError::NotScalar);
    }
    let _ = spec;
    let vals = phi.component(0);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Membership test for A(phi), valid for any arity: is some Bernoulli mean
/// equal to alpha? (For vector potentials this is an LP feasibility check.)
pub fn birkhoff_contains(spec: &SpongeSpec, phi: &Potential, alpha: &[f64]) -> bool {
    assert_eq!(alpha.len(), phi.arity());
    let m = spec.digit_count();
    let eqs: Vec<(Vec<f64>, f64)> = (0..phi.arity())
        .map(|j| (phi.component(j), alpha[j]))
        .collect();
    let cons = optimize::constraint_rows(m, &eqs, &[]);
    lp::feasible_point(m, &cons).is_some()
}

/// Snaps a scalar alpha onto [lo, hi] when within the endpoint tolerance.
fn snap_scalar(alpha: f64, lo: f64, hi: f64) -> Option<f64> {
    if alpha < lo {
        (lo - alpha <= ENDPOINT_SNAP).then_some(lo)
    } else if alpha > hi {
        (alpha - hi <= ENDPOINT_SNAP).then_some(hi)
    } else {
        Some(alpha)
    }
}

fn checked_alpha(
    spec: &SpongeSpec,
    phi: &Potential,
    alpha: &[f64],
) -> Result<Vec<f64>, SpectrumError> {
    assert_eq!(
        alpha.len(),
        phi.arity(),
        "alpha arity does not match the potential"
    );
    if phi.is_scalar() {
        let (lo, hi) = birkhoff_interval(spec, phi)?;
        let a = snap_scalar(alpha[0], lo, hi).ok_or(SpectrumError::OutsideDomain)?;
        return Ok(vec![a]);
    }
    if birkhoff_contains(spec, phi, alpha) {
        Ok(alpha.to_vec())
    } else {
        Err(SpectrumError::OutsideDomain)
    }
}

fn mean_equalities(phi: &Potential, alpha: &[f64]) -> Vec<(Vec<f64>, f64)> {
    (0..phi.arity())
        .map(|j| (phi.component(j), alpha[j]))
        .collect()
}

/// Packing spectrum of the Birkhoff level set at alpha:
/// `sum_k w_k * max { h(eta_k p) : mean(p, phi) = alpha }`, one independent
/// maximization per level.
pub fn packing_spectrum_point(
    spec: &SpongeSpec,
    phi: &Potential,
    alpha: &[f64],
) -> Result<f64, SpectrumError> {
    let alpha = checked_alpha(spec, phi, alpha)?;
    let eqs = mean_equalities(phi, &alpha);
    let wts = spec.dimension_weights();
    let mut total = 0.0;
    for k in 1..=spec.d() {
        let mut prog = EntropyProgram::new(spec.digit_count(), vec![level_term(spec, k)]);
        prog.equalities = eqs.clone();
        let rep = maximize_entropy_program(&prog);
        if rep.status == Status::Infeasible {
            return Err(SpectrumError::OutsideDomain);
        }
        total += wts.w[k - 1] * rep.value;
    }
    Ok(total)
}

/// Hausdorff spectrum of the Birkhoff level set at alpha: one coupled
/// maximization of the weighted entropy subject to the mean constraint.
pub fn hausdorff_spectrum_point(
    spec: &SpongeSpec,
    phi: &Potential,
    alpha: &[f64],
) -> Result<f64, SpectrumError> {
    let alpha = checked_alpha(spec, phi, alpha)?;
    let mut prog = EntropyProgram::new(spec.digit_count(), weighted_entropy_terms(spec));
    prog.equalities = mean_equalities(phi, &alpha);
    let rep = maximize_entropy_program(&prog);
    if rep.status == Status::Infeasible {
        return Err(SpectrumError::OutsideDomain);
    }
    Ok(rep.value)
}

/// Packing dimension of the divergence set E_phi(A) for a box A: each level
/// maximizes its projected entropy over measures whose mean lies in A.
pub fn divergence_spectrum(
    spec: &SpongeSpec,
    phi: &Potential,
    boxes: &[(f64, f64)],
) -> Result<f64, SpectrumError> {
    assert_eq!(boxes.len(), phi.arity(), "box arity mismatch");
    for &(lo, hi) in boxes {
        assert!(lo <= hi, "box bounds out of order");
    }
    let box_rows: Vec<(Vec<f64>, f64, f64)> = (0..phi.arity())
        .map(|j| (phi.component(j), boxes[j].0, boxes[j].1))
        .collect();
    // A must intersect A(phi)
    let cons = optimize::constraint_rows(spec.digit_count(), &[], &box_rows);
    if lp::feasible_point(spec.digit_count(), &cons).is_none() {
        return Err(SpectrumError::OutsideDomain);
    }
    let wts = spec.dimension_weights();
    let mut total = 0.0;
    for k in 1..=spec.d() {
        let mut prog = EntropyProgram::new(spec.digit_count(), vec![level_term(spec, k)]);
        prog.boxes = box_rows.clone();
        let rep = maximize_entropy_program(&prog);
        if rep.status == Status::Infeasible {
            return Err(SpectrumError::OutsideDomain);
        }
        total += wts.w[k - 1] * rep.value;
    }
    Ok(total)
}

/// Grid specification for curve sampling.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub count: usize,
    /// Overrides the sampled alpha range (defaults to all of A(phi)).
    pub range: Option<(f64, f64)>,
}

impl GridSpec {
    pub fn new(count: usize) -> Self {
        GridSpec { count, range: None }
    }
}

/// Samples a spectrum over a uniform alpha grid. Points are evaluated
/// concurrently; the output ordering and values are deterministic.
pub fn spectrum_curve(
    spec: &SpongeSpec,
    phi: &Potential,
    grid: GridSpec,
    kind: SpectrumKind,
) -> Result<SpectrumCurve, SpectrumError> {
    if !phi.is_scalar() {
        return Err(SpectrumError::NotScalar);
    }
    let (dlo, dhi) = birkhoff_interval(spec, phi)?;
    let (lo, hi) = match grid.range {
        Some((a, b)) => {
            let a = snap_scalar(a, dlo, dhi).ok_or(SpectrumError::OutsideDomain)?;
            let b = snap_scalar(b, dlo, dhi).ok_or(SpectrumError::OutsideDomain)?;
            if a > b {
                return Err(SpectrumError::OutsideDomain);
            }
            (a, b)
        }
        None => (dlo, dhi),
    };
    if hi - lo < 1e-12 {
        if grid.count > 1 {
            return Err(SpectrumError::DegenerateDomain);
        }
        let value = point_eval(spec, phi, lo, kind)?;
        return Ok(SpectrumCurve {
            kind,
            grid: vec![lo],
            values: vec![value],
            transitions: Vec::new(),
            dropped: Vec::new(),
        });
    }
    assert!(grid.count >= 3, "curve grids need at least 3 points");
    let n = grid.count;
    let alphas: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let results: Vec<(f64, Option<f64>)> = alphas
        .par_iter()
        .map(|&a| (a, point_eval(spec, phi, a, kind).ok()))
        .collect();
    let mut out_grid = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    for (a, v) in results {
        match v {
            Some(v) => {
                out_grid.push(a);
                values.push(v);
            }
            None => dropped.push(a),
        }
    }
    let mut curve = SpectrumCurve {
        kind,
        grid: out_grid,
        values,
        transitions: Vec::new(),
        dropped,
    };
    if curve.grid.len() >= 5 && curve.dropped.is_empty() {
        if let Ok(tr) = detect_phase_transitions(&curve) {
            curve.transitions = tr;
        }
    }
    debug_assert!(curve.grid.windows(2).all(|w| w[0] < w[1]));
    debug_assert!({
        let cap = packing_dimension(spec) + 1e-6;
        curve.values.iter().all(|&v| (-1e-9..=cap).contains(&v))
    });
    Ok(curve)
}

fn point_eval(
    spec: &SpongeSpec,
    phi: &Potential,
    alpha: f64,
    kind: SpectrumKind,
) -> Result<f64, SpectrumError> {
    match kind {
        SpectrumKind::PackingBirkhoff => packing_spectrum_point(spec, phi, &[alpha]),
        SpectrumKind::HausdorffBirkhoff => hausdorff_spectrum_point(spec, phi, &[alpha]),
        SpectrumKind::LocalDim | SpectrumKind::LocalDimLower => {
            panic!("local-dimension curves are sampled by the localdim module")
        }
    }
}

/// Locates second-order phase transitions: grid points where the centered
/// second difference jumps relative to its neighbors. The jump must exceed
/// five times the smaller neighboring jump (and an absolute noise floor);
/// adjacent detections merge into one report, localized to one grid step.
pub fn detect_phase_transitions(curve: &SpectrumCurve) -> Result<Vec<f64>, SpectrumError> {
    let n = curve.grid.len();
    if n < 5 {
        return Err(SpectrumError::GridTooCoarse);
    }
    let step = curve.grid[1] - curve.grid[0];
    let uniform = curve
        .grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() < 1e-9 * step.abs().max(1e-300));
    if !uniform {
        return Err(SpectrumError::GridTooCoarse);
    }
    let v = &curve.values;
    // second differences s[j] at grid j (valid 1..n-1), their jumps t[i]
    let s: Vec<f64> = v.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let t: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    if t.len() < 2 {
        return Err(SpectrumError::GridTooCoarse);
    }
    let scale = 1.0 + v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let floor = 1e-7 * scale;
    let mut flagged = Vec::new();
    // The outermost jump indices are excluded: entropy-type spectra have a
    // steep curvature signature at the domain endpoints that mimics a jump,
    // and a transition there could not be localized anyway.
    for i in 1..t.len().saturating_sub(1) {
        let local = t[i - 1].abs().min(t[i + 1].abs());
        if t[i].abs() > 5.0 * local.max(floor) {
            flagged.push(i);
        }
    }
    // merge adjacent flags; t[i] sits between grid points i+1 and i+2
    let mut out = Vec::new();
    let mut start = None;
    let mut prev = 0usize;
    for &i in &flagged {
        match start {
            None => {
                start = Some(i);
                prev = i;
            }
            Some(s0) => {
                if i <= prev + 2 {
                    prev = i;
                } else {
                    out.push(cluster_alpha(curve, s0, prev));
                    start = Some(i);
                    prev = i;
                }
            }
        }
    }
    if let Some(s0) = start {
        out.push(cluster_alpha(curve, s0, prev));
    }
    Ok(out)
}

fn cluster_alpha(curve: &SpectrumCurve, first: usize, last: usize) -> f64 {
    // cluster of jumps t[first..=last] brackets the kink grid point
    let idx = (first + last + 2).div_ceil(2);
    curve.grid[idx.min(curve.grid.len() - 1)]
}

/// Report from a concavity audit of a sampled curve.
#[derive(Clone, Copy, Debug)]
pub struct ConcavityReport {
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that all centered second differences are nonpositive up to a
/// relative tolerance, as concavity of the spectrum demands.
pub fn verify_concavity(curve: &SpectrumCurve) -> ConcavityReport {
    let v = &curve.values;
    let mut worst = 0.0f64;
    for j in 1..v.len().saturating_sub(1) {
        worst = worst.max(v[j - 1] - 2.0 * v[j] + v[j + 1]);
    }
    let scale = 1.0 + v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let tolerance = 1e-7 * scale;
    ConcavityReport {
        max_violation: worst,
        tolerance,
        pass: worst <= tolerance,
    }
}

/// Does the packing spectrum attain the full packing dimension? Returns the
/// witness alpha when, for every level k, some Bernoulli measure has a
/// uniform level-k marginal and mean alpha. The level-1 condition forces
/// alpha to be the mean of the uniform measure.
pub fn full_dim_attainment(spec: &SpongeSpec, phi: &Potential) -> Option<Vec<f64>> {
    let m = spec.digit_count();
    let uniform = ProbVector::uniform(spec.digits().to_vec());
    let alpha = crate::measures::potential_mean(&uniform, phi);
    for k in 2..=spec.d() {
        let alphabet = spec.projected_alphabet(k);
        let (class_of, n_classes) = spec.projection_classes(k);
        let target = 1.0 / alphabet.len() as f64;
        let mut cons = vec![lp::Constraint::eq(vec![1.0; m], 1.0)];
        for cls in 0..n_classes {
            let row: Vec<f64> = class_of
                .iter()
                .map(|&c| if c == cls { 1.0 } else { 0.0 })
                .collect();
            cons.push(lp::Constraint::eq(row, target));
        }
        for (j, &aj) in alpha.iter().enumerate() {
            cons.push(lp::Constraint::eq(phi.component(j), aj));
        }
        lp::feasible_point(m, &cons)?;
    }
    Some(alpha)
}
