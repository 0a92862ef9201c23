//! Exhaustive grid oracle for small entropy programs.
//!
//! Enumerates every rational simplex point with a fixed denominator, admits
//! those satisfying the constraints within slack `2/resolution`, repairs each
//! admitted point to exact feasibility by moving mass between coordinate
//! pairs, and maximizes the objective over the repaired points. Repairing
//! keeps the oracle value a true lower bound on the solver's optimum while
//! the slack keeps near-optimal lattice points admissible.

use super::{EntropyProgram, ObjectiveTerm};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("no grid point satisfies the constraints within slack")]
    NoFeasibleGridPoint,
}

const REPAIR_TOL: f64 = 1e-12;

/// Moves mass between coordinates until `<a, p> = b`, preserving the simplex.
/// Returns false if the repair cannot be completed.
fn repair_equality(p: &mut [f64], a: &[f64], b: f64) -> bool {
    let m = p.len();
    for _ in 0..2 * m {
        let v: f64 = a.iter().zip(p.iter()).map(|(x, y)| x * y).sum();
        let resid = b - v;
        if resid.abs() <= REPAIR_TOL * (1.0 + b.abs()) {
            return true;
        }
        // best pair (to, from): gain per unit mass is a[to]-a[from]
        let mut best: Option<(usize, usize, f64)> = None;
        for to in 0..m {
            for from in 0..m {
                if to == from {
                    continue;
                }
                let gain = a[to] - a[from];
                if gain.abs() < 1e-15 || gain.signum() != resid.signum() {
                    continue;
                }
                let t_full = resid / gain;
                let t = t_full.min(p[from]);
                let fixed = t * gain;
                if best.is_none_or(|(_, _, bf)| fixed.abs() > bf.abs()) {
                    best = Some((to, from, fixed));
                }
            }
        }
        let Some((to, from, fixed)) = best else {
            return false;
        };
        if fixed.abs() < 1e-300 {
            return false;
        }
        let t = fixed / (a[to] - a[from]);
        p[to] += t;
        p[from] -= t;
    }
    let v: f64 = a.iter().zip(p.iter()).map(|(x, y)| x * y).sum();
    (b - v).abs() <= REPAIR_TOL * (1.0 + b.abs())
}

fn repair_all(
    p: &mut [f64],
    equalities: &[(Vec<f64>, f64)],
    boxes: &[(Vec<f64>, f64, f64)],
) -> bool {
    for _ in 0..5 {
        let mut clean = true;
        for (a, b) in equalities {
            let v: f64 = a.iter().zip(p.iter()).map(|(x, y)| x * y).sum();
            if (v - b).abs() > REPAIR_TOL * (1.0 + b.abs()) {
                clean = false;
                if !repair_equality(p, a, *b) {
                    return false;
                }
            }
        }
        for (g, lo, hi) in boxes {
            let v: f64 = g.iter().zip(p.iter()).map(|(x, y)| x * y).sum();
            if v < *lo - REPAIR_TOL {
                clean = false;
                if !repair_equality(p, g, *lo) {
                    return false;
                }
            } else if v > *hi + REPAIR_TOL {
                clean = false;
                if !repair_equality(p, g, *hi) {
                    return false;
                }
            }
        }
        if clean {
            return true;
        }
    }
    false
}

fn objective_value(terms: &[ObjectiveTerm], p: &[f64]) -> f64 {
    terms
        .iter()
        .map(|t| t.coeff * crate::measures::entropy_nats(&t.marginal(p)))
        .sum()
}

fn for_each_composition(m: usize, resolution: usize, mut f: impl FnMut(&[usize])) {
    let mut counts = vec![0usize; m];
    fn rec(counts: &mut [usize], idx: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if idx + 1 == counts.len() {
            counts[idx] = left;
            f(counts);
            return;
        }
        for k in 0..=left {
            counts[idx] = k;
            rec(counts, idx + 1, left - k, f);
        }
    }
    rec(&mut counts, 0, resolution, &mut f);
}

/// Maximum of the objective over repaired near-feasible grid points.
pub fn grid_maximize(prog: &EntropyProgram, resolution: usize) -> Result<f64, GridError> {
    assert!(prog.m <= 5, "grid oracle limited to alphabets of size <= 5");
    assert!(
        (1..=400).contains(&resolution),
        "grid resolution limited to 400"
    );
    let slack = 2.0 / resolution as f64 + 1e-12;
    let mut best: Option<f64> = None;
    let mut p = vec![0.0; prog.m];
    for_each_composition(prog.m, resolution, |counts| {
        for (pi, &k) in p.iter_mut().zip(counts) {
            *pi = k as f64 / resolution as f64;
        }
        for (a, b) in &prog.equalities {
            let v: f64 = a.iter().zip(&p).map(|(x, y)| x * y).sum();
            if (v - b).abs() > slack {
                return;
            }
        }
        for (g, lo, hi) in &prog.boxes {
            let v: f64 = g.iter().zip(&p).map(|(x, y)| x * y).sum();
            if v < lo - slack || v > hi + slack {
                return;
            }
        }
        let mut q = p.clone();
        if !repair_all(&mut q, &prog.equalities, &prog.boxes) {
            return;
        }
        let val = objective_value(&prog.terms, &q);
        if best.is_none_or(|b| val > b) {
            best = Some(val);
        }
    });
    best.ok_or(GridError::NoFeasibleGridPoint)
}

/// Shared-enumeration oracle: one scan of the grid evaluates several
/// objectives against several targets of the same scalar constraint
/// functional. Entry `[t][o]` is the best value of objective `o` among
/// repaired grid points with `<functional, p> = targets[t]`, or None when no
/// grid point is admissible for that target.
pub fn grid_maximize_shared(
    m: usize,
    objectives: &[Vec<ObjectiveTerm>],
    functional: &[f64],
    targets: &[f64],
    resolution: usize,
) -> Vec<Vec<Option<f64>>> {
    assert!(m <= 5 && (1..=400).contains(&resolution));
    let slack = 2.0 / resolution as f64 + 1e-12;
    let mut best = vec![vec![None; objectives.len()]; targets.len()];
    let mut p = vec![0.0; m];
    for_each_composition(m, resolution, |counts| {
        for (pi, &k) in p.iter_mut().zip(counts) {
            *pi = k as f64 / resolution as f64;
        }
        let v: f64 = functional.iter().zip(&p).map(|(x, y)| x * y).sum();
        for (t, &target) in targets.iter().enumerate() {
            if (v - target).abs() > slack {
                continue;
            }
            let mut q = p.clone();
            if !repair_equality(&mut q, functional, target) {
                continue;
            }
            for (o, terms) in objectives.iter().enumerate() {
                let val = objective_value(terms, &q);
                if best[t][o].is_none_or(|b| val > b) {
                    best[t][o] = Some(val);
                }
            }
        }
    });
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::maximize_entropy_program;

    #[test]
    fn unconstrained_grid_close_to_log3() {
        let prog = EntropyProgram::new(3, vec![ObjectiveTerm::identity(3, 1.0)]);
        let val = grid_maximize(&prog, 300).unwrap();
        assert!((val - 3f64.ln()).abs() < 2e-3);
        assert!(val <= 3f64.ln() + 1e-12);
    }

    #[test]
    fn infeasible_constraints_reported() {
        let prog = EntropyProgram::new(3, vec![ObjectiveTerm::identity(3, 1.0)])
            .with_equality(vec![0.0, 1.0, 1.0], 2.0);
        assert_eq!(
            grid_maximize(&prog, 100),
            Err(GridError::NoFeasibleGridPoint)
        );
    }

    #[test]
    fn repaired_points_are_exactly_feasible() {
        let a = vec![0.0, 1.0, 0.0];
        let mut p = vec![0.34, 0.33, 0.33];
        assert!(repair_equality(&mut p, &a, 0.5));
        assert!((p[1] - 0.5).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn solver_never_below_grid() {
        // Example-1 packing H^1 at alpha = 1/2
        let phi = vec![0.0, 1.0, 0.0];
        let prog = EntropyProgram::new(3, vec![ObjectiveTerm::identity(3, 1.0)])
            .with_equality(phi, 0.5);
        let rep = maximize_entropy_program(&prog);
        let grid = grid_maximize(&prog, 200).unwrap();
        assert!(rep.value >= grid - 1e-9);
        assert!((rep.value - grid).abs() < 3e-3);
    }
}
