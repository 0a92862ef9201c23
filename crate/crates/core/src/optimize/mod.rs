//! Concave entropy maximization over the probability simplex.
//!
//! The solver kernel maximizes nonnegative combinations of entropies of
//! partition marginals of a simplex point, subject to linear equality and
//! box constraints:
//!
//! ```text
//!   maximize   sum_t c_t * h(L_t p)
//!   subject to p in the m-simplex, <a_j, p> = b_j, lo_l <= <g_l, p> <= hi_l
//! ```
//!
//! where each `L_t` is a partition (marginalization) map. The objective is
//! concave, so the Lagrangian dual certifies global optimality. The dual
//! function is evaluated in closed form when the partitions form a
//! refinement chain (they always do for sponge projections): collapsing the
//! alphabet level by level turns the inner maximization into nested
//! log-sum-exp reductions. Equality multipliers are found by bisection
//! (one constraint), damped Newton (smooth multi-constraint case), or the
//! ellipsoid method (nonsmooth multi-constraint case); box constraints go
//! through an active-set loop. The reported maximizer is recovered by a
//! small LP that resolves boundary ties, and the report carries an explicit
//! duality-gap certificate.

pub mod grid;
pub mod lp;
mod solver;

pub use grid::{grid_maximize, grid_maximize_shared, GridError};

/// One objective term: a partition of the alphabet and a coefficient.
///
/// `class_of[i]` is the class index of symbol `i`; this encodes a 0/1
/// matrix with exactly one 1 per column.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveTerm {
    pub class_of: Vec<usize>,
    pub n_classes: usize,
    pub coeff: f64,
}

impl ObjectiveTerm {
    pub fn new(class_of: Vec<usize>, n_classes: usize, coeff: f64) -> Self {
        assert!(coeff >= 0.0, "objective coefficients must be nonnegative");
        assert!(
            class_of.iter().all(|&c| c < n_classes),
            "class index out of range"
        );
        ObjectiveTerm {
            class_of,
            n_classes,
            coeff,
        }
    }

    /// The identity partition (full entropy term).
    pub fn identity(m: usize, coeff: f64) -> Self {
        ObjectiveTerm::new((0..m).collect(), m, coeff)
    }

    pub(crate) fn marginal(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n_classes];
        for (&c, &pi) in self.class_of.iter().zip(p) {
            q[c] += pi;
        }
        q
    }
}

/// An entropy-maximization program over the m-simplex.
#[derive(Clone, Debug)]
pub struct EntropyProgram {
    pub m: usize,
    pub terms: Vec<ObjectiveTerm>,
    /// Equality constraints `<a, p> = b`.
    pub equalities: Vec<(Vec<f64>, f64)>,
    /// Box constraints `lo <= <g, p> <= hi`.
    pub boxes: Vec<(Vec<f64>, f64, f64)>,
}

impl EntropyProgram {
    pub fn new(m: usize, terms: Vec<ObjectiveTerm>) -> Self {
        assert!(m >= 1);
        for t in &terms {
            assert_eq!(t.class_of.len(), m, "term arity mismatch");
        }
        EntropyProgram {
            m,
            terms,
            equalities: Vec::new(),
            boxes: Vec::new(),
        }
    }

    pub fn with_equality(mut self, a: Vec<f64>, b: f64) -> Self {
        assert_eq!(a.len(), self.m);
        self.equalities.push((a, b));
        self
    }

    pub fn with_box(mut self, g: Vec<f64>, lo: f64, hi: f64) -> Self {
        assert_eq!(g.len(), self.m);
        assert!(lo <= hi, "box bounds out of order");
        self.boxes.push((g, lo, hi));
        self
    }

    /// Objective value at a simplex point.
    pub fn objective(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * crate::measures::entropy_nats(&t.marginal(p)))
            .sum()
    }

    /// Worst constraint violation at `p` (simplex, equalities, boxes).
    pub fn infeasibility(&self, p: &[f64]) -> f64 {
        let mut worst = (p.iter().sum::<f64>() - 1.0).abs();
        for &x in p {
            worst = worst.max(-x);
        }
        for (a, b) in &self.equalities {
            let v: f64 = a.iter().zip(p).map(|(ai, pi)| ai * pi).sum();
            worst = worst.max((v - b).abs());
        }
        for (g, lo, hi) in &self.boxes {
            let v: f64 = g.iter().zip(p).map(|(gi, pi)| gi * pi).sum();
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIterations,
}

/// Solve report. When `status == Optimal` the maximizer is feasible within
/// 1e-9, `value` is the objective at the maximizer, and the duality gap
/// estimate is at most 1e-8.
#[derive(Clone, Debug)]
pub struct OptReport {
    pub status: Status,
    pub value: f64,
    pub maximizer: Vec<f64>,
    pub duality_gap_estimate: f64,
    pub iterations: usize,
}

/// Feasibility tolerance required of a certified maximizer.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Duality gap required for `Status::Optimal`.
pub const GAP_TOL: f64 = 1e-8;

/// Globally maximizes the program. Deterministic for fixed inputs.
pub fn maximize_entropy_program(prog: &EntropyProgram) -> OptReport {
    solver::solve(prog)
}

/// Exact range of a linear functional over the program's constraint
/// polytope (the simplex cut by the equalities and boxes), or None when the
/// polytope is empty.
pub fn feasible_interval(
    m: usize,
    equalities: &[(Vec<f64>, f64)],
    boxes: &[(Vec<f64>, f64, f64)],
    functional: &[f64],
) -> Option<(f64, f64)> {
    let cons = constraint_rows(m, equalities, boxes);
    lp::functional_range(m, functional, &cons)
}

/// LP rows for the constraint polytope, including the simplex equality.
pub(crate) fn constraint_rows(
    m: usize,
    equalities: &[(Vec<f64>, f64)],
    boxes: &[(Vec<f64>, f64, f64)],
) -> Vec<lp::Constraint> {
    let mut cons = vec![lp::Constraint::eq(vec![1.0; m], 1.0)];
    for (a, b) in equalities {
        cons.push(lp::Constraint::eq(a.clone(), *b));
    }
    for (g, lo, hi) in boxes {
        cons.push(lp::Constraint::ge(g.clone(), *lo));
        cons.push(lp::Constraint::le(g.clone(), *hi));
    }
    cons
}
