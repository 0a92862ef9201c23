//! Dense two-phase primal simplex for small linear programs.
//!
//! Every LP in this crate is tiny (at most a few hundred variables, a few
//! dozen rows), so a dense tableau with Bland's anti-cycling rule is the
//! robust choice. All variables are nonnegative; callers encode free
//! quantities by substitution.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

impl Constraint {
    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, rel: Rel::Eq, rhs }
    }
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, rel: Rel::Le, rhs }
    }
    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, rel: Rel::Ge, rhs }
    }
}

#[derive(Clone, Debug)]
pub enum LpResult {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-8;

struct Tableau {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    n_total: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_total]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        debug_assert!(piv.abs() > PIVOT_EPS);
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                r[col] = 0.0;
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations with Bland's rule on the columns in
    /// `0..allowed`. Returns false when the LP is unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        // Bland's rule terminates finitely; the cap is a safety net against
        // numerical stalls.
        let cap = 200_000usize;
        for _ in 0..cap {
            let mut entering = None;
            for j in 0..allowed {
                if self.cost[j] < -COST_EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
        true
    }
}

/// Solves `min/max objective . x` subject to the constraints and `x >= 0`.
pub fn solve_lp(
    n_vars: usize,
    objective: &[f64],
    maximize: bool,
    constraints: &[Constraint],
) -> LpResult {
    assert_eq!(objective.len(), n_vars);
    let m = constraints.len();

    // Count auxiliary columns: one slack per inequality, one artificial per
    // Eq/Ge row (after normalizing rhs >= 0).
    let mut n_slack = 0;
    for c in constraints {
        if c.rel != Rel::Eq {
            n_slack += 1;
        }
    }
    let n_total = n_vars + n_slack + m;
    let art_base = n_vars + n_slack;

    let mut rows = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut slack_idx = n_vars;
    let mut n_art = 0usize;
    for (i, c) in constraints.iter().enumerate() {
        assert_eq!(c.coeffs.len(), n_vars, "constraint arity mismatch");
        let flip = c.rhs < 0.0;
        let sgn = if flip { -1.0 } else { 1.0 };
        let rel = match (c.rel, flip) {
            (Rel::Eq, _) => Rel::Eq,
            (Rel::Le, false) | (Rel::Ge, true) => Rel::Le,
            (Rel::Le, true) | (Rel::Ge, false) => Rel::Ge,
        };
        let mut row = vec![0.0; n_total + 1];
        for (j, &a) in c.coeffs.iter().enumerate() {
            row[j] = sgn * a;
        }
        row[n_total] = sgn * c.rhs;
        match rel {
            Rel::Le => {
                row[slack_idx] = 1.0;
                basis[i] = slack_idx;
                slack_idx += 1;
            }
            Rel::Ge => {
                row[slack_idx] = -1.0;
                slack_idx += 1;
                row[art_base + n_art] = 1.0;
                basis[i] = art_base + n_art;
                n_art += 1;
            }
            Rel::Eq => {
                row[art_base + n_art] = 1.0;
                basis[i] = art_base + n_art;
                n_art += 1;
            }
        }
        rows.push(row);
    }
    let n_used = art_base + n_art;
    for row in rows.iter_mut() {
        row.truncate(n_used);
        row.push(0.0); // placeholder, fixed below
    }
    // Rebuild with rhs at position n_used.
    for (row, c) in rows.iter_mut().zip(constraints) {
        let sgn = if c.rhs < 0.0 { -1.0 } else { 1.0 };
        row[n_used] = sgn * c.rhs;
    }

    let mut tab = Tableau {
        rows,
        cost: vec![0.0; n_used + 1],
        basis,
        n_total: n_used,
    };

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        for j in art_base..n_used {
            tab.cost[j] = 1.0;
        }
        for i in 0..m {
            if tab.basis[i] >= art_base {
                let row = tab.rows[i].clone();
                for (v, rv) in tab.cost.iter_mut().zip(&row) {
                    *v -= rv;
                }
            }
        }
        if !tab.run(n_used) {
            return LpResult::Infeasible; // phase 1 is always bounded
        }
        let phase1 = -tab.cost[n_used];
        if phase1 > FEAS_EPS {
            return LpResult::Infeasible;
        }
        // Pivot remaining artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= art_base {
                let col = (0..art_base).find(|&j| tab.rows[i][j].abs() > PIVOT_EPS);
                if let Some(j) = col {
                    tab.pivot(i, j);
                }
                // otherwise the row is redundant (all-zero in structurals)
            }
        }
    }

    // Phase 2 with the real objective over structural columns only.
    let mut cost = vec![0.0; n_used + 1];
    for j in 0..n_vars {
        cost[j] = if maximize { -objective[j] } else { objective[j] };
    }
    tab.cost = cost;
    for i in 0..m {
        let b = tab.basis[i];
        if b < n_used && tab.cost[b] != 0.0 {
            let factor = tab.cost[b];
            let row = tab.rows[i].clone();
            for (v, rv) in tab.cost.iter_mut().zip(&row) {
                *v -= factor * rv;
            }
            tab.cost[b] = 0.0;
        }
    }
    if !tab.run(art_base) {
        return LpResult::Unbounded;
    }

    let mut x = vec![0.0; n_vars];
    for i in 0..m {
        let b = tab.basis[i];
        if b < n_vars {
            x[b] = tab.rhs(i).max(0.0);
        }
    }
    let raw = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpResult::Optimal { x, value: raw }
}

/// Finds any feasible point, or None.
pub fn feasible_point(n_vars: usize, constraints: &[Constraint]) -> Option<Vec<f64>> {
    match solve_lp(n_vars, &vec![0.0; n_vars], false, constraints) {
        LpResult::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// Exact range of a linear functional over the constraint polytope.
pub fn functional_range(
    n_vars: usize,
    functional: &[f64],
    constraints: &[Constraint],
) -> Option<(f64, f64)> {
    let lo = match solve_lp(n_vars, functional, false, constraints) {
        LpResult::Optimal { value, .. } => value,
        _ => return None,
    };
    let hi = match solve_lp(n_vars, functional, true, constraints) {
        LpResult::Optimal { value, .. } => value,
        _ => return None,
    };
    Some((lo, hi))
}
