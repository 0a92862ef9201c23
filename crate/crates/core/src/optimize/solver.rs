//! Solver internals: closed-form inner maximization over refinement chains,
//! dual search (bisection / Newton / ellipsoid), box active sets, and primal
//! recovery with a duality-gap certificate.

use super::lp::{self, Constraint};
use super::{EntropyProgram, ObjectiveTerm, OptReport, Status, FEASIBILITY_TOL, GAP_TOL};

const SUPPORT_TOL: f64 = 1e-11;
const TIE_TOL: f64 = 1e-9;
const MAX_INNER_EVALS: usize = 100_000;

/// Two-sided dual term for a box multiplier: `mu*hi` when pushing down,
/// `mu*lo` when pushing up.
fn box_support(mu: f64, lo: f64, hi: f64) -> f64 {
    if mu >= 0.0 {
        mu * hi
    } else {
        mu * lo
    }
}

// ---------------------------------------------------------------------------
// Partition chains and the closed-form inner maximization
// ---------------------------------------------------------------------------

/// Nested partitions from finest (identity) to coarsest, with the summed
/// objective coefficient at each granularity.
struct Chain {
    /// coeffs[t] is the coefficient attached to granularity t.
    coeffs: Vec<f64>,
    sizes: Vec<usize>,
    /// members[t][g]: level-(t-1) classes composing level-t class g.
    members: Vec<Vec<Vec<usize>>>,
    /// class_at[t][i]: level-t class of symbol i.
    class_at: Vec<Vec<usize>>,
    /// Finest granularity with positive coefficient, if any.
    finest_entropy: Option<usize>,
}

fn canonical_partition(class_of: &[usize]) -> (Vec<usize>, usize) {
    let mut relabel = vec![usize::MAX; class_of.iter().max().map_or(0, |&c| c + 1)];
    let mut next = 0usize;
    let mut out = Vec::with_capacity(class_of.len());
    for &c in class_of {
        if relabel[c] == usize::MAX {
            relabel[c] = next;
            next += 1;
        }
        out.push(relabel[c]);
    }
    (out, next)
}

fn build_chain(m: usize, terms: &[ObjectiveTerm]) -> Option<Chain> {
    use std::collections::BTreeMap;
    let mut grouped: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for t in terms {
        if t.coeff == 0.0 {
            continue;
        }
        let (sig, _) = canonical_partition(&t.class_of);
        *grouped.entry(sig).or_insert(0.0) += t.coeff;
    }
    let mut parts: Vec<(Vec<usize>, f64)> = grouped.into_iter().collect();
    parts.sort_by(|a, b| {
        let na = a.0.iter().max().map_or(0, |&c| c + 1);
        let nb = b.0.iter().max().map_or(0, |&c| c + 1);
        nb.cmp(&na).then_with(|| a.0.cmp(&b.0))
    });
    let identity: Vec<usize> = (0..m).collect();
    if parts.first().map(|p| &p.0) != Some(&identity) {
        parts.insert(0, (identity, 0.0));
    }

    let mut coeffs = Vec::new();
    let mut maps = Vec::new();
    let mut sizes = Vec::new();
    let mut class_at: Vec<Vec<usize>> = Vec::new();
    for (t, (sig, coeff)) in parts.iter().enumerate() {
        let n_classes = sig.iter().max().unwrap() + 1;
        coeffs.push(*coeff);
        sizes.push(n_classes);
        class_at.push(sig.clone());
        if t == 0 {
            maps.push(Vec::new());
            continue;
        }
        // map level t-1 classes to level t classes; fails if not nested
        let prev = &class_at[t - 1];
        let prev_n = sizes[t - 1];
        let mut map = vec![usize::MAX; prev_n];
        for i in 0..m {
            let from = prev[i];
            let to = sig[i];
            if map[from] == usize::MAX {
                map[from] = to;
            } else if map[from] != to {
                return None;
            }
        }
        maps.push(map);
    }
    let members = {
        let mut out = vec![Vec::new()];
        for t in 1..sizes.len() {
            let mut groups = vec![Vec::new(); sizes[t]];
            for (r, &g) in maps[t].iter().enumerate() {
                groups[g].push(r);
            }
            out.push(groups);
        }
        out
    };
    let finest_entropy = coeffs.iter().position(|&c| c > 0.0);
    Some(Chain {
        coeffs,
        sizes,
        members,
        class_at,
        finest_entropy,
    })
}

impl Chain {
    fn smooth(&self) -> bool {
        // A max-collapse with a non-singleton group makes the dual kinked.
        let mut c_acc = self.coeffs[0];
        for t in 1..self.sizes.len() {
            if c_acc == 0.0 && self.members[t].iter().any(|g| g.len() > 1) {
                return false;
            }
            c_acc += self.coeffs[t];
        }
        // Mass at the top splits by argmax when every coefficient is zero.
        c_acc > 0.0 || self.sizes[self.sizes.len() - 1] == 1
    }
}

struct InnerResult {
    value: f64,
    p: Vec<f64>,
    /// Marginal at the finest positive-coefficient granularity.
    marginal_pin: Option<(usize, Vec<f64>)>,
    allowed: Vec<bool>,
}

/// `c * log sum exp(u/c)` for c > 0; max(u) as c -> 0.
fn scaled_lse(c: f64, us: &[f64]) -> f64 {
    let m = us.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if c <= 0.0 {
        return m;
    }
    let s: f64 = us.iter().map(|&u| ((u - m) / c).exp()).sum();
    m + c * s.ln()
}

fn argmax_exact(us: &[f64]) -> usize {
    let mut best = 0;
    for (i, &u) in us.iter().enumerate().skip(1) {
        if u > us[best] {
            best = i;
        }
    }
    best
}

fn scaled_softmax(c: f64, us: &[f64]) -> Vec<f64> {
    let m = us.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = us.iter().map(|&u| ((u - m) / c).exp()).collect();
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= s;
    }
    w
}

/// Exact maximizer of `sum_t c_t h(L_t p) + <v, p>` over the simplex, by
/// nested collapse along the chain.
fn inner_chain(chain: &Chain, v: &[f64]) -> InnerResult {
    let levels = chain.sizes.len();
    let mut us: Vec<Vec<f64>> = Vec::with_capacity(levels);
    us.push(v.to_vec());
    let mut c_acc = vec![0.0; levels + 1];
    c_acc[1] = chain.coeffs[0];
    for t in 1..levels {
        let prev = &us[t - 1];
        let c = c_acc[t];
        let mut next = Vec::with_capacity(chain.sizes[t]);
        for group in &chain.members[t] {
            let vals: Vec<f64> = group.iter().map(|&r| prev[r]).collect();
            next.push(scaled_lse(c, &vals));
        }
        us.push(next);
        c_acc[t + 1] = c_acc[t] + chain.coeffs[t];
    }
    let c_tot = c_acc[levels];
    let top = &us[levels - 1];
    let value = scaled_lse(c_tot, top);

    // top distribution
    let mut qs: Vec<Vec<f64>> = vec![Vec::new(); levels];
    let top_scale = 1.0 + top.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    qs[levels - 1] = if c_tot > 0.0 {
        scaled_softmax(c_tot, top)
    } else {
        // exact argmax: a tolerance here would displace the dual's kinks
        let first = argmax_exact(top);
        let mut q = vec![0.0; top.len()];
        q[first] = 1.0;
        q
    };
    // expand downward
    for t in (1..levels).rev() {
        let c = c_acc[t];
        let mut q_prev = vec![0.0; chain.sizes[t - 1]];
        for (g, group) in chain.members[t].iter().enumerate() {
            let mass = qs[t][g];
            if group.len() == 1 {
                q_prev[group[0]] = mass;
                continue;
            }
            let vals: Vec<f64> = group.iter().map(|&r| us[t - 1][r]).collect();
            if c > 0.0 {
                let w = scaled_softmax(c, &vals);
                for (&r, &wr) in group.iter().zip(&w) {
                    q_prev[r] = mass * wr;
                }
            } else {
                q_prev[group[argmax_exact(&vals)]] = mass;
            }
        }
        qs[t - 1] = q_prev;
    }

    // allowed supports under tie tolerance
    let mut allowed_classes: Vec<Vec<bool>> = vec![Vec::new(); levels];
    allowed_classes[levels - 1] = if c_tot > 0.0 {
        vec![true; top.len()]
    } else {
        let mx = top.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top.iter().map(|&u| u >= mx - TIE_TOL * top_scale).collect()
    };
    for t in (1..levels).rev() {
        let c = c_acc[t];
        let mut prev_allowed = vec![false; chain.sizes[t - 1]];
        for (g, group) in chain.members[t].iter().enumerate() {
            if !allowed_classes[t][g] {
                continue;
            }
            if c > 0.0 {
                for &r in group {
                    prev_allowed[r] = true;
                }
            } else {
                let vals: Vec<f64> = group.iter().map(|&r| us[t - 1][r]).collect();
                let scale = 1.0 + vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for (&r, &u) in group.iter().zip(&vals) {
                    if u >= mx - TIE_TOL * scale {
                        prev_allowed[r] = true;
                    }
                }
            }
        }
        allowed_classes[t - 1] = prev_allowed;
    }

    let marginal_pin = chain
        .finest_entropy
        .map(|t| (t, qs[t].clone()));
    InnerResult {
        value,
        p: qs[0].clone(),
        marginal_pin,
        allowed: allowed_classes[0].clone(),
    }
}

/// Mirror-ascent fallback for objective terms that do not form a chain.
/// Exponentiated gradient with Armijo backtracking from the uniform start.
fn inner_mirror_ascent(m: usize, terms: &[ObjectiveTerm], v: &[f64]) -> InnerResult {
    let phi = |p: &[f64]| -> f64 {
        let mut val: f64 = p.iter().zip(v).map(|(pi, vi)| pi * vi).sum();
        for t in terms {
            val += t.coeff * crate::measures::entropy_nats(&t.marginal(p));
        }
        val
    };
    let grad = |p: &[f64]| -> Vec<f64> {
        let margs: Vec<Vec<f64>> = terms.iter().map(|t| t.marginal(p)).collect();
        (0..m)
            .map(|i| {
                let mut g = v[i];
                for (t, q) in terms.iter().zip(&margs) {
                    let qi = q[t.class_of[i]].max(1e-300);
                    g -= t.coeff * (1.0 + qi.ln());
                }
                g
            })
            .collect()
    };
    let mut p = vec![1.0 / m as f64; m];
    let mut fp = phi(&p);
    let mut step = 1.0;
    for _ in 0..50_000 {
        let g = grad(&p);
        let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut improved = false;
        let mut eta = step;
        for _ in 0..40 {
            let mut cand: Vec<f64> = p
                .iter()
                .zip(&g)
                .map(|(pi, gi)| pi * ((gi - gmax) * eta).exp())
                .collect();
            let s: f64 = cand.iter().sum();
            for x in cand.iter_mut() {
                *x /= s;
            }
            let fc = phi(&cand);
            if fc > fp {
                let gain = fc - fp;
                p = cand;
                fp = fc;
                step = (eta * 2.0).min(1e6);
                improved = true;
                if gain < 1e-15 * (1.0 + fp.abs()) {
                    return InnerResult {
                        value: fp,
                        p,
                        marginal_pin: None,
                        allowed: vec![true; m],
                    };
                }
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    InnerResult {
        value: fp,
        p,
        marginal_pin: None,
        allowed: vec![true; m],
    }
}

// ---------------------------------------------------------------------------
// Restricted problem and dual search
// ---------------------------------------------------------------------------

struct Restricted {
    /// support indices into the original alphabet
    support: Vec<usize>,
    terms: Vec<ObjectiveTerm>,
    chain: Option<Chain>,
    equalities: Vec<(Vec<f64>, f64)>,
    boxes: Vec<(Vec<f64>, f64, f64)>,
    evals: std::cell::Cell<usize>,
}

impl Restricted {
    fn s(&self) -> usize {
        self.support.len()
    }

    fn inner(&self, v: &[f64]) -> InnerResult {
        self.evals.set(self.evals.get() + 1);
        match &self.chain {
            Some(chain) => inner_chain(chain, v),
            None => inner_mirror_ascent(self.s(), &self.terms, v),
        }
    }

    /// Dual value for equality multipliers over the given rows.
    fn dual(&self, rows: &[(Vec<f64>, f64)], lam: &[f64]) -> (f64, InnerResult) {
        let s = self.s();
        let mut v = vec![0.0; s];
        let mut shift = 0.0;
        for ((a, b), &l) in rows.iter().zip(lam) {
            for (vi, ai) in v.iter_mut().zip(a) {
                *vi -= l * ai;
            }
            shift += l * b;
        }
        let inner = self.inner(&v);
        (inner.value + shift, inner)
    }
}

struct EqSolution {
    p_hat: Vec<f64>,
    dual_value: f64,
    lam: Vec<f64>,
    /// Box multipliers, set only by the joint nonsmooth fallback.
    box_mu: Option<Vec<f64>>,
}

/// Drops constant and affinely dependent rows; returns kept row indices.
fn independent_rows(s: usize, rows: &[(Vec<f64>, f64)]) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (s as f64).sqrt(); s]];
    let mut kept = Vec::new();
    for (idx, (a, _)) in rows.iter().enumerate() {
        let scale = a.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let mut r = a.clone();
        for b in &basis {
            let dot: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in r.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-11 * (1.0 + scale) {
            for x in r.iter_mut() {
                *x /= norm;
            }
            basis.push(r);
            kept.push(idx);
        }
    }
    kept
}

fn solve_equalities(problem: &Restricted, rows: &[(Vec<f64>, f64)]) -> EqSolution {
    let s = problem.s();
    let kept_idx = independent_rows(s, rows);
    let kept: Vec<(Vec<f64>, f64)> = kept_idx.iter().map(|&i| rows[i].clone()).collect();

    let lam_kept = match kept.len() {
        0 => Vec::new(),
        1 => vec![scalar_dual(problem, &kept[0])],
        _ => {
            let smooth = problem
                .chain
                .as_ref()
                .map(|c| c.smooth())
                .unwrap_or(false);
            let lam = if smooth {
                newton_dual(problem, &kept)
            } else {
                None
            };
            lam.unwrap_or_else(|| ellipsoid_dual(problem, &kept))
        }
    };

    let (dual_value, inner) = problem.dual(&kept, &lam_kept);
    let p_hat = recover_primal(problem, &kept, &inner);

    let mut lam = vec![0.0; rows.len()];
    for (k, &idx) in kept_idx.iter().enumerate() {
        lam[idx] = lam_kept[k];
    }
    EqSolution {
        p_hat,
        dual_value,
        lam,
        box_mu: None,
    }
}

/// Bisection on the monotone dual derivative for a single equality.
fn scalar_dual(problem: &Restricted, row: &(Vec<f64>, f64)) -> f64 {
    let (a, b) = row;
    let mean = |lam: f64| -> f64 {
        let (_, inner) = problem.dual(std::slice::from_ref(row), &[lam]);
        a.iter().zip(&inner.p).map(|(ai, pi)| ai * pi).sum()
    };
    let scale = 1.0 + b.abs();
    let d0 = mean(0.0) - b;
    if d0.abs() <= 1e-14 * scale {
        return 0.0;
    }
    // mean is nonincreasing in lambda
    let (mut lo, mut hi);
    if d0 > 0.0 {
        lo = 0.0;
        hi = 1.0;
        while mean(hi) - b > 0.0 && hi < 1e15 {
            hi *= 8.0;
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while mean(lo) - b < 0.0 && lo > -1e15 {
            lo *= 8.0;
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mean(mid) - b > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller dual value (dual is convex)
    let g = |lam: f64| problem.dual(std::slice::from_ref(row), &[lam]).0;
    let mid = 0.5 * (lo + hi);
    let cands = [lo, mid, hi];
    *cands
        .iter()
        .min_by(|x, y| g(**x).partial_cmp(&g(**y)).unwrap())
        .unwrap()
}

/// Damped Newton on the smooth dual; None when it fails to converge.
fn newton_dual(problem: &Restricted, rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let j = rows.len();
    let grad = |lam: &[f64]| -> (f64, Vec<f64>) {
        let (g, inner) = problem.dual(rows, lam);
        let gr = rows
            .iter()
            .map(|(a, b)| b - a.iter().zip(&inner.p).map(|(ai, pi)| ai * pi).sum::<f64>())
            .collect();
        (g, gr)
    };
    let scale = 1.0 + rows.iter().fold(0.0f64, |m, (_, b)| m.max(b.abs()));
    let mut lam = vec![0.0; j];
    let (mut gval, mut gr) = grad(&lam);
    let mut damp = 1e-10;
    for _ in 0..200 {
        let gnorm = gr.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if gnorm <= 1e-13 * scale {
            return Some(lam);
        }
        // finite-difference Hessian of the dual
        let mut hess = vec![vec![0.0; j]; j];
        for (k, lam_k) in lam.iter().enumerate() {
            let h = 1e-7 * (1.0 + lam_k.abs());
            let mut lp = lam.clone();
            lp[k] += h;
            let (_, gp) = grad(&lp);
            for (row, (gpr, grr)) in hess.iter_mut().zip(gp.iter().zip(&gr)) {
                row[k] = (gpr - grr) / h;
            }
        }
        for (k, row) in hess.iter_mut().enumerate() {
            row[k] += damp;
        }
        let Some(delta) = solve_linear(&mut hess.clone(), &gr) else {
            damp *= 100.0;
            continue;
        };
        // line search on the convex dual
        let mut t = 1.0;
        let mut ok = false;
        for _ in 0..60 {
            let cand: Vec<f64> = lam.iter().zip(&delta).map(|(l, d)| l - t * d).collect();
            let (cval, cgr) = grad(&cand);
            if cval < gval + 1e-12 * (1.0 + gval.abs()) {
                lam = cand;
                gval = cval;
                gr = cgr;
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if !ok {
            damp *= 100.0;
            if damp > 1e6 {
                return None;
            }
        } else {
            damp = (damp / 10.0).max(1e-12);
        }
    }
    let gnorm = gr.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    (gnorm <= 1e-10 * scale).then_some(lam)
}

fn solve_linear(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv, val) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|p, q| p.1.partial_cmp(&q.1).unwrap())?;
        if val < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        x.swap(col, piv);
        let inv = 1.0 / a[col][col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] * inv;
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(r.max(col));
                let (row_r, row_col) = if r > col {
                    (&mut bottom[0], &top[col])
                } else {
                    (&mut top[r], &bottom[0])
                };
                for c in col..n {
                    row_r[c] -= f * row_col[c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    Some((0..n).map(|i| x[i] / a[i][i]).collect())
}

/// Subgradient of the dual at `lam` (any inner tie-break).
fn dual_subgradient(rows: &[(Vec<f64>, f64)], inner: &InnerResult) -> Vec<f64> {
    rows.iter()
        .map(|(a, b)| b - a.iter().zip(&inner.p).map(|(ai, pi)| ai * pi).sum::<f64>())
        .collect()
}

/// One round of the ellipsoid method centered at `start`.
fn ellipsoid_round(
    problem: &Restricted,
    rows: &[(Vec<f64>, f64)],
    start: &[f64],
    radius: f64,
    best_lam: &mut Vec<f64>,
    best_val: &mut f64,
) {
    let n = rows.len();
    let j = n as f64;
    let mut center = start.to_vec();
    let mut pmat = vec![vec![0.0; n]; n];
    for (k, row) in pmat.iter_mut().enumerate() {
        row[k] = radius * radius;
    }
    let iters = 300 * (n + 1) * (n + 1);
    for _ in 0..iters {
        let (gval, inner) = problem.dual(rows, &center);
        if gval < *best_val {
            *best_val = gval;
            *best_lam = center.clone();
        }
        let sub = dual_subgradient(rows, &inner);
        let ps: Vec<f64> = pmat
            .iter()
            .map(|row| row.iter().zip(&sub).map(|(x, y)| x * y).sum())
            .collect();
        let sps: f64 = sub.iter().zip(&ps).map(|(x, y)| x * y).sum();
        // NaN-safe: also stops if rounding drove the metric non-positive
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(sps > 1e-280) {
            break;
        }
        let norm = sps.sqrt();
        let gtilde: Vec<f64> = ps.iter().map(|x| x / norm).collect();
        for (c, g) in center.iter_mut().zip(&gtilde) {
            *c -= g / (j + 1.0);
        }
        let f1 = j * j / (j * j - 1.0).max(1e-12);
        let f2 = 2.0 / (j + 1.0);
        for r in 0..n {
            for c in r..n {
                let val = f1 * (0.5 * (pmat[r][c] + pmat[c][r]) - f2 * gtilde[r] * gtilde[c]);
                pmat[r][c] = val;
                pmat[c][r] = val;
            }
        }
        if problem.evals.get() > MAX_INNER_EVALS {
            return;
        }
    }
}

/// Exact bisection of the convex dual along a direction; returns the step.
fn line_min(problem: &Restricted, rows: &[(Vec<f64>, f64)], at: &[f64], dir: &[f64]) -> f64 {
    let slope = |t: f64| -> f64 {
        let lam: Vec<f64> = at.iter().zip(dir).map(|(l, d)| l + t * d).collect();
        let (_, inner) = problem.dual(rows, &lam);
        dual_subgradient(rows, &inner)
            .iter()
            .zip(dir)
            .map(|(s, d)| s * d)
            .sum()
    };
    let s0 = slope(0.0);
    if s0 == 0.0 {
        return 0.0;
    }
    // slope is nondecreasing in t; bracket a sign change
    let (mut lo, mut hi);
    if s0 < 0.0 {
        lo = 0.0;
        hi = 1.0;
        while slope(hi) < 0.0 {
            hi *= 4.0;
            if hi > 1e12 {
                return hi;
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while slope(lo) > 0.0 {
            lo *= 4.0;
            if lo < -1e12 {
                return lo;
            }
        }
    }
    for _ in 0..120 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Powell-style polish: bisect along coordinate axes plus the accumulated
/// move direction. Each line search is exact, so kinks that are reachable
/// along the search directions get resolved to full precision.
fn powell_polish(problem: &Restricted, rows: &[(Vec<f64>, f64)], start: Vec<f64>) -> Vec<f64> {
    let n = rows.len();
    let mut lam = start;
    // the axis directions stay for good: kinks block skew directions, and
    // per-axis bisection is what resolves them
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut d = vec![0.0; n];
            d[k] = 1.0;
            d
        })
        .collect();
    let mut extra: Option<Vec<f64>> = None;
    for _sweep in 0..12 {
        let before = lam.clone();
        for d in axes.iter().chain(extra.iter()) {
            let t = line_min(problem, rows, &lam, d);
            for (l, di) in lam.iter_mut().zip(d) {
                *l += t * di;
            }
            if problem.evals.get() > MAX_INNER_EVALS {
                return lam;
            }
        }
        let moved: Vec<f64> = lam.iter().zip(&before).map(|(a, b)| a - b).collect();
        let dist = moved.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dist <= 1e-13 * (1.0 + lam.iter().fold(0.0f64, |m, &x| m.max(x.abs()))) {
            break;
        }
        extra = Some(moved.iter().map(|x| x / dist).collect());
    }
    lam
}

/// Ellipsoid search with shrinking restarts, then a Powell polish, for the
/// nonsmooth convex dual.
fn ellipsoid_dual(problem: &Restricted, rows: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let n = rows.len();
    let mut best_lam = vec![0.0; n];
    let mut best_val = f64::INFINITY;
    let mut radius = 100.0 * (1.0 + rows.iter().fold(0.0f64, |m, (_, b)| m.max(b.abs())));
    // widen until the best point is comfortably interior
    for _ in 0..4 {
        ellipsoid_round(problem, rows, &vec![0.0; n], radius, &mut best_lam, &mut best_val);
        let drift = best_lam.iter().map(|x| x * x).sum::<f64>().sqrt();
        if drift < 0.85 * radius {
            break;
        }
        radius *= 100.0;
    }
    // shrink around the incumbent to gain precision
    let mut r = 1.0 + best_lam.iter().map(|x| x * x).sum::<f64>().sqrt() * 1e-3;
    for _ in 0..3 {
        let start = best_lam.clone();
        ellipsoid_round(problem, rows, &start, r, &mut best_lam, &mut best_val);
        r *= 1e-3;
        if problem.evals.get() > MAX_INNER_EVALS {
            break;
        }
    }
    let polished = powell_polish(problem, rows, best_lam.clone());
    let (pv, _) = problem.dual(rows, &polished);
    if pv <= best_val {
        polished
    } else {
        best_lam
    }
}

/// Recovers a feasible maximizer by resolving boundary ties with an LP.
/// Falls back to the raw inner argmax if the tie LP cannot be satisfied.
fn recover_primal(problem: &Restricted, rows: &[(Vec<f64>, f64)], inner: &InnerResult) -> Vec<f64> {
    let s = problem.s();
    if rows.is_empty() && problem.boxes.is_empty() {
        return inner.p.clone();
    }
    let chain = match &problem.chain {
        Some(c) => c,
        None => {
            // no marginal structure to pin; project the iterate onto the
            // feasible set by minimizing L1 distance
            return project_l1(s, &inner.p, rows, &problem.boxes).unwrap_or_else(|| inner.p.clone());
        }
    };

    let attempt = |tie_relax: f64, with_boxes: bool| -> Option<Vec<f64>> {
        let free: Vec<usize> = (0..s)
            .filter(|&i| inner.allowed[i] || tie_relax > 1.0)
            .collect();
        if free.is_empty() {
            return None;
        }
        let nv = free.len();
        let mut cons = vec![Constraint::eq(vec![1.0; nv], 1.0)];
        if let Some((level, q)) = &inner.marginal_pin {
            for (cls, &target) in q.iter().enumerate() {
                let row: Vec<f64> = free
                    .iter()
                    .map(|&i| {
                        if chain.class_at[*level][i] == cls {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                cons.push(Constraint::eq(row, target));
            }
        }
        for (a, b) in rows {
            cons.push(Constraint::eq(free.iter().map(|&i| a[i]).collect(), *b));
        }
        if with_boxes {
            for (g, lo, hi) in &problem.boxes {
                let row: Vec<f64> = free.iter().map(|&i| g[i]).collect();
                cons.push(Constraint::ge(row.clone(), *lo));
                cons.push(Constraint::le(row, *hi));
            }
        }
        let x = lp::feasible_point(nv, &cons)?;
        let mut p = vec![0.0; s];
        for (k, &i) in free.iter().enumerate() {
            p[i] = x[k].max(0.0);
        }
        Some(p)
    };

    attempt(1.0, true)
        .or_else(|| attempt(1.0, false))
        .or_else(|| attempt(2.0, false))
        .unwrap_or_else(|| inner.p.clone())
}

/// L1-projection onto the constraint polytope (used by the non-chain path).
fn project_l1(
    s: usize,
    target: &[f64],
    rows: &[(Vec<f64>, f64)],
    boxes: &[(Vec<f64>, f64, f64)],
) -> Option<Vec<f64>> {
    // variables: p (s), plus split residuals u,w >= 0 with p - target = u - w
    let nv = 3 * s;
    let mut cons = Vec::new();
    let mut simplex = vec![0.0; nv];
    simplex[..s].fill(1.0);
    cons.push(Constraint::eq(simplex, 1.0));
    for (a, b) in rows {
        let mut row = vec![0.0; nv];
        row[..s].copy_from_slice(a);
        cons.push(Constraint::eq(row, *b));
    }
    for (g, lo, hi) in boxes {
        let mut row = vec![0.0; nv];
        row[..s].copy_from_slice(g);
        cons.push(Constraint::ge(row.clone(), *lo));
        cons.push(Constraint::le(row, *hi));
    }
    for i in 0..s {
        let mut row = vec![0.0; nv];
        row[i] = 1.0;
        row[s + i] = -1.0;
        row[2 * s + i] = 1.0;
        cons.push(Constraint::eq(row, target[i]));
    }
    let mut obj = vec![0.0; nv];
    obj[s..].fill(1.0);
    match lp::solve_lp(nv, &obj, false, &cons) {
        lp::LpResult::Optimal { x, .. } => Some(x[..s].iter().map(|&v| v.max(0.0)).collect()),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Top-level pipeline
// ---------------------------------------------------------------------------

pub(super) fn solve(prog: &EntropyProgram) -> OptReport {
    let m = prog.m;
    for t in &prog.terms {
        assert_eq!(t.class_of.len(), m, "term arity mismatch");
        assert!(t.coeff >= 0.0);
    }
    let cons = super::constraint_rows(m, &prog.equalities, &prog.boxes);

    // feasibility and facial reduction
    let Some(p_feas) = lp::feasible_point(m, &cons) else {
        return OptReport {
            status: Status::Infeasible,
            value: f64::NEG_INFINITY,
            maximizer: vec![0.0; m],
            duality_gap_estimate: f64::INFINITY,
            iterations: 0,
        };
    };
    let unconstrained = prog.equalities.is_empty() && prog.boxes.is_empty();
    let support: Vec<usize> = if unconstrained {
        (0..m).collect()
    } else {
        let mut sup = Vec::new();
        for i in 0..m {
            if p_feas[i] > SUPPORT_TOL {
                sup.push(i);
                continue;
            }
            let mut obj = vec![0.0; m];
            obj[i] = 1.0;
            if let lp::LpResult::Optimal { value, .. } = lp::solve_lp(m, &obj, true, &cons) {
                if value > SUPPORT_TOL {
                    sup.push(i);
                }
            }
        }
        sup
    };

    let scatter = |tight: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; m];
        for (k, &i) in support.iter().enumerate() {
            p[i] = tight[k];
        }
        p
    };

    if support.len() <= 1 {
        let p = scatter(&vec![1.0; support.len().max(1)]);
        let value = prog.objective(&p);
        let feas = prog.infeasibility(&p);
        return OptReport {
            status: if feas <= FEASIBILITY_TOL {
                Status::Optimal
            } else {
                Status::Infeasible
            },
            value,
            maximizer: p,
            duality_gap_estimate: 0.0,
            iterations: 0,
        };
    }

    // restrict everything to the support
    let restrict = |a: &[f64]| -> Vec<f64> { support.iter().map(|&i| a[i]).collect() };
    let terms: Vec<ObjectiveTerm> = prog
        .terms
        .iter()
        .map(|t| {
            let class_of: Vec<usize> = support.iter().map(|&i| t.class_of[i]).collect();
            let (sig, n) = canonical_partition(&class_of);
            ObjectiveTerm::new(sig, n, t.coeff)
        })
        .collect();
    let s = support.len();

    // drop equalities that became constant on the support
    let mut equalities = Vec::new();
    for (a, b) in &prog.equalities {
        let ra = restrict(a);
        let lo = ra.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ra.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 1e-13 * (1.0 + hi.abs().max(lo.abs())) {
            equalities.push((ra, *b));
        }
    }
    let mut boxes = Vec::new();
    for (g, lo, hi) in &prog.boxes {
        let rg = restrict(g);
        let vlo = rg.iter().cloned().fold(f64::INFINITY, f64::min);
        let vhi = rg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if vhi - vlo > 1e-13 * (1.0 + vhi.abs().max(vlo.abs())) {
            boxes.push((rg, *lo, *hi));
        }
    }

    let problem = Restricted {
        support: support.clone(),
        chain: build_chain(s, &terms),
        terms,
        equalities: equalities.clone(),
        boxes: boxes.clone(),
        evals: std::cell::Cell::new(0),
    };

    // active-set loop over boxes
    #[derive(Clone, Copy, PartialEq, Eq)]
    enum Pin {
        Free,
        AtLo,
        AtHi,
    }
    let mut pins = vec![Pin::Free; boxes.len()];
    let mut seen = std::collections::BTreeSet::new();
    let mut sol;
    let mut rows: Vec<(Vec<f64>, f64)>;
    let mut pinned_rows: Vec<usize>;
    loop {
        rows = equalities.clone();
        pinned_rows = Vec::new();
        for (l, (g, lo, hi)) in boxes.iter().enumerate() {
            match pins[l] {
                Pin::Free => {}
                Pin::AtLo => {
                    pinned_rows.push(l);
                    rows.push((g.clone(), *lo));
                }
                Pin::AtHi => {
                    pinned_rows.push(l);
                    rows.push((g.clone(), *hi));
                }
            }
        }
        sol = solve_equalities(&problem, &rows);

        // multiplier signs: a pin at the upper edge must push down (mu >= 0)
        let mut changed = false;
        for (k, &l) in pinned_rows.iter().enumerate() {
            let mu = sol.lam[equalities.len() + k];
            let bad = match pins[l] {
                Pin::AtHi => mu < -1e-9,
                Pin::AtLo => mu > 1e-9,
                Pin::Free => false,
            };
            if bad {
                pins[l] = Pin::Free;
                changed = true;
                break;
            }
        }
        if !changed {
            // violated inactive boxes
            let mut worst = (1e-10, None);
            for (l, (g, lo, hi)) in boxes.iter().enumerate() {
                if pins[l] != Pin::Free {
                    continue;
                }
                let val: f64 = g.iter().zip(&sol.p_hat).map(|(gi, pi)| gi * pi).sum();
                if lo - val > worst.0 {
                    worst = (lo - val, Some((l, Pin::AtLo)));
                }
                if val - hi > worst.0 {
                    worst = (val - hi, Some((l, Pin::AtHi)));
                }
            }
            match worst.1 {
                Some((l, side)) => {
                    pins[l] = side;
                    changed = true;
                }
                None => break,
            }
        }
        if !changed {
            break;
        }
        let sig: Vec<i8> = pins
            .iter()
            .map(|p| match p {
                Pin::Free => 0,
                Pin::AtLo => 1,
                Pin::AtHi => 2,
            })
            .collect();
        if !seen.insert(sig) || problem.evals.get() > MAX_INNER_EVALS {
            // cycling or budget blown: fall back to the full nonsmooth dual
            sol = solve_boxes_by_ellipsoid(&problem);
            pinned_rows = Vec::new();
            break;
        }
    }

    // certificate: dual value with assembled multipliers
    let mut mu = vec![0.0; boxes.len()];
    if let Some(full_mu) = &sol.box_mu {
        mu.copy_from_slice(full_mu);
    }
    for (k, &l) in pinned_rows.iter().enumerate() {
        mu[l] = sol.lam[equalities.len() + k];
    }
    let dual_bound = if mu.iter().all(|&x| x == 0.0) && sol.box_mu.is_none() {
        sol.dual_value
    } else {
        let mut v = vec![0.0; s];
        let mut shift = 0.0;
        for ((a, b), &l) in equalities.iter().zip(&sol.lam) {
            for (vi, ai) in v.iter_mut().zip(a) {
                *vi -= l * ai;
            }
            shift += l * b;
        }
        for ((g, lo, hi), &ml) in boxes.iter().zip(&mu) {
            if ml != 0.0 {
                for (vi, gi) in v.iter_mut().zip(g) {
                    *vi -= ml * gi;
                }
                shift += box_support(ml, *lo, *hi);
            }
        }
        problem.inner(&v).value + shift
    };

    let maximizer = scatter(&sol.p_hat);
    let value = prog.objective(&maximizer);
    let feas = prog.infeasibility(&maximizer);
    let gap = (dual_bound - value).max(0.0);
    let status = if feas <= FEASIBILITY_TOL && gap <= GAP_TOL {
        Status::Optimal
    } else {
        Status::MaxIterations
    };
    OptReport {
        status,
        value,
        maximizer,
        duality_gap_estimate: gap,
        iterations: problem.evals.get(),
    }
}

/// Nonsmooth dual over equality and box multipliers jointly; the fallback
/// when the active-set loop cycles.
fn solve_boxes_by_ellipsoid(problem: &Restricted) -> EqSolution {
    let s = problem.s();
    let ne = problem.equalities.len();
    let nb = problem.boxes.len();
    let n = ne + nb;
    let eval = |lam: &[f64]| -> (f64, InnerResult, Vec<f64>) {
        let mut v = vec![0.0; s];
        let mut shift = 0.0;
        for ((a, b), &l) in problem.equalities.iter().zip(&lam[..ne]) {
            for (vi, ai) in v.iter_mut().zip(a) {
                *vi -= l * ai;
            }
            shift += l * b;
        }
        for ((g, lo, hi), &ml) in problem.boxes.iter().zip(&lam[ne..]) {
            for (vi, gi) in v.iter_mut().zip(g) {
                *vi -= ml * gi;
            }
            shift += box_support(ml, *lo, *hi);
        }
        let inner = problem.inner(&v);
        let mut sub = Vec::with_capacity(n);
        for (a, b) in &problem.equalities {
            sub.push(b - a.iter().zip(&inner.p).map(|(x, y)| x * y).sum::<f64>());
        }
        for ((g, lo, hi), &ml) in problem.boxes.iter().zip(&lam[ne..]) {
            let mean: f64 = g.iter().zip(&inner.p).map(|(x, y)| x * y).sum();
            let edge = if ml > 0.0 {
                *hi
            } else if ml < 0.0 {
                *lo
            } else if mean > *hi {
                *hi
            } else {
                *lo
            };
            sub.push(edge - mean);
        }
        (inner.value + shift, inner, sub)
    };

    let mut best_lam = vec![0.0; n];
    let mut best_val = f64::INFINITY;
    let jf = n as f64;
    let mut radius = 100.0;
    for _round in 0..4 {
        let mut center = best_lam.clone();
        let mut pmat = vec![vec![0.0; n]; n];
        for (k, row) in pmat.iter_mut().enumerate() {
            row[k] = radius * radius;
        }
        let iters = (60.0 * 2.0 * (jf + 1.0) * (jf + 1.0)) as usize;
        for _ in 0..iters {
            let (gval, _, sub) = eval(&center);
            if gval < best_val {
                best_val = gval;
                best_lam = center.clone();
            }
            let ps: Vec<f64> = pmat
                .iter()
                .map(|row| row.iter().zip(&sub).map(|(x, y)| x * y).sum())
                .collect();
            let sps: f64 = sub.iter().zip(&ps).map(|(x, y)| x * y).sum();
            // NaN-safe: also stops if rounding drove the metric non-positive
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(sps > 1e-280) {
                break;
            }
            let norm = sps.sqrt();
            let gtilde: Vec<f64> = ps.iter().map(|x| x / norm).collect();
            for (c, g) in center.iter_mut().zip(&gtilde) {
                *c -= g / (jf + 1.0);
            }
            let f1 = jf * jf / (jf * jf - 1.0).max(1e-12);
            let f2 = 2.0 / (jf + 1.0);
            for r in 0..n {
                for c in r..n {
                    let val = f1 * (0.5 * (pmat[r][c] + pmat[c][r]) - f2 * gtilde[r] * gtilde[c]);
                    pmat[r][c] = val;
                    pmat[c][r] = val;
                }
            }
        }
        let drift = best_lam.iter().map(|x| x * x).sum::<f64>().sqrt();
        if drift < 0.85 * radius {
            break;
        }
        radius *= 100.0;
    }

    let (dual_value, inner, _) = eval(&best_lam);
    // recovery: pin marginals, require all boxes hard
    let rows: Vec<(Vec<f64>, f64)> = problem.equalities.clone();
    let p_hat = recover_primal(problem, &rows, &inner);
    EqSolution {
        p_hat,
        dual_value,
        lam: best_lam[..ne].to_vec(),
        box_mu: Some(best_lam[ne..].to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_detects_nesting() {
        // eta_2 partition of Example 1 digits nests under identity
        let terms = vec![
            ObjectiveTerm::identity(3, 0.5),
            ObjectiveTerm::new(vec![0, 1, 0], 2, 0.25),
        ];
        let chain = build_chain(3, &terms).unwrap();
        assert_eq!(chain.sizes, vec![3, 2]);
        assert!(chain.smooth());

        // crossing partitions do not nest
        let bad = vec![
            ObjectiveTerm::new(vec![0, 0, 1], 2, 1.0),
            ObjectiveTerm::new(vec![0, 1, 1], 2, 1.0),
        ];
        assert!(build_chain(3, &bad).is_none());
    }

    #[test]
    fn inner_unconstrained_uniform() {
        let terms = vec![ObjectiveTerm::identity(4, 1.0)];
        let chain = build_chain(4, &terms).unwrap();
        let res = inner_chain(&chain, &[0.0; 4]);
        assert!((res.value - 4f64.ln()).abs() < 1e-14);
        for &p in &res.p {
            assert!((p - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn inner_matches_mcmullen_structure() {
        // Example 1 weighted objective: w1 h(p) + w2 h(eta2 p), v = 0
        let l2 = 2f64.ln();
        let l3 = 3f64.ln();
        let terms = vec![
            ObjectiveTerm::identity(3, 1.0 / l3),
            ObjectiveTerm::new(vec![0, 1, 0], 2, 1.0 / l2 - 1.0 / l3),
        ];
        let chain = build_chain(3, &terms).unwrap();
        let res = inner_chain(&chain, &[0.0; 3]);
        let expected = (1.0 + 2f64.powf(l2 / l3)).ln() / l2;
        assert!((res.value - expected).abs() < 1e-13, "{}", res.value);
    }

    #[test]
    fn inner_max_collapse_boundary() {
        // single level-2 term: within-class mass concentrates on the best v
        let terms = vec![ObjectiveTerm::new(vec![0, 1, 0], 2, 1.0)];
        let chain = build_chain(3, &terms).unwrap();
        assert!(!chain.smooth());
        let res = inner_chain(&chain, &[0.3, 0.0, -0.2]);
        // class 0 takes u = max(0.3, -0.2) = 0.3; class 1 u = 0
        let d = ((0.3f64).exp() + 1.0).ln();
        assert!((res.value - d).abs() < 1e-14);
        assert_eq!(res.p[2], 0.0);
        assert!(res.allowed[0] && res.allowed[1] && !res.allowed[2]);
    }

    #[test]
    fn mirror_ascent_agrees_with_chain() {
        let terms = vec![
            ObjectiveTerm::identity(3, 0.7),
            ObjectiveTerm::new(vec![0, 1, 0], 2, 0.4),
        ];
        let chain = build_chain(3, &terms).unwrap();
        let v = [0.1, -0.3, 0.2];
        let exact = inner_chain(&chain, &v);
        let approx = inner_mirror_ascent(3, &terms, &v);
        assert!((exact.value - approx.value).abs() < 1e-8);
    }
}
