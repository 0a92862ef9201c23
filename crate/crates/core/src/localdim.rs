//! Pointwise-dimension spectra of Bernoulli measures under the very strong
//! separation condition.
//!
//! For a strictly positive Bernoulli measure, the local dimension at a
//! typical point decomposes into Birkhoff averages of d level potentials
//! `P_j`: the log-ratio of successive projection marginals, scaled by the
//! corresponding base. Local dimension is the negated sum of the averages,
//! so values are nonnegative. When all but one of the potentials are
//! constant ("one-dimensional" measures) the level set of local dimension
//! alpha is exactly a Birkhoff level set of the remaining potential and the
//! packing spectrum is computed exactly; otherwise a concave lower-bound
//! program maximizes the weighted entropies over measures whose potential
//! means sum to -alpha.

use crate::dimension::level_term;
use crate::measures::ProbVector;
use crate::optimize::{
    feasible_interval, maximize_entropy_program, EntropyProgram, Status,
};
use crate::potential::Potential;
use crate::spectra::{packing_spectrum_point, SpectrumCurve, SpectrumError, SpectrumKind};
use crate::sponge::SpongeSpec;
use rayon::prelude::*;

/// Tolerance for the one-dimensionality ratio checks. Probabilities are
/// user inputs, so there is no fuzzy matching beyond this.
const ONE_DIM_TOL: f64 = 1e-12;
const ENDPOINT_SNAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LocalDimError {
    #[error("digit {0:?} has zero probability; the level potentials need full support")]
    ZeroProbabilityDigit(Vec<u32>),
    #[error("the measure is not one-dimensional; only the lower bound is available")]
    NotOneDimensional,
    #[error("alpha lies outside the local-dimension domain")]
    OutsideDomain,
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Level potentials of a strictly positive Bernoulli measure.
#[derive(Clone, Debug)]
pub struct LocalDimSetup {
    spec: SpongeSpec,
    p: ProbVector,
    /// `pj[i][j-1]`: value of P_j at digit i (canonical order); all entries
    /// are nonpositive.
    pj: Vec<Vec<f64>>,
    /// `(k, constants)` when the measure is one-dimensional at level k;
    /// `constants[j-1]` is the constant value of P_j for j != k.
    constants: Option<(usize, Vec<f64>)>,
}

impl LocalDimSetup {
    pub fn spec(&self) -> &SpongeSpec {
        &self.spec
    }

    pub fn measure(&self) -> &ProbVector {
        &self.p
    }

    pub fn pj(&self) -> &[Vec<f64>] {
        &self.pj
    }

    /// The level potential P_j as a scalar potential (1-based j).
    pub fn level_potential(&self, j: usize) -> Potential {
        Potential::scalar(&self.spec, self.pj.iter().map(|row| row[j - 1]).collect())
            .expect("level potential values are finite")
    }

    /// Per-digit local-dimension functional `-sum_j P_j(i)`.
    fn dim_functional(&self) -> Vec<f64> {
        self.pj
            .iter()
            .map(|row| -row.iter().sum::<f64>())
            .collect()
    }
}

/// Builds the level potentials of `p` and detects one-dimensionality.
/// The very strong separation condition is the caller's declaration; it is
/// never verified geometrically.
pub fn pj_potential(spec: &SpongeSpec, p: &ProbVector) -> Result<LocalDimSetup, LocalDimError> {
    assert_eq!(p.alphabet(), spec.digits(), "measure not over the digit set");
    for (dgt, &pi) in spec.digits().iter().zip(p.probs()) {
        if pi <= 0.0 {
            return Err(LocalDimError::ZeroProbabilityDigit(dgt.coords().to_vec()));
        }
    }
    let d = spec.d();
    let m = spec.digit_count();
    // log of the level-j marginal probability of each digit's class
    let mut log_marg = vec![vec![0.0; d + 1]; m];
    for j in 1..=d {
        let (class_of, n_classes) = spec.projection_classes(j);
        let mut mass = vec![0.0; n_classes];
        for (i, &c) in class_of.iter().enumerate() {
            mass[c] += p.probs()[i];
        }
        for (i, &c) in class_of.iter().enumerate() {
            log_marg[i][j - 1] = mass[c].ln();
        }
    }
    // virtual level d+1 has full mass: log 1 = 0
    let mut pj = vec![vec![0.0; d]; m];
    for i in 0..m {
        for j in 1..=d {
            let a_j = f64::from(spec.bases()[j - 1]).ln();
            pj[i][j - 1] = (log_marg[i][j - 1] - log_marg[i][j]) / a_j;
        }
    }
    let constants = detect_one_dimensional(spec, p, &pj);
    Ok(LocalDimSetup {
        spec: spec.clone(),
        p: p.clone(),
        pj,
        constants,
    })
}

/// Smallest level k whose removal leaves every other level potential
/// constant: marginal ratios equal to the projected-alphabet cardinality
/// ratio for j < d, and a uniform deepest marginal when k != d.
fn detect_one_dimensional(
    spec: &SpongeSpec,
    p: &ProbVector,
    pj: &[Vec<f64>],
) -> Option<(usize, Vec<f64>)> {
    let d = spec.d();
    let ratio_ok = |j: usize| -> bool {
        // marg_j(i)/marg_{j+1}(i) == #eta_{j+1}(D)/#eta_j(D) for all i
        let nj = spec.projected_alphabet(j).len() as f64;
        let nj1 = spec.projected_alphabet(j + 1).len() as f64;
        let want = nj1 / nj;
        let a_j = f64::from(spec.bases()[j - 1]).ln();
        pj.iter()
            .all(|row| ((row[j - 1] * a_j).exp() - want).abs() <= ONE_DIM_TOL)
    };
    let deepest_uniform = || -> bool {
        let alphabet = spec.projected_alphabet(d);
        let (class_of, n_classes) = spec.projection_classes(d);
        let mut mass = vec![0.0; n_classes];
        for (i, &c) in class_of.iter().enumerate() {
            mass[c] += p.probs()[i];
        }
        let want = 1.0 / alphabet.len() as f64;
        mass.iter().all(|&q| (q - want).abs() <= ONE_DIM_TOL)
    };
    'levels: for k in 1..=d {
        for j in 1..d {
            if j != k && !ratio_ok(j) {
                continue 'levels;
            }
        }
        if k != d && !deepest_uniform() {
            continue;
        }
        let constants: Vec<f64> = (1..=d)
            .map(|j| if j == k { 0.0 } else { pj[0][j - 1] })
            .collect();
        return Some((k, constants));
    }
    None
}

/// Local dimension of the measure at points typical for `q`: the negated
/// sum of the potential means. Affine in `q`.
pub fn local_dim_value(setup: &LocalDimSetup, q: &ProbVector) -> f64 {
    assert_eq!(q.alphabet(), setup.spec.digits());
    setup
        .dim_functional()
        .iter()
        .zip(q.probs())
        .map(|(l, qi)| l * qi)
        .sum()
}

/// Range of achievable local dimensions: the extremes of the affine
/// functional over the simplex, attained at digit point masses.
pub fn localdim_domain(setup: &LocalDimSetup) -> (f64, f64) {
    let l = setup.dim_functional();
    let lo = l.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// The level k making the measure one-dimensional, if any (smallest such).
pub fn is_one_dimensional(setup: &LocalDimSetup) -> Option<usize> {
    setup.constants.as_ref().map(|(k, _)| *k)
}

fn snap_into(alpha: f64, lo: f64, hi: f64) -> Option<f64> {
    if alpha < lo {
        (lo - alpha <= ENDPOINT_SNAP).then_some(lo)
    } else if alpha > hi {
        (alpha - hi <= ENDPOINT_SNAP).then_some(hi)
    } else {
        Some(alpha)
    }
}

/// Exact packing spectrum of local dimension for one-dimensional measures:
/// the level set of local dimension alpha is the Birkhoff level set of P_k
/// at `-alpha - sum_{j != k} c_j`.
pub fn localdim_packing_exact(setup: &LocalDimSetup, alpha: f64) -> Result<f64, LocalDimError> {
    let (k, constants) = setup
        .constants
        .as_ref()
        .ok_or(LocalDimError::NotOneDimensional)?;
    let (lo, hi) = localdim_domain(setup);
    let alpha = snap_into(alpha, lo, hi).ok_or(LocalDimError::OutsideDomain)?;
    let offset: f64 = constants
        .iter()
        .enumerate()
        .filter(|(j, _)| j + 1 != *k)
        .map(|(_, c)| c)
        .sum();
    let beta = -alpha - offset;
    let phi = setup.level_potential(*k);
    Ok(packing_spectrum_point(&setup.spec, &phi, &[beta])?)
}

/// Lower bound for the packing spectrum of local dimension, valid for any
/// strictly positive Bernoulli measure: maximize the weighted entropies over
/// per-level measures sharing a potential-mean vector that sums to -alpha.
/// Coincides with the exact spectrum on the one-dimensional class.
pub fn localdim_packing_lower(setup: &LocalDimSetup, alpha: f64) -> Result<f64, LocalDimError> {
    let (lo, hi) = localdim_domain(setup);
    let alpha = snap_into(alpha, lo, hi).ok_or(LocalDimError::OutsideDomain)?;
    let spec = &setup.spec;
    let d = spec.d();
    let m = spec.digit_count();
    let pj_rows: Vec<Vec<f64>> = (0..d)
        .map(|j| setup.pj.iter().map(|row| row[j]).collect())
        .collect();
    let sum_row: Vec<f64> = (0..m).map(|i| setup.pj[i].iter().sum::<f64>()).collect();

    // initial mean vector from any measure with the right dimension value
    let base_eq = vec![(sum_row.clone(), -alpha)];
    let Some(p0) = crate::optimize::lp::feasible_point(
        m,
        &crate::optimize::constraint_rows(m, &base_eq, &[]),
    ) else {
        return Err(LocalDimError::OutsideDomain);
    };
    let mut bar: Vec<f64> = pj_rows
        .iter()
        .map(|row| row.iter().zip(&p0).map(|(x, y)| x * y).sum())
        .collect();

    let eval = |bar: &[f64]| -> f64 {
        let wts = spec.dimension_weights();
        let mut total = 0.0;
        for k in 1..=d {
            let mut prog = EntropyProgram::new(m, vec![level_term(spec, k)]);
            prog.equalities = pj_rows
                .iter()
                .zip(bar)
                .map(|(row, &b)| (row.clone(), b))
                .collect();
            let rep = maximize_entropy_program(&prog);
            if rep.status == Status::Infeasible {
                return f64::NEG_INFINITY;
            }
            total += wts.w[k - 1] * rep.value;
        }
        total
    };

    if d == 1 {
        return Ok(eval(&bar));
    }

    // cyclic golden-section ascent over the free coordinates of the mean
    // hyperplane (the last coordinate absorbs the changes)
    let golden = |f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64| -> f64 {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        for _ in 0..90 {
            if b - a <= 1e-12 * (1.0 + a.abs() + b.abs()) {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = f(x1);
            }
        }
        0.5 * (a + b)
    };

    let mut best = eval(&bar);
    for _sweep in 0..20 {
        let before = best;
        for c in 0..d - 1 {
            // feasible interval of bar[c] with the other free coordinates
            // fixed and bar[d-1] compensating
            let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
            for (j, row) in pj_rows.iter().enumerate() {
                if j != c && j != d - 1 {
                    eqs.push((row.clone(), bar[j]));
                }
            }
            let paired: Vec<f64> = (0..m).map(|i| pj_rows[c][i] + pj_rows[d - 1][i]).collect();
            eqs.push((paired, bar[c] + bar[d - 1]));
            let Some((clo, chi)) = feasible_interval(m, &eqs, &[], &pj_rows[c]) else {
                continue;
            };
            if chi - clo <= 1e-13 {
                continue;
            }
            let pair_sum = bar[c] + bar[d - 1];
            let f = |x: f64| -> f64 {
                let mut trial = bar.clone();
                trial[c] = x;
                trial[d - 1] = pair_sum - x;
                eval(&trial)
            };
            let x = golden(&f, clo, chi);
            bar[d - 1] = pair_sum - x;
            bar[c] = x;
            best = eval(&bar);
        }
        if best - before <= 1e-11 * (1.0 + best.abs()) {
            break;
        }
    }
    Ok(best)
}

/// Samples the local-dimension spectrum over its domain: exact for
/// one-dimensional measures, the lower bound otherwise.
pub fn localdim_curve(setup: &LocalDimSetup, count: usize) -> Result<SpectrumCurve, LocalDimError> {
    let (lo, hi) = localdim_domain(setup);
    let exact = setup.constants.is_some();
    let kind = if exact {
        SpectrumKind::LocalDim
    } else {
        SpectrumKind::LocalDimLower
    };
    if hi - lo < 1e-12 {
        let value = if exact {
            localdim_packing_exact(setup, lo)?
        } else {
            localdim_packing_lower(setup, lo)?
        };
        return Ok(SpectrumCurve {
            kind,
            grid: vec![lo],
            values: vec![value],
            transitions: Vec::new(),
            dropped: Vec::new(),
        });
    }
    assert!(count >= 3, "curve grids need at least 3 points");
    let alphas: Vec<f64> = (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect();
    let results: Vec<(f64, Option<f64>)> = alphas
        .par_iter()
        .map(|&a| {
            let v = if exact {
                localdim_packing_exact(setup, a).ok()
            } else {
                localdim_packing_lower(setup, a).ok()
            };
            (a, v)
        })
        .collect();
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut dropped = Vec::new();
    for (a, v) in results {
        match v {
            Some(v) => {
                grid.push(a);
                values.push(v);
            }
            None => dropped.push(a),
        }
    }
    Ok(SpectrumCurve {
        kind,
        grid,
        values,
        transitions: Vec::new(),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::{nielsen_dimension, packing_dimension};
    use crate::sponge::Digit;

    fn example3() -> (SpongeSpec, ProbVector) {
        let spec =
            SpongeSpec::new(vec![4, 3], vec![vec![0, 0], vec![2, 2], vec![3, 0]]).unwrap();
        // digits sorted: (0,0), (2,2), (3,0) with probs 1/4, 1/2, 1/4
        let p = ProbVector::from_aligned(spec.digits().to_vec(), vec![0.25, 0.5, 0.25]).unwrap();
        (spec, p)
    }

    fn alpha_min() -> f64 {
        2f64.ln() / 3f64.ln()
    }

    fn alpha_max() -> f64 {
        2f64.ln() / 3f64.ln() + 0.5
    }

    #[test]
    fn example3_level_potentials() {
        let (spec, p) = example3();
        let setup = pj_potential(&spec, &p).unwrap();
        let c = 2f64.ln() / 3f64.ln();
        // P_1 at (0,0) and (3,0) is -1/2; 0 at (2,2)
        assert!((setup.pj()[0][0] + 0.5).abs() < 1e-14);
        assert!((setup.pj()[1][0] - 0.0).abs() < 1e-14);
        assert!((setup.pj()[2][0] + 0.5).abs() < 1e-14);
        for row in setup.pj() {
            assert!((row[1] + c).abs() < 1e-14);
            assert!(row.iter().all(|&x| x <= 1e-15));
        }
    }

    #[test]
    fn uniform_full_product_has_constant_potentials() {
        let mut digits = Vec::new();
        for i in 0..4u32 {
            for j in 0..2u32 {
                digits.push(vec![i, j]);
            }
        }
        let spec = SpongeSpec::new(vec![4, 2], digits).unwrap();
        let p = ProbVector::uniform(spec.digits().to_vec());
        let setup = pj_potential(&spec, &p).unwrap();
        for row in setup.pj() {
            assert!((row[0] - (-1.0)).abs() < 1e-14); // log(1/4)/log 4
            assert!((row[1] - (-1.0)).abs() < 1e-14); // log(1/2)/log 2
        }
        assert_eq!(is_one_dimensional(&setup), Some(1));
    }

    #[test]
    fn zero_probability_rejected() {
        let (spec, _) = example3();
        let p =
            ProbVector::from_aligned(spec.digits().to_vec(), vec![0.0, 0.5, 0.5]).unwrap();
        assert!(matches!(
            pj_potential(&spec, &p),
            Err(LocalDimError::ZeroProbabilityDigit(_))
        ));
    }

    #[test]
    fn local_dim_values_and_domain() {
        let (spec, p) = example3();
        let setup = pj_potential(&spec, &p).unwrap();
        let point =
            ProbVector::point_mass(spec.digits().to_vec(), &Digit(vec![2, 2])).unwrap();
        assert!((local_dim_value(&setup, &point) - alpha_min()).abs() < 1e-14);
        let ends =
            ProbVector::from_aligned(spec.digits().to_vec(), vec![0.5, 0.0, 0.5]).unwrap();
        assert!((local_dim_value(&setup, &ends) - alpha_max()).abs() < 1e-14);
        // the measure's own typical exponent reproduces its dimension
        assert!(
            (local_dim_value(&setup, &p) - nielsen_dimension(&spec, &p)).abs() < 1e-12
        );
        let (lo, hi) = localdim_domain(&setup);
        assert!((lo - alpha_min()).abs() < 1e-12);
        assert!((hi - alpha_max()).abs() < 1e-12);
    }

    #[test]
    fn telescoping_identity() {
        // sum_j pj[i][j] log a_j = log p_i exactly
        let (spec, _) = example3();
        let probs = [
            vec![0.25, 0.5, 0.25],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.45, 0.25],
        ];
        for pr in probs {
            let p = ProbVector::from_aligned(spec.digits().to_vec(), pr).unwrap();
            let setup = pj_potential(&spec, &p).unwrap();
            for (i, row) in setup.pj().iter().enumerate() {
                let total: f64 = row
                    .iter()
                    .zip(spec.bases())
                    .map(|(v, &a)| v * f64::from(a).ln())
                    .sum();
                assert!((total - p.probs()[i].ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensionality_detection() {
        let (spec, p) = example3();
        let setup = pj_potential(&spec, &p).unwrap();
        assert_eq!(is_one_dimensional(&setup), Some(1));
        let skew =
            ProbVector::from_aligned(spec.digits().to_vec(), vec![0.1, 0.8, 0.1]).unwrap();
        let setup = pj_potential(&spec, &skew).unwrap();
        assert_eq!(is_one_dimensional(&setup), None);
    }

    #[test]
    fn example3_exact_spectrum() {
        let (spec, p) = example3();
        let setup = pj_potential(&spec, &p).unwrap();
        let v_min = localdim_packing_exact(&setup, alpha_min()).unwrap();
        assert!(v_min.abs() < 1e-9, "{v_min}");
        let v_max = localdim_packing_exact(&setup, alpha_max()).unwrap();
        assert!((v_max - 0.5).abs() < 1e-9, "{v_max}");
        // interior closed form from the sub-carpet analysis:
        // h2(rho)/log 3 + rho/2 with rho = 2(alpha - log2/log3)
        let h2 = |x: f64| -x * x.ln() - (1.0 - x) * (1.0 - x).ln();
        for &rho in &[0.2, 0.5, 0.634, 0.9] {
            let alpha = alpha_min() + rho / 2.0;
            let want = h2(rho) / 3f64.ln() + rho / 2.0;
            let got = localdim_packing_exact(&setup, alpha).unwrap();
            assert!((got - want).abs() < 1e-8, "rho={rho} got={got} want={want}");
        }
        assert_eq!(
            localdim_packing_exact(&setup, alpha_max() + 1e-3),
            Err(LocalDimError::OutsideDomain)
        );
    }

    #[test]
    fn example3_peak_stays_below_packing_dimension() {
        // the counterexample property: the spectrum never reaches the
        // packing dimension of the repeller
        let (spec, p) = example3();
        let setup = pj_potential(&spec, &p).unwrap();
        let cap = packing_dimension(&spec);
        let mut peak = f64::NEG_INFINITY;
        for i in 0..=100 {
            let alpha = alpha_min() + (alpha_max() - alpha_min()) * i as f64 / 100.0;
            peak = peak.max(localdim_packing_exact(&setup, alpha).unwrap());
        }
        assert!(peak < cap - 5e-3, "peak={peak} cap={cap}");
        // analytic gap is about 0.0086
        assert!((cap - peak - 0.0086).abs() < 5e-4, "gap={}", cap - peak);
    }

    #[test]
    fn lower_bound_matches_exact_for_one_dimensional() {
        let (spec, p) = example3();
        let setup = pj_potential(&spec, &p).unwrap();
        for &alpha in &[
            alpha_min(),
            alpha_min() + 0.1,
            alpha_min() + 0.25,
            alpha_max() - 0.05,
            alpha_max(),
        ] {
            let exact = localdim_packing_exact(&setup, alpha).unwrap();
            let lower = localdim_packing_lower(&setup, alpha).unwrap();
            assert!(
                (exact - lower).abs() < 1e-8,
                "alpha={alpha} exact={exact} lower={lower}"
            );
        }
    }

    #[test]
    fn lower_bound_dominates_nielsen_at_typical_exponent() {
        let (spec, _) = example3();
        let p =
            ProbVector::from_aligned(spec.digits().to_vec(), vec![0.15, 0.6, 0.25]).unwrap();
        let setup = pj_potential(&spec, &p).unwrap();
        assert_eq!(is_one_dimensional(&setup), None);
        let alpha = local_dim_value(&setup, &p);
        let lower = localdim_packing_lower(&setup, alpha).unwrap();
        let nielsen = nielsen_dimension(&spec, &p);
        assert!(lower >= nielsen - 1e-8, "lower={lower} nielsen={nielsen}");
        assert!(lower <= packing_dimension(&spec) + 1e-9);
    }

    #[test]
    fn single_digit_sponge_degenerates() {
        let spec = SpongeSpec::new(vec![3, 2], vec![vec![1, 1]]).unwrap();
        let p = ProbVector::uniform(spec.digits().to_vec());
        let setup = pj_potential(&spec, &p).unwrap();
        let (lo, hi) = localdim_domain(&setup);
        assert_eq!((lo, hi), (0.0, 0.0));
        assert_eq!(localdim_packing_lower(&setup, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn curves() {
        let (spec, p) = example3();
        let setup = pj_potential(&spec, &p).unwrap();
        let curve = localdim_curve(&setup, 21).unwrap();
        assert_eq!(curve.kind, SpectrumKind::LocalDim);
        assert_eq!(curve.grid.len(), 21);
        let skew =
            ProbVector::from_aligned(spec.digits().to_vec(), vec![0.15, 0.6, 0.25]).unwrap();
        let setup = pj_potential(&spec, &skew).unwrap();
        let curve = localdim_curve(&setup, 7).unwrap();
        assert_eq!(curve.kind, SpectrumKind::LocalDimLower);
        assert_eq!(curve.grid.len() + curve.dropped.len(), 7);
    }
}
