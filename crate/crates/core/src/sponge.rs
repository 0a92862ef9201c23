//! Sponge specifications and the combinatorics of approximate squares.
//!
//! A self-affine Sierpinski sponge on the d-torus is determined by integer
//! bases `a_1 > a_2 > ... > a_d >= 2` and a digit set `D` of d-tuples, one
//! per Markov cell. This module validates sponge specifications, computes
//! the coordinate projections `eta_k` (keeping coordinates `k..d`), the
//! dimension weights `w_k = 1/log a_k - 1/log a_{k-1}`, and the exact count
//! of level-n approximate squares meeting the repeller.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A digit of the sponge: one coordinate index per axis.
///
/// Ordering is lexicographic on the coordinate tuple; that order is the
/// canonical iteration order for every digit-keyed map in the crate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Digit(pub Vec<u32>);

impl Digit {
    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<u32>> for Digit {
    fn from(coords: Vec<u32>) -> Self {
        Digit(coords)
    }
}

/// Raw, unvalidated sponge data as parsed from a config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpongeInput {
    pub bases: Vec<u32>,
    pub digits: Vec<Vec<u32>>,
}

/// Validation failures for sponge specifications.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpongeError {
    #[error("bases must satisfy a_1 > a_2 > ... > a_d >= 2, got {0:?}")]
    BasesNotDecreasing(Vec<u32>),
    #[error("digit {digit:?} out of range: coordinate {axis} must be < {bound}")]
    DigitOutOfRange {
        digit: Vec<u32>,
        axis: usize,
        bound: u32,
    },
    #[error("digit set is empty")]
    EmptyDigitSet,
    #[error("duplicate digit {0:?}")]
    DuplicateDigit(Vec<u32>),
    #[error("digit {digit:?} has {got} coordinates, expected {expected}")]
    DigitLengthMismatch {
        digit: Vec<u32>,
        got: usize,
        expected: usize,
    },
}

/// A validated sponge specification.
///
/// Digits are stored deduplicated in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpongeSpec {
    bases: Vec<u32>,
    digits: Vec<Digit>,
}

impl SpongeSpec {
    /// Validates raw input into a sponge specification.
    pub fn validate(raw: &SpongeInput) -> Result<Self, SpongeError> {
        let d = raw.bases.len();
        if d == 0 {
            return Err(SpongeError::BasesNotDecreasing(raw.bases.clone()));
        }
        for q in 0..d {
            if raw.bases[q] < 2 || (q + 1 < d && raw.bases[q] <= raw.bases[q + 1]) {
                return Err(SpongeError::BasesNotDecreasing(raw.bases.clone()));
            }
        }
        if raw.digits.is_empty() {
            return Err(SpongeError::EmptyDigitSet);
        }
        let mut digits = Vec::with_capacity(raw.digits.len());
        for coords in &raw.digits {
            if coords.len() != d {
                return Err(SpongeError::DigitLengthMismatch {
                    digit: coords.clone(),
                    got: coords.len(),
                    expected: d,
                });
            }
            for (axis, (&c, &b)) in coords.iter().zip(&raw.bases).enumerate() {
                if c >= b {
                    return Err(SpongeError::DigitOutOfRange {
                        digit: coords.clone(),
                        axis: axis + 1,
                        bound: b,
                    });
                }
            }
            digits.push(Digit(coords.clone()));
        }
        digits.sort();
        for w in digits.windows(2) {
            if w[0] == w[1] {
                return Err(SpongeError::DuplicateDigit(w[0].0.clone()));
            }
        }
        Ok(SpongeSpec {
            bases: raw.bases.clone(),
            digits,
        })
    }

    /// Convenience constructor for tests and bindings.
    pub fn new(bases: Vec<u32>, digits: Vec<Vec<u32>>) -> Result<Self, SpongeError> {
        SpongeSpec::validate(&SpongeInput { bases, digits })
    }

    /// Ambient dimension d.
    pub fn d(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[u32] {
        &self.bases
    }

    /// Digits in canonical (lexicographic) order.
    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn digit_count(&self) -> usize {
        self.digits.len()
    }

    /// Index of a digit in the canonical order.
    pub fn digit_index(&self, dgt: &Digit) -> Option<usize> {
        self.digits.binary_search(dgt).ok()
    }

    /// Projection of a single digit onto coordinates `k..d` (1-based level).
    ///
    /// Level 1 is the identity; level d keeps only the slowest-expanding
    /// coordinate.
    pub fn project_digit(&self, dgt: &Digit, k: usize) -> Digit {
        assert!(
            k >= 1 && k <= self.d(),
            "projection level {k} out of range 1..={}",
            self.d()
        );
        assert_eq!(dgt.len(), self.d(), "digit length mismatch");
        Digit(dgt.0[k - 1..].to_vec())
    }

    /// The projected alphabet `eta_k(D)`, deduplicated and sorted.
    pub fn projected_alphabet(&self, k: usize) -> Vec<Digit> {
        let mut out: Vec<Digit> = self
            .digits
            .iter()
            .map(|dgt| self.project_digit(dgt, k))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// For each digit, the index of its class in `projected_alphabet(k)`.
    pub fn projection_classes(&self, k: usize) -> (Vec<usize>, usize) {
        let alphabet = self.projected_alphabet(k);
        let class_of = self
            .digits
            .iter()
            .map(|dgt| {
                let proj = self.project_digit(dgt, k);
                alphabet.binary_search(&proj).expect("projected digit in alphabet")
            })
            .collect();
        (class_of, alphabet.len())
    }

    /// Dimension weights of the Kenyon-Peres formula.
    pub fn dimension_weights(&self) -> Weights {
        let d = self.d();
        let logs: Vec<f64> = self.bases.iter().map(|&a| f64::from(a).ln()).collect();
        let lambda: Vec<f64> = logs.iter().map(|&l| logs[d - 1] / l).collect();
        let mut w = Vec::with_capacity(d);
        w.push(1.0 / logs[0]);
        for k in 1..d {
            w.push(1.0 / logs[k] - 1.0 / logs[k - 1]);
        }
        Weights { lambda, w }
    }

    /// Exact number of level-n approximate squares meeting the repeller.
    ///
    /// For the full shift every digit word is admissible, so the count is
    /// `(#D)^ceil(lambda_1 n) * prod_j (#eta_j(D))^(ceil(lambda_j n) - ceil(lambda_{j-1} n))`.
    /// The integer is materialized exactly; it grows like `a_d^(dim * n)`.
    pub fn approximate_square_count(&self, n: u32) -> BigUint {
        assert!(n >= 1, "level must be >= 1");
        let mut count = BigUint::from(1u32);
        let mut prev = 0u64;
        for (j, e) in self.level_exponents(n).into_iter().enumerate() {
            let card = if j == 0 {
                self.digit_count()
            } else {
                self.projected_alphabet(j + 1).len()
            };
            count *= BigUint::from(card).pow(u32::try_from(e - prev).expect("exponent fits u32"));
            prev = e;
        }
        count
    }

    /// Cumulative word lengths `ceil(lambda_j * n)` for j = 1..d.
    fn level_exponents(&self, n: u32) -> Vec<u64> {
        let d = self.d();
        let a_d = self.bases[d - 1];
        self.bases
            .iter()
            .enumerate()
            .map(|(j, &a_j)| {
                let e = ceil_log_ratio(a_j, a_d, n);
                // lambda is increasing in j, so cumulative lengths are too.
                debug_assert!(j == 0 || e >= ceil_log_ratio(self.bases[j - 1], a_d, n));
                e
            })
            .collect()
    }

    /// Box-dimension estimate `log N(n) / (n log a_d)` from exponents only.
    ///
    /// Converges to the packing dimension with error at most
    /// `d log(#D) / (n log a_d)`.
    pub fn box_dim_estimate(&self, n: u32) -> f64 {
        assert!(n >= 1, "level must be >= 1");
        assert!(n <= i32::MAX as u32, "level capped at 2^31 - 1");
        let exps = self.level_exponents(n);
        let mut prev = 0u64;
        // Kahan summation: the per-level terms can differ by orders of
        // magnitude for large n.
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for (j, e) in exps.into_iter().enumerate() {
            let card = if j == 0 {
                self.digit_count()
            } else {
                self.projected_alphabet(j + 1).len()
            };
            let term = (e - prev) as f64 * (card as f64).ln();
            let y = term - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
            prev = e;
        }
        let a_d = f64::from(self.bases[self.d() - 1]).ln();
        sum / (f64::from(n) * a_d)
    }
}

/// `ceil(n * log(a_d) / log(a_j))`, exact.
///
/// When a_j and a_d are powers of a common base the ratio is rational and the
/// ceiling is computed with integer arithmetic; otherwise the ratio is
/// irrational, never integral, and the f64 value rounds correctly.
fn ceil_log_ratio(a_j: u32, a_d: u32, n: u32) -> u64 {
    if a_j == a_d {
        return u64::from(n);
    }
    if let Some((s, t)) = common_power_exponents(a_j, a_d) {
        // lambda = t/s exactly.
        let num = u64::from(n) * u64::from(t);
        return num.div_ceil(u64::from(s));
    }
    (f64::from(n) * f64::from(a_d).ln() / f64::from(a_j).ln()).ceil() as u64
}

/// If `a = c^s` and `b = c^t` for some integer base c, returns `(s, t)`.
fn common_power_exponents(a: u32, b: u32) -> Option<(u32, u32)> {
    for c in 2..=b.min(a) {
        if let (Some(s), Some(t)) = (exact_log(a, c), exact_log(b, c)) {
            return Some((s, t));
        }
    }
    None
}

/// Returns e with `c^e == x`, if any.
fn exact_log(x: u32, c: u32) -> Option<u32> {
    let mut acc = 1u64;
    let mut e = 0u32;
    while acc < u64::from(x) {
        acc *= u64::from(c);
        e += 1;
    }
    (acc == u64::from(x)).then_some(e)
}

/// Scaling exponents `lambda_j = log a_d / log a_j` and the dimension
/// weights `w_1 = 1/log a_1`, `w_k = 1/log a_k - 1/log a_{k-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub lambda: Vec<f64>,
    pub w: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example1() -> SpongeSpec {
        SpongeSpec::new(vec![3, 2], vec![vec![0, 0], vec![1, 1], vec![2, 0]]).unwrap()
    }

    fn example3() -> SpongeSpec {
        SpongeSpec::new(vec![4, 3], vec![vec![0, 0], vec![2, 2], vec![3, 0]]).unwrap()
    }

    #[test]
    fn validates_example_sponge() {
        let spec = example1();
        assert_eq!(spec.d(), 2);
        assert_eq!(spec.digit_count(), 3);
        // canonical order is lexicographic
        assert_eq!(
            spec.digits().iter().map(|d| d.0.clone()).collect::<Vec<_>>(),
            vec![vec![0, 0], vec![1, 1], vec![2, 0]]
        );
    }

    #[test]
    fn rejects_nondecreasing_bases() {
        let err = SpongeSpec::new(vec![2, 3], vec![vec![0, 0]]).unwrap_err();
        assert!(matches!(err, SpongeError::BasesNotDecreasing(_)));
        let err = SpongeSpec::new(vec![3, 1], vec![vec![0, 0]]).unwrap_err();
        assert!(matches!(err, SpongeError::BasesNotDecreasing(_)));
    }

    #[test]
    fn rejects_out_of_range_digit() {
        let err = SpongeSpec::new(vec![3, 2], vec![vec![3, 0]]).unwrap_err();
        assert!(matches!(err, SpongeError::DigitOutOfRange { axis: 1, .. }));
    }

    #[test]
    fn rejects_empty_and_duplicate() {
        assert_eq!(
            SpongeSpec::new(vec![3, 2], vec![]).unwrap_err(),
            SpongeError::EmptyDigitSet
        );
        let err = SpongeSpec::new(vec![3, 2], vec![vec![1, 1], vec![1, 1]]).unwrap_err();
        assert!(matches!(err, SpongeError::DuplicateDigit(_)));
    }

    #[test]
    fn projection_keeps_trailing_coordinates() {
        let spec = example1();
        assert_eq!(
            spec.project_digit(&Digit(vec![1, 1]), 2),
            Digit(vec![1])
        );
        let d = Digit(vec![2, 0]);
        assert_eq!(spec.project_digit(&d, 1), d);
        assert_eq!(
            example3().project_digit(&Digit(vec![3, 0]), 2),
            Digit(vec![0])
        );
    }

    #[test]
    fn projected_alphabets() {
        let spec = example1();
        assert_eq!(
            spec.projected_alphabet(2),
            vec![Digit(vec![0]), Digit(vec![1])]
        );
        assert_eq!(spec.projected_alphabet(1), spec.digits().to_vec());
        assert_eq!(
            example3().projected_alphabet(2),
            vec![Digit(vec![0]), Digit(vec![2])]
        );
    }

    #[test]
    fn projection_composition_consistent() {
        // projecting to level k then dropping further equals projecting
        // straight to the deeper level
        let spec = SpongeSpec::new(
            vec![5, 3, 2],
            vec![vec![0, 0, 0], vec![4, 2, 1], vec![3, 1, 0], vec![2, 2, 1]],
        )
        .unwrap();
        for dgt in spec.digits() {
            for k in 1..=3usize {
                for k2 in k..=3usize {
                    let via = spec.project_digit(dgt, k);
                    let rel = Digit(via.0[k2 - k..].to_vec());
                    assert_eq!(rel, spec.project_digit(dgt, k2));
                }
            }
        }
    }

    #[test]
    fn weights_example1() {
        let wts = example1().dimension_weights();
        let l2 = 2f64.ln();
        let l3 = 3f64.ln();
        assert!((wts.w[0] - 1.0 / l3).abs() < 1e-15);
        assert!((wts.w[1] - (1.0 / l2 - 1.0 / l3)).abs() < 1e-15);
        assert!((wts.lambda[0] - l2 / l3).abs() < 1e-15);
        assert_eq!(wts.lambda[1], 1.0);
    }

    #[test]
    fn weights_sum_telescopes() {
        for spec in [
            example1(),
            example3(),
            SpongeSpec::new(vec![7, 5, 2], vec![vec![0, 0, 0]]).unwrap(),
        ] {
            let wts = spec.dimension_weights();
            let sum: f64 = wts.w.iter().sum();
            let a_d = f64::from(*spec.bases().last().unwrap()).ln();
            assert!((sum - 1.0 / a_d).abs() < 1e-14);
            assert!(wts.w.iter().all(|&x| x > 0.0));
            assert!(wts.lambda.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn weights_one_dimensional() {
        let spec = SpongeSpec::new(vec![2], vec![vec![0], vec![1]]).unwrap();
        let wts = spec.dimension_weights();
        assert_eq!(wts.lambda, vec![1.0]);
        assert!((wts.w[0] - 1.0 / 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn square_count_example1() {
        let spec = example1();
        assert_eq!(spec.approximate_square_count(1), BigUint::from(3u32));
        // ceil(2 * log2/log3) = 2, so N(2) = 3^2 * 2^0
        assert_eq!(spec.approximate_square_count(2), BigUint::from(9u32));
    }

    #[test]
    fn square_count_single_digit() {
        let spec = SpongeSpec::new(vec![3, 2], vec![vec![1, 0]]).unwrap();
        for n in [1u32, 5, 17, 64] {
            assert_eq!(spec.approximate_square_count(n), BigUint::from(1u32));
        }
        assert_eq!(spec.box_dim_estimate(1), 0.0);
        assert_eq!(spec.box_dim_estimate(1000), 0.0);
    }

    #[test]
    fn square_count_matches_exponent_path() {
        // log of the exact big integer equals the exponent-arithmetic sum
        let spec = example1();
        for n in 1..=64u32 {
            let big = spec.approximate_square_count(n);
            let digits = big.to_string();
            let log_big = approx_ln_biguint(&big);
            let est = spec.box_dim_estimate(n) * f64::from(n) * 2f64.ln();
            assert!(
                (log_big - est).abs() < 1e-9 * est.max(1.0),
                "n={n} digits={digits}"
            );
        }
    }

    fn approx_ln_biguint(x: &BigUint) -> f64 {
        let s = x.to_string();
        let lead: f64 = s[..s.len().min(15)].parse().unwrap();
        lead.ln() + (s.len().saturating_sub(15)) as f64 * 10f64.ln()
    }

    #[test]
    fn full_product_digit_set_gives_dimension_d() {
        // bases 4,2: lambda_1 = 1/2 exactly, so even n makes both exponents
        // integral and the estimate telescopes to d
        let mut digits = Vec::new();
        for i in 0..4u32 {
            for j in 0..2u32 {
                digits.push(vec![i, j]);
            }
        }
        let spec = SpongeSpec::new(vec![4, 2], digits).unwrap();
        for n in [2u32, 10, 64, 1000] {
            assert!((spec.box_dim_estimate(n) - 2.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn exact_ceilings_for_power_related_bases() {
        // a_1 = 8 = 2^3, a_d = 2: lambda_1 = 1/3
        assert_eq!(ceil_log_ratio(8, 2, 3), 1);
        assert_eq!(ceil_log_ratio(8, 2, 4), 2);
        assert_eq!(ceil_log_ratio(9, 3, 2), 1);
        assert_eq!(ceil_log_ratio(4, 2, 999_999_999), 500_000_000);
    }

    #[test]
    fn box_estimate_converges_with_ceiling_bound() {
        let spec = example1();
        let packing = 2.0 - 2f64.ln() / 3f64.ln();
        for n in [100u32, 10_000, 1_000_000] {
            let bound = 2.0 * 3f64.ln() / (f64::from(n) * 2f64.ln());
            assert!((spec.box_dim_estimate(n) - packing).abs() <= bound, "n={n}");
        }
    }
}
