//! Probability vectors over digit sets and their entropies.
//!
//! Bernoulli measures on the sponge are identified with probability vectors
//! over `D`. Pushing forward under `eta_k` sums the weights of each
//! projection class. The weighted entropy
//! `w_1 h(p) + sum_k w_k h(eta_k p)` is both Nielsen's dimension of the
//! frequency set and the Kenyon-Peres Hausdorff objective.

use crate::potential::Potential;
use crate::sponge::{Digit, SpongeSpec};

/// Absolute tolerance on the simplex sum.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;
/// Entries below this are rejected; negatives above it are clamped to zero.
/// Downstream optimizers emit near-boundary iterates.
pub const NEGATIVE_ENTRY_TOL: f64 = -1e-14;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("probabilities sum to {0}, expected 1 within {SIMPLEX_SUM_TOL:e}")]
    NotNormalized(f64),
    #[error("negative probability {value} at digit {digit:?}")]
    NegativeEntry { digit: Vec<u32>, value: f64 },
    #[error("probability keys do not match the alphabet")]
    AlphabetMismatch,
    #[error("non-finite probability at digit {0:?}")]
    NonFinite(Vec<u32>),
}

/// A probability vector over an alphabet of digits (the sponge's digit set
/// or one of its projections). Entries are aligned with the alphabet's
/// canonical lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    alphabet: Vec<Digit>,
    probs: Vec<f64>,
}

impl ProbVector {
    /// Builds a probability vector over the given alphabet, checking the
    /// simplex invariants. `pairs` may come in any order.
    pub fn new(alphabet: Vec<Digit>, mut pairs: Vec<(Digit, f64)>) -> Result<Self, MeasureError> {
        if pairs.len() != alphabet.len() {
            return Err(MeasureError::AlphabetMismatch);
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if pairs
            .iter()
            .map(|(d, _)| d)
            .ne(alphabet.iter())
        {
            return Err(MeasureError::AlphabetMismatch);
        }
        Self::from_aligned(alphabet, pairs.into_iter().map(|(_, p)| p).collect())
    }

    /// Builds from probabilities already aligned with the alphabet order.
    pub fn from_aligned(alphabet: Vec<Digit>, mut probs: Vec<f64>) -> Result<Self, MeasureError> {
        if probs.len() != alphabet.len() {
            return Err(MeasureError::AlphabetMismatch);
        }
        for (dgt, p) in alphabet.iter().zip(probs.iter_mut()) {
            if !p.is_finite() {
                return Err(MeasureError::NonFinite(dgt.coords().to_vec()));
            }
            if *p < NEGATIVE_ENTRY_TOL {
                return Err(MeasureError::NegativeEntry {
                    digit: dgt.coords().to_vec(),
                    value: *p,
                });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(MeasureError::NotNormalized(sum));
        }
        Ok(ProbVector { alphabet, probs })
    }

    /// Uniform distribution over an alphabet.
    pub fn uniform(alphabet: Vec<Digit>) -> Self {
        let n = alphabet.len();
        assert!(n > 0);
        ProbVector {
            probs: vec![1.0 / n as f64; n],
            alphabet,
        }
    }

    /// Point mass at one symbol of the alphabet.
    pub fn point_mass(alphabet: Vec<Digit>, at: &Digit) -> Result<Self, MeasureError> {
        let idx = alphabet
            .binary_search(at)
            .map_err(|_| MeasureError::AlphabetMismatch)?;
        let mut probs = vec![0.0; alphabet.len()];
        probs[idx] = 1.0;
        Ok(ProbVector { alphabet, probs })
    }

    pub fn alphabet(&self) -> &[Digit] {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, dgt: &Digit) -> Option<f64> {
        self.alphabet.binary_search(dgt).ok().map(|i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Shannon entropy in nats. Bounded by the log of the alphabet size.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EntropyValue {
    pub nats: f64,
}

/// `-sum p_i log p_i` with the hard-coded convention `0 log 0 = 0`.
pub fn entropy(p: &ProbVector) -> EntropyValue {
    EntropyValue {
        nats: entropy_nats(p.probs()),
    }
}

pub(crate) fn entropy_nats(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    // tiny negative round-off from p near 1
    h.max(0.0)
}

/// Pushforward of `p` under the level-k projection: class weights are the
/// sums of the member weights.
pub fn marginal(spec: &SpongeSpec, p: &ProbVector, k: usize) -> ProbVector {
    assert_eq!(p.alphabet(), spec.digits(), "measure not over the digit set");
    let (class_of, n_classes) = spec.projection_classes(k);
    let mut probs = vec![0.0; n_classes];
    for (i, &c) in class_of.iter().enumerate() {
        probs[c] += p.probs[i];
    }
    ProbVector {
        alphabet: spec.projected_alphabet(k),
        probs,
    }
}

/// Componentwise mean `sum_i p_i phi(i)` of a potential.
pub fn potential_mean(p: &ProbVector, phi: &Potential) -> Vec<f64> {
    assert_eq!(p.alphabet(), phi.digits(), "potential alphabet mismatch");
    let n = phi.arity();
    let mut mean = vec![0.0; n];
    for (pi, values) in p.probs.iter().zip(phi.values()) {
        for (m, v) in mean.iter_mut().zip(values) {
            *m += pi * v;
        }
    }
    mean
}

/// The weighted entropy `w_1 h(p) + sum_{k>=2} w_k h(eta_k p)`.
///
/// This is Nielsen's common Hausdorff and packing dimension of the frequency
/// set of `p`, and the objective maximized by the Hausdorff dimension of the
/// sponge.
pub fn weighted_entropy(spec: &SpongeSpec, p: &ProbVector) -> f64 {
    let wts = spec.dimension_weights();
    let mut total = wts.w[0] * entropy(p).nats;
    for k in 2..=spec.d() {
        total += wts.w[k - 1] * entropy(&marginal(spec, p, k)).nats;
    }
    total
}
