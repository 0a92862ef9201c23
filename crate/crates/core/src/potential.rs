//! Locally constant potentials on the symbolic space.
//!
//! A locally constant potential depends only on the first symbol of the
//! sequence, so it is a finite map `D -> R^N`. This is the only potential
//! class the crate accepts: it is the class for which the spectrum programs
//! reduce to finite-dimensional entropy maximization over the simplex.

use crate::sponge::{Digit, SpongeSpec};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("potential digits do not match the sponge digit set")]
    AlphabetMismatch,
    #[error("potential value at {digit:?} is not finite")]
    NonFinite { digit: Vec<u32> },
    #[error("inconsistent value arity: expected {expected}, got {got} at {digit:?}")]
    ArityMismatch {
        digit: Vec<u32>,
        expected: usize,
        got: usize,
    },
    #[error("potential must have at least one component")]
    Empty,
}

/// A map `D -> R^N`, stored aligned with the sponge's canonical digit order.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    digits: Vec<Digit>,
    values: Vec<Vec<f64>>,
    arity: usize,
}

impl Potential {
    /// Builds a potential from (digit, value) pairs; the digit set must be
    /// exactly the sponge's.
    pub fn new(spec: &SpongeSpec, mut pairs: Vec<(Digit, Vec<f64>)>) -> Result<Self, PotentialError> {
        if pairs.len() != spec.digit_count() {
            return Err(PotentialError::AlphabetMismatch);
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if pairs.iter().map(|(d, _)| d).ne(spec.digits().iter()) {
            return Err(PotentialError::AlphabetMismatch);
        }
        Self::from_aligned(spec, pairs.into_iter().map(|(_, v)| v).collect())
    }

    /// Builds from values already aligned with the canonical digit order.
    pub fn from_aligned(spec: &SpongeSpec, values: Vec<Vec<f64>>) -> Result<Self, PotentialError> {
        if values.len() != spec.digit_count() {
            return Err(PotentialError::AlphabetMismatch);
        }
        let arity = values.first().map(|v| v.len()).unwrap_or(0);
        if arity == 0 {
            return Err(PotentialError::Empty);
        }
        for (dgt, v) in spec.digits().iter().zip(&values) {
            if v.len() != arity {
                return Err(PotentialError::ArityMismatch {
                    digit: dgt.coords().to_vec(),
                    expected: arity,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(PotentialError::NonFinite {
                    digit: dgt.coords().to_vec(),
                });
            }
        }
        Ok(Potential {
            digits: spec.digits().to_vec(),
            values,
            arity,
        })
    }

    /// Scalar potential from per-digit values in canonical order.
    pub fn scalar(spec: &SpongeSpec, values: Vec<f64>) -> Result<Self, PotentialError> {
        Self::from_aligned(spec, values.into_iter().map(|v| vec![v]).collect())
    }

    /// Indicator of a single digit (1 there, 0 elsewhere).
    pub fn indicator(spec: &SpongeSpec, at: &Digit) -> Self {
        let values = spec
            .digits()
            .iter()
            .map(|d| vec![if d == at { 1.0 } else { 0.0 }])
            .collect();
        Potential {
            digits: spec.digits().to_vec(),
            values,
            arity: 1,
        }
    }

    /// Constant scalar potential.
    pub fn constant(spec: &SpongeSpec, c: f64) -> Self {
        Potential {
            digits: spec.digits().to_vec(),
            values: vec![vec![c]; spec.digit_count()],
            arity: 1,
        }
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    /// Values aligned with the canonical digit order.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Number of components N.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_scalar(&self) -> bool {
        self.arity == 1
    }

    /// The j-th component as a per-digit functional.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[j]).collect()
    }

    /// Applies `phi -> a*phi + b` componentwise.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Potential {
            digits: self.digits.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|x| a * x + b).collect())
                .collect(),
            arity: self.arity,
        }
    }
}
