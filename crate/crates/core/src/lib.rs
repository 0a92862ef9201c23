//! Dimensions and multifractal spectra of self-affine Sierpinski sponges.
//!
//! A Sierpinski sponge is the repeller of an integer diagonal map on the
//! d-torus restricted to a digit set; for d = 2 it is a Bedford-McMullen
//! carpet. This crate computes
//!
//! - Hausdorff, packing, and box dimensions of the sponge,
//! - Hausdorff and packing multifractal spectra of Birkhoff averages of
//!   locally constant potentials, including divergence-set spectra,
//! - packing spectra of pointwise dimension for one-dimensional Bernoulli
//!   measures under the very strong separation condition,
//!
//! all through constrained entropy maximization over digit-probability
//! simplices, with closed-form cross-checks and an exhaustive grid oracle.

pub mod cli;
pub mod dimension;
pub mod files;
pub mod localdim;
pub mod measures;
pub mod optimize;
pub mod potential;
pub mod spectra;
pub mod sponge;

pub use measures::{entropy, marginal, potential_mean, weighted_entropy, EntropyValue, ProbVector};
pub use potential::Potential;
pub use sponge::{Digit, SpongeError, SpongeInput, SpongeSpec, Weights};
