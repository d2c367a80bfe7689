//! Gradient descent on deep symmetric matrix factorization: simulation of
//! the factor dynamics, closed-form timing of the low-rank window, and the
//! stability of that window under symmetric Gaussian perturbations.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod perturbation;
pub mod rng;
pub mod spectral;
pub mod timing;

pub use error::{Error, Result};
