//! Kronecker-structured dictionary learning.
//!
//! Synthetic data generation for tensor observations `Y = (D_K ⊗ … ⊗ D_1) X + N`,
//! a two-step estimator for second-order tensors, closed-form minimax bound
//! evaluators and a packing-set construction with numerical verification.

// range checks are written `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coefficients;
pub mod dictionary;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod tensor;

pub use error::{Error, Result};
