//! Low-rank matrix reconstruction from partial, possibly noisy observations.
//!
//! The crate is organized around two convex relaxations of matrix rank that
//! drive everything else:
//!
//! * the **trace norm** (nuclear norm) `‖X‖_Σ`, the sum of singular values, and
//! * the **max norm** `‖X‖_max`, the smallest value of
//!   `(max row norm of U) · (max row norm of V)` over all factorizations
//!   `X = U Vᵀ`.
//!
//! Both norms sandwich matrix structure between elementwise quantities:
//! `‖X‖_F ≤ ‖X‖_Σ ≤ √rank · ‖X‖_F` and `|X|_∞ ≤ ‖X‖_max ≤ √rank · |X|_∞`.
//!
//! On top of the norms the crate provides:
//!
//! * [`linalg`] — a small dense-matrix kernel: one-sided Jacobi SVD, power
//!   iteration for the spectral norm, elementwise norms, numerical rank, and a
//!   plain-text matrix file format;
//! * [`norms`] — trace-norm and max-norm computations (the max norm is
//!   bracketed between a certified lower and upper bound), incoherence
//!   statistics, and closed-form sample-complexity calculators;
//! * [`sampling`] — index sampling with and without replacement, noise models,
//!   and observation generation with per-entry or per-observation semantics;
//! * [`estimators`] — empirical-risk minimizers over trace-norm and max-norm
//!   balls (optionally intersected with an entrywise box), plus a brute-force
//!   oracle for tiny problems;
//! * [`rademacher`] — empirical Rademacher-complexity estimators for the norm
//!   balls, closed-form complexity bounds, and exact finite-class
//!   generalization-gap enumeration used to validate sampling-model
//!   reductions;
//! * [`harness`] — reproducible scaling experiments that measure how
//!   reconstruction error decays with the number of observations.
//!
//! All randomized routines take explicit 64-bit seeds and use a fixed,
//! portable generator (ChaCha8); see [`rng`] for the stream-splitting rule.
//! The matrix kernel is generic over the scalar type through the
//! [`scalar::Real`] trait; the stochastic layers work with `f64` via the
//! [`Mat`] alias.

pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod norms;
pub mod rademacher;
pub mod rng;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;

/// Double-precision dense matrix, the working type of the stochastic layers.
pub type Mat = DenseMatrix<f64>;
/// Single-precision dense matrix.
pub type Mat32 = DenseMatrix<f32>;
