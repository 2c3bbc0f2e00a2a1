//! Matrix norms, rank sandwiches, incoherence diagnostics, and closed-form
//! sample-complexity calculators.
//!
//! The two central quantities are the trace norm `‖X‖_Σ` (sum of singular
//! values) and the max norm
//!
//! ```text
//!   ‖X‖_max = min { (max_i ‖U_(i)‖) · (max_j ‖V_(j)‖) : U Vᵀ = X } ,
//! ```
//!
//! the minimum over all factorizations of the product of largest factor row
//! norms. Both sandwich rank-related structure between elementwise norms:
//!
//! ```text
//!   ‖X‖_F ≤ ‖X‖_Σ ≤ √rank(X) · ‖X‖_F
//!   |X|_∞ ≤ ‖X‖_max ≤ √rank(X) · |X|_∞
//! ```
//!
//! The max norm is not computed exactly (that would need an SDP solver);
//! [`bracket::max_norm_bracket`] returns a certified lower/upper bracket
//! instead, exact for rank-1 matrices and tight on the small cases the test
//! suite exercises.

pub mod bracket;
pub mod complexity;
pub mod incoherence;

pub use bracket::{max_norm_bracket, BracketOptions, MaxNormBracket};
pub use complexity::{
    sample_complexity, smooth_excess_bound, SampleComplexityFormula, SampleComplexityQuery,
};
pub use incoherence::{incoherence, max_norm_incoherence_bound, IncoherenceProfile};

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, svd, DenseMatrix, DEFAULT_RANK_REL_TOL};
use crate::scalar::Real;

/// Trace norm (nuclear norm): the sum of singular values.
pub fn trace_norm<T: Real>(x: &DenseMatrix<T>) -> Result<T> {
    Ok(svd(x)?.trace_norm())
}

/// The trace-norm rank sandwich `‖X‖_F ≤ ‖X‖_Σ ≤ √rank · ‖X‖_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRankSandwich<T> {
    /// Lower side: the Frobenius norm.
    pub lo: T,
    /// The trace norm.
    pub mid: T,
    /// Upper side: `√rank · ‖X‖_F` at the numerical rank.
    pub hi: T,
    /// Numerical rank used for the upper side.
    pub rank: usize,
}

/// Evaluate the trace-norm sandwich at the numerical rank of `X`.
pub fn trace_rank_sandwich<T: Real>(x: &DenseMatrix<T>) -> Result<TraceRankSandwich<T>> {
    let d = svd(x)?;
    let lo = x.frobenius_norm();
    let mid = d.trace_norm();
    let rank = numerical_rank(x, DEFAULT_RANK_REL_TOL)?;
    let hi = T::from_f64_lossy(rank as f64).sqrt() * lo;
    Ok(TraceRankSandwich { lo, mid, hi, rank })
}

/// The max-norm rank sandwich `|X|_∞ ≤ ‖X‖_max ≤ √rank · |X|_∞`, checked
/// at the certifiable level against a computed bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxNormSandwichReport<T> {
    /// `|X|_∞`.
    pub linf: T,
    /// Certified lower bound on `‖X‖_max`.
    pub lower: T,
    /// Certified upper bound on `‖X‖_max`.
    pub upper: T,
    /// `√rank · |X|_∞` at the numerical rank.
    pub rank_bound: T,
    /// Numerical rank used for the upper side.
    pub rank: usize,
}

/// Check the max-norm sandwich for `X` against its computed bracket.
///
/// The certifiable restatement is `lower ≤ √rank·|X|_∞ + 1e-6` and
/// `upper ≥ |X|_∞ − 1e-9`; a violation of either side is reported as an
/// internal-inconsistency error naming the broken side, since it can only
/// come from a kernel bug.
pub fn max_norm_rank_sandwich<T: Real>(
    x: &DenseMatrix<T>,
    bracket: &MaxNormBracket<T>,
) -> Result<MaxNormSandwichReport<T>> {
    let linf = x.max_abs();
    let rank = numerical_rank(x, DEFAULT_RANK_REL_TOL)?;
    let rank_bound = T::from_f64_lossy(rank as f64).sqrt() * linf;
    let report = MaxNormSandwichReport {
        linf,
        lower: bracket.lower,
        upper: bracket.upper,
        rank_bound,
        rank,
    };
    if bracket.lower > rank_bound + T::from_f64_lossy(1e-6) {
        return Err(Error::Inconsistency(format!(
            "max-norm lower bound {:e} exceeds √rank·|X|_∞ = {:e}",
            bracket.lower.to_f64_lossy(),
            rank_bound.to_f64_lossy()
        )));
    }
    if bracket.upper < linf - T::from_f64_lossy(1e-9) {
        return Err(Error::Inconsistency(format!(
            "max-norm upper bound {:e} falls below |X|_∞ = {:e}",
            bracket.upper.to_f64_lossy(),
            linf.to_f64_lossy()
        )));
    }
    Ok(report)
}
