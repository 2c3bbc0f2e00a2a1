//! Incoherence diagnostics for low-rank matrices.
//!
//! For `M` with thin SVD `M = U Σ Vᵀ` at numerical rank `r`, the two
//! incoherence parameters measure how evenly the singular subspaces spread
//! over the coordinate axes:
//!
//! ```text
//!   μ₀ = max{ (n/r)·max_i ‖U_(i)‖² , (m/r)·max_j ‖V_(j)‖² }
//!   μ₁ = √(nm/r) · max_{ij} |U_(i) · V_(j)|
//! ```
//!
//! (`U_(i)` is the i-th row). Both are 1 for perfectly spread subspaces and
//! grow toward `n/r`-scale for spiky ones. `κ = σ₁/σ_r` is the condition
//! number restricted to the retained spectrum.

use crate::error::{Error, Result};
use crate::linalg::{svd, DenseMatrix};
use crate::scalar::Real;

/// Incoherence diagnostics at the numerical rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncoherenceProfile<T> {
    /// Subspace spikiness `μ₀ ∈ [1, max(n,m)/r]`.
    pub mu0: T,
    /// Cross-correlation spikiness `μ₁`.
    pub mu1: T,
    /// Condition number `σ₁/σ_r` over the retained spectrum.
    pub kappa: T,
    /// Numerical rank the profile was computed at.
    pub rank: usize,
}

/// Compute `(μ₀, μ₁, κ)` for `M` at numerical rank determined by `rank_tol`
/// (relative to `σ₁`). The zero matrix has no singular subspaces and is
/// rejected as a parameter error.
pub fn incoherence<T: Real>(m: &DenseMatrix<T>, rank_tol: f64) -> Result<IncoherenceProfile<T>> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::Parameter(format!(
            "rank tolerance must lie in (0, 1), got {rank_tol}"
        )));
    }
    let dec = svd(m)?;
    let top = dec.sigma.first().copied().unwrap_or_else(T::zero);
    if top == T::zero() {
        return Err(Error::Parameter(
            "incoherence of the zero matrix is undefined".into(),
        ));
    }
    let cut = top * T::from_f64_lossy(rank_tol);
    let rank = dec.sigma.iter().filter(|&&s| s > cut).count().max(1);
    let (n, mm) = (m.rows(), m.cols());
    let rf = rank as f64;

    let mut max_u = T::zero();
    for i in 0..n {
        let mut acc = T::zero();
        for l in 0..rank {
            let v = dec.u.get(i, l);
            acc = acc + v * v;
        }
        if acc > max_u {
            max_u = acc;
        }
    }
    let mut max_v = T::zero();
    for j in 0..mm {
        let mut acc = T::zero();
        for l in 0..rank {
            let v = dec.v.get(j, l);
            acc = acc + v * v;
        }
        if acc > max_v {
            max_v = acc;
        }
    }
    let mu0_u = T::from_f64_lossy(n as f64 / rf) * max_u;
    let mu0_v = T::from_f64_lossy(mm as f64 / rf) * max_v;
    let mu0 = if mu0_u > mu0_v { mu0_u } else { mu0_v };

    let mut max_cross = T::zero();
    for i in 0..n {
        for j in 0..mm {
            let mut acc = T::zero();
            for l in 0..rank {
                acc = acc + dec.u.get(i, l) * dec.v.get(j, l);
            }
            let a = acc.abs();
            if a > max_cross {
                max_cross = a;
            }
        }
    }
    let mu1 = T::from_f64_lossy((n as f64 * mm as f64 / rf).sqrt()) * max_cross;

    let sig_r = dec.sigma[rank - 1];
    let kappa = top / sig_r;

    Ok(IncoherenceProfile { mu0, mu1, kappa, rank })
}

/// Incoherence-based elementwise ceiling on the max norm:
///
/// ```text
///   ‖M‖_max ≤ min{κ, √r} · μ₀ · √r · ‖M‖_F / √(nm) .
/// ```
///
/// Returns the bound value; the profile must come from the same matrix.
pub fn max_norm_incoherence_bound<T: Real>(
    m: &DenseMatrix<T>,
    profile: &IncoherenceProfile<T>,
) -> T {
    let r = T::from_f64_lossy(profile.rank as f64);
    let sqrt_r = r.sqrt();
    let lead = if profile.kappa < sqrt_r { profile.kappa } else { sqrt_r };
    let nm = T::from_f64_lossy(m.rows() as f64 * m.cols() as f64);
    lead * profile.mu0 * sqrt_r * m.frobenius_norm() / nm.sqrt()
}
