//! Singular value decomposition and spectral norm.
//!
//! The SVD is one-sided Jacobi: rotate pairs of columns of the (tall side
//! of the) matrix until all pairs are mutually orthogonal, at which point the
//! column norms are the singular values. The method is slow compared to
//! bidiagonalization-based solvers but simple, deterministic, and accurate at
//! the few-hundred-row scale this crate targets, with no dependency on an
//! external LAPACK.
//!
//! The spectral norm is computed independently by power iteration on `XᵀX`
//! with a deterministic seeded start vector plus one random restart; solvers
//! use [`top_singular_triplet`] to get the leading singular pair without a
//! full decomposition.

use rand::Rng as _;

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from};
use crate::scalar::Real;

/// Options for [`svd_with`].
#[derive(Debug, Clone, Copy)]
pub struct SvdOptions {
    /// Convergence threshold on `|⟨col_p, col_q⟩| / (‖col_p‖·‖col_q‖)`.
    pub tol: f64,
    /// Maximum number of full Jacobi sweeps.
    pub max_sweeps: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_sweeps: 64 }
    }
}

/// Thin SVD `X = U diag(σ) Vᵀ` with `k = min(rows, cols)` columns.
///
/// Singular values are sorted in descending order. `U` and `V` have
/// orthonormal columns even when `X` is rank-deficient (null directions are
/// completed from coordinate vectors).
#[derive(Debug, Clone)]
pub struct SvdResult<T: Real> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DenseMatrix<T>,
    /// Number of Jacobi sweeps performed.
    pub sweeps: usize,
}

impl<T: Real> SvdResult<T> {
    /// Sum of singular values.
    pub fn trace_norm(&self) -> T {
        let mut acc = T::zero();
        for s in &self.sigma {
            acc = acc + *s;
        }
        acc
    }

    /// Reconstruct `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> Result<DenseMatrix<T>> {
        let k = self.sigma.len();
        let us = DenseMatrix::from_fn(self.u.rows(), k, |i, j| self.u.get(i, j) * self.sigma[j])?;
        us.matmul_transpose(&self.v)
    }
}

/// One-sided Jacobi SVD with default options.
pub fn svd<T: Real>(x: &DenseMatrix<T>) -> Result<SvdResult<T>> {
    svd_with(x, &SvdOptions::default())
}

/// One-sided Jacobi SVD.
pub fn svd_with<T: Real>(x: &DenseMatrix<T>, opts: &SvdOptions) -> Result<SvdResult<T>> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Parameter(format!("svd needs 0 < tol < 1, got {}", opts.tol)));
    }
    // Work on the tall orientation so columns are the short dimension.
    let transposed = x.rows() < x.cols();
    let work = if transposed { x.transpose() } else { x.clone() };
    let (n, k) = (work.rows(), work.cols());
    let tol = T::from_f64_lossy(opts.tol);

    // Column-major copy of the working matrix; rotations touch columns.
    let mut a: Vec<Vec<T>> = (0..k).map(|j| work.col(j)).collect();
    let mut v: Vec<Vec<T>> = (0..k)
        .map(|j| (0..k).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();

    // Columns numerically indistinguishable from zero are frozen out of the
    // rotation schedule: on a rank-deficient input, cancellation leaves
    // near-null columns whose mutual cosine need not shrink even though
    // their absolute correlation is deep below roundoff in the spectrum.
    // Any such column reads as a zero singular value.
    let negligible =
        work.frobenius_norm() * T::epsilon() * T::from_f64_lossy((n as f64).max(16.0));

    let mut sweeps = 0;
    let mut converged = k < 2;
    let mut worst = T::zero();
    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        worst = T::zero();
        for p in 0..k - 1 {
            for q in p + 1..k {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = T::zero();
                for i in 0..n {
                    let xp = a[p][i];
                    let xq = a[q][i];
                    app = app + xp * xp;
                    aqq = aqq + xq * xq;
                    apq = apq + xp * xq;
                }
                if app.sqrt() <= negligible || aqq.sqrt() <= negligible {
                    continue;
                }
                let ratio = apq.abs() / (app.sqrt() * aqq.sqrt());
                worst = worst.max(ratio);
                if ratio <= tol {
                    continue;
                }
                // Jacobi rotation zeroing ⟨col_p, col_q⟩.
                let zeta = (aqq - app) / (apq + apq);
                let t = {
                    let denom = zeta.abs() + (T::one() + zeta * zeta).sqrt();
                    let mag = if denom.is_finite() && denom > T::zero() {
                        T::one() / denom
                    } else {
                        T::zero()
                    };
                    if zeta >= T::zero() {
                        mag
                    } else {
                        -mag
                    }
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                for i in 0..n {
                    let xp = a[p][i];
                    let xq = a[q][i];
                    a[p][i] = cs * xp - sn * xq;
                    a[q][i] = sn * xp + cs * xq;
                }
                for i in 0..k {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = cs * vp - sn * vq;
                    v[q][i] = sn * vp + cs * vq;
                }
            }
        }
        converged = worst <= tol;
    }
    if !converged {
        return Err(Error::NonConvergence {
            routine: "svd",
            detail: format!(
                "worst column-pair cosine {:e} above tolerance {:e} after {} sweeps",
                worst.to_f64_lossy(),
                opts.tol,
                sweeps
            ),
        });
    }

    // Column norms are the singular values; sort descending.
    let mut sigma: Vec<T> = a
        .iter()
        .map(|col| {
            let mut acc = T::zero();
            for e in col {
                acc = acc + *e * *e;
            }
            acc.sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite singular values"));
    let a: Vec<Vec<T>> = order.iter().map(|&j| std::mem::take(&mut a[j])).collect();
    let v: Vec<Vec<T>> = order.iter().map(|&j| std::mem::take(&mut v[j])).collect();
    sigma = order.iter().map(|&j| sigma[j]).collect();

    // Normalize the left columns; singular values indistinguishable from
    // zero get left vectors completed from coordinate directions so U stays
    // orthonormal. The cut matches the rotation-schedule freeze above.
    let tiny = negligible;
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(k);
    for (j, col) in a.into_iter().enumerate() {
        if sigma[j] > tiny && sigma[j] > T::zero() {
            let inv = T::one() / sigma[j];
            u_cols.push(col.into_iter().map(|e| e * inv).collect());
        } else {
            u_cols.push(complete_orthonormal(&u_cols, n));
        }
    }

    let u = DenseMatrix::from_fn(n, k, |i, j| u_cols[j][i])?;
    let vm = DenseMatrix::from_fn(k, k, |i, j| v[j][i])?;
    let (u, vm) = if transposed { (vm, u) } else { (u, vm) };
    Ok(SvdResult { u, sigma, v: vm, sweeps })
}

/// Pick the coordinate vector with the largest residual after projecting out
/// `existing`, orthogonalize, and normalize. `existing` must have fewer than
/// `n` columns.
fn complete_orthonormal<T: Real>(existing: &[Vec<T>], n: usize) -> Vec<T> {
    let mut best: Option<(T, Vec<T>)> = None;
    for cand in 0..n {
        let mut w = vec![T::zero(); n];
        w[cand] = T::one();
        // Two rounds of classical Gram-Schmidt for numerical safety.
        for _ in 0..2 {
            for col in existing {
                let mut proj = T::zero();
                for i in 0..n {
                    proj = proj + w[i] * col[i];
                }
                for i in 0..n {
                    w[i] = w[i] - proj * col[i];
                }
            }
        }
        let mut norm = T::zero();
        for e in &w {
            norm = norm + *e * *e;
        }
        let norm = norm.sqrt();
        if best.as_ref().is_none_or(|(b, _)| norm > *b) {
            best = Some((norm, w));
        }
        if norm > T::from_f64_lossy(0.9) {
            break; // good enough, no need to scan further candidates
        }
    }
    let (norm, w) = best.expect("n > 0");
    assert!(
        norm > T::from_f64_lossy(1e-3),
        "orthonormal completion failed; basis nearly spans the space"
    );
    let inv = T::one() / norm;
    w.into_iter().map(|e| e * inv).collect()
}

/// Options for [`spectral_norm`] and [`top_singular_triplet`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIterOptions {
    /// Relative-change convergence threshold on the singular-value estimate.
    pub tol: f64,
    /// Iteration cap per start vector.
    pub max_iters: usize,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: 5000 }
    }
}

/// Largest singular value by power iteration on `XᵀX`.
///
/// Runs two starts — a deterministic vector derived from a hash of the
/// matrix dimensions, and one seeded random restart — and keeps the larger
/// estimate, which guards against a start vector orthogonal to the leading
/// singular subspace. Fully deterministic for a given input shape.
pub fn spectral_norm<T: Real>(x: &DenseMatrix<T>, opts: &PowerIterOptions) -> Result<T> {
    Ok(top_singular_triplet(x, opts)?.0)
}

/// Leading singular triplet `(σ₁, u₁, v₁)` by power iteration.
pub fn top_singular_triplet<T: Real>(
    x: &DenseMatrix<T>,
    opts: &PowerIterOptions,
) -> Result<(T, Vec<T>, Vec<T>)> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Parameter(format!(
            "power iteration needs 0 < tol < 1, got {}",
            opts.tol
        )));
    }
    let (n, m) = (x.rows(), x.cols());
    let scale = x.frobenius_norm();
    if scale == T::zero() {
        // Zero matrix: σ₁ = 0 with arbitrary unit vectors.
        let mut u = vec![T::zero(); n];
        let mut v = vec![T::zero(); m];
        u[0] = T::one();
        v[0] = T::one();
        return Ok((T::zero(), u, v));
    }

    let shape_hash = child_seed(START_HASH_KEY, "spectral-start", ((n as u64) << 32) | m as u64);
    let mut best: Option<(T, Vec<T>, Vec<T>)> = None;
    let mut any_converged = false;
    for restart in 0..2u64 {
        let mut rng = rng_from(child_seed(shape_hash, "restart", restart));
        let mut v: Vec<T> = (0..m)
            .map(|_| T::from_f64_lossy(rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        normalize(&mut v);
        let mut estimate = T::zero();
        let mut converged = false;
        for _ in 0..opts.max_iters {
            let w = x.matvec(&v).expect("shape");
            let sig = norm2(&w);
            if sig == T::zero() {
                break; // v in the null space; restart handles it
            }
            let mut back = x.matvec_transpose(&w).expect("shape");
            normalize(&mut back);
            v = back;
            let prev = estimate;
            estimate = sig;
            if (estimate - prev).abs() <= T::from_f64_lossy(opts.tol) * estimate {
                converged = true;
                break;
            }
        }
        if estimate > T::zero() {
            let mut u = x.matvec(&v).expect("shape");
            let sig = norm2(&u);
            let inv = if sig > T::zero() { T::one() / sig } else { T::zero() };
            for e in &mut u {
                *e = *e * inv;
            }
            any_converged |= converged;
            if best.as_ref().is_none_or(|(b, _, _)| sig > *b) {
                best = Some((sig, u, v.clone()));
            }
        }
    }
    match best {
        Some(triplet) if any_converged => Ok(triplet),
        Some((sig, _, _)) => Err(Error::NonConvergence {
            routine: "power iteration",
            detail: format!(
                "estimate {:e} still moving after {} iterations",
                sig.to_f64_lossy(),
                opts.max_iters
            ),
        }),
        None => Err(Error::NonConvergence {
            routine: "power iteration",
            detail: "all start vectors collapsed into the null space".into(),
        }),
    }
}

/// Constant mixed into the deterministic start-vector hash.
const START_HASH_KEY: u64 = 0x7031_7e5a_11ad_5eed;

fn norm2<T: Real>(v: &[T]) -> T {
    let mut acc = T::zero();
    for e in v {
        acc = acc + *e * *e;
    }
    acc.sqrt()
}

fn normalize<T: Real>(v: &mut [T]) {
    let n = norm2(v);
    if n > T::zero() {
        let inv = T::one() / n;
        for e in v {
            *e = *e * inv;
        }
    }
}
