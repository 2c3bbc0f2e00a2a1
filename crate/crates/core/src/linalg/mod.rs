//! Dense-matrix kernel.
//!
//! Everything in the crate runs on [`DenseMatrix`], a validated row-major
//! dense matrix. The kernel is deliberately small — the workloads here are a
//! few hundred rows and columns at most, so simplicity and determinism win
//! over BLAS-grade performance. It is not sized for matrices much beyond
//! 512×512.
//!
//! Decompositions live in [`svd`] (one-sided Jacobi SVD and power
//! iteration); the plain-text file format lives in [`io`].

pub mod io;
pub mod svd;

pub use svd::{
    spectral_norm, svd, svd_with, top_singular_triplet, PowerIterOptions, SvdOptions, SvdResult,
};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative singular-value cutoff used by [`numerical_rank`] when callers
/// have no reason to pick their own.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-8;

/// Validated dense matrix in row-major order.
///
/// Invariants, enforced at construction: at least one row and one column,
/// `entries.len() == rows * cols`, and every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T: Real> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    /// Build a matrix from a row-major entry vector.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|e| !e.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {}) is {:?}",
                pos / cols,
                pos % cols,
                entries[pos]
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Build a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dimension("matrix must have at least one row".into()));
        }
        let cols = rows[0].len();
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    /// Build a matrix by evaluating `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.saturating_mul(cols));
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, entries)
    }

    /// The all-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_vec(rows, cols, vec![T::zero(); rows.checked_mul(cols).unwrap_or(0)])
    }

    /// The identity matrix.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Rank-one matrix `u vᵀ`.
    pub fn from_outer(u: &[T], v: &[T]) -> Result<Self> {
        if u.is_empty() || v.is_empty() {
            return Err(Error::Dimension("outer product needs non-empty vectors".into()));
        }
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    /// Number of rows.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entry slice.
    #[inline]
    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j]
    }

    /// Set one entry. Panics on a non-finite value — mutation must preserve
    /// the construction invariant.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(value.is_finite(), "matrix entries must stay finite");
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j] = value;
    }

    /// Contiguous view of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of column `j`.
    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j));
            }
        }
        Self { rows: self.cols, cols: self.rows, entries }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![T::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o = *o + aik * *b;
                }
            }
        }
        Self::from_vec(self.rows, other.cols, out)
    }

    /// Matrix product `self * otherᵀ`, without materializing the transpose.
    pub fn matmul_transpose(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by the transpose of {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                let b = other.row(j);
                let mut acc = T::zero();
                for (x, y) in a.iter().zip(b) {
                    acc = acc + *x * *y;
                }
                out.push(acc);
            }
        }
        Self::from_vec(self.rows, other.rows, out)
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matvec: {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (x, y) in self.row(i).iter().zip(v) {
                    acc = acc + *x * *y;
                }
                acc
            })
            .collect())
    }

    /// Matrix-vector product `selfᵀ * w`.
    pub fn matvec_transpose(&self, w: &[T]) -> Result<Vec<T>> {
        if w.len() != self.rows {
            return Err(Error::Dimension(format!(
                "matvec_transpose: {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                w.len()
            )));
        }
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let wi = w[i];
            if wi == T::zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o = *o + wi * *x;
            }
        }
        Ok(out)
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Entrywise combination of two same-shape matrices.
    pub fn zip_with(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::from_vec(self.rows, self.cols, entries)
    }

    /// Scaled copy `alpha * self`.
    pub fn scale(&self, alpha: T) -> Result<Self> {
        Self::from_vec(self.rows, self.cols, self.entries.iter().map(|e| *e * alpha).collect())
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn dot(&self, other: &Self) -> Result<T> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = T::zero();
        for (a, b) in self.entries.iter().zip(&other.entries) {
            acc = acc + *a * *b;
        }
        Ok(acc)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> T {
        let mut acc = T::zero();
        for e in &self.entries {
            acc = acc + *e * *e;
        }
        acc.sqrt()
    }

    /// Largest absolute entry `|X|_∞`.
    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |best, e| best.max(e.abs()))
    }

    /// Sum of absolute entries.
    pub fn l1_norm(&self) -> T {
        let mut acc = T::zero();
        for e in &self.entries {
            acc = acc + e.abs();
        }
        acc
    }

    /// Euclidean norm of row `i`.
    pub fn row_norm(&self, i: usize) -> T {
        let mut acc = T::zero();
        for e in self.row(i) {
            acc = acc + *e * *e;
        }
        acc.sqrt()
    }

    /// Largest Euclidean row norm.
    pub fn max_row_norm(&self) -> T {
        (0..self.rows).fold(T::zero(), |best, i| best.max(self.row_norm(i)))
    }
}

/// The three elementwise norms used throughout: `Σ|x|`, `‖X‖_F`, `|X|_∞`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ElementwiseNorms<T> {
    pub l1: T,
    pub frobenius: T,
    pub linf: T,
}

/// Compute all three elementwise norms in one pass.
pub fn elementwise_norms<T: Real>(x: &DenseMatrix<T>) -> ElementwiseNorms<T> {
    let mut l1 = T::zero();
    let mut sq = T::zero();
    let mut linf = T::zero();
    for e in x.entries() {
        let a = e.abs();
        l1 = l1 + a;
        sq = sq + a * a;
        linf = linf.max(a);
    }
    ElementwiseNorms { l1, frobenius: sq.sqrt(), linf }
}

/// Number of singular values exceeding `rel_tol` times the largest one.
///
/// The zero matrix has rank 0 by convention; `rel_tol` must lie in `(0, 1)`.
pub fn numerical_rank<T: Real>(x: &DenseMatrix<T>, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Parameter(format!(
            "numerical_rank needs 0 < rel_tol < 1, got {rel_tol}"
        )));
    }
    let decomp = svd(x)?;
    let top = decomp.sigma.first().copied().unwrap_or_else(T::zero);
    if top == T::zero() {
        return Ok(0);
    }
    let cut = top * T::from_f64_lossy(rel_tol);
    Ok(decomp.sigma.iter().filter(|s| **s > cut).count())
}
