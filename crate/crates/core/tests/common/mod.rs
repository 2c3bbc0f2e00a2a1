//! Shared fixtures and independent oracles for the integration tests.
//!
//! The eigenvalue oracle here deliberately shares no code with the library's
//! Jacobi SVD: characteristic-polynomial coefficients come from Newton's
//! identities on power-sum traces, and roots are isolated by recursing on
//! derivative interlacing. It is slow and only suitable for tiny symmetric
//! matrices — which is exactly what an independent cross-check needs.

#![allow(dead_code)]

use lowrank::rng::{child_seed, rng_from};
use lowrank::Mat;
use rand::Rng;

/// Monic characteristic polynomial of a small symmetric matrix via Newton's
/// identities on the power-sum traces. Returns coefficients `c[d]` of
/// `Σ_d c[d] λ^d` with `c[k] = 1`.
pub fn char_poly(a: &Mat) -> Vec<f64> {
    let k = a.rows();
    assert_eq!(k, a.cols());
    // Power sums s_j = tr(A^j), j = 1..k.
    let mut power = a.clone();
    let mut sums = Vec::with_capacity(k);
    for j in 0..k {
        if j > 0 {
            power = power.matmul(a).unwrap();
        }
        let tr: f64 = (0..k).map(|i| power.get(i, i)).sum();
        sums.push(tr);
    }
    // Newton: j·b_j = -(s_j + Σ_{i<j} b_i s_{j-i}), with p = λ^k + b_1 λ^{k-1} + …
    let mut b = vec![0.0f64; k + 1];
    for j in 1..=k {
        let mut acc = sums[j - 1];
        for i in 1..j {
            acc += b[i] * sums[j - i - 1];
        }
        b[j] = -acc / j as f64;
    }
    let mut coeffs = vec![0.0f64; k + 1];
    for d in 0..=k {
        coeffs[d] = if d == k { 1.0 } else { b[k - d] };
    }
    coeffs
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(d, c)| d as f64 * c)
        .collect()
}

/// All real roots of a polynomial whose roots are known to be real (the
/// symmetric-eigenvalue case): recurse on the derivative to get critical
/// points, then bisect every sign change between consecutive critical points.
pub fn real_roots(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    if degree == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }
    let mut cuts = vec![lo];
    cuts.extend(real_roots(&poly_derivative(coeffs), lo, hi));
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut roots = Vec::new();
    for pair in cuts.windows(2) {
        let (mut a, mut b) = (pair[0], pair[1]);
        let (fa, fb) = (poly_eval(coeffs, a), poly_eval(coeffs, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = poly_eval(coeffs, mid);
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-13 * (1.0 + x.abs()));
    roots
}

/// Eigenvalues of a small symmetric PSD matrix, descending.
pub fn eigenvalues_psd_oracle(a: &Mat) -> Vec<f64> {
    let coeffs = char_poly(a);
    // Cauchy bound on root magnitude.
    let bound = 1.0 + coeffs[..coeffs.len() - 1].iter().fold(0.0f64, |b, c| b.max(c.abs()));
    let mut roots = real_roots(&coeffs, -bound, bound);
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
    assert_eq!(roots.len(), a.rows(), "oracle lost a root; fixture too clustered");
    roots
}

/// Dense matrix with i.i.d. uniform `[-1, 1)` entries from a fixed seed.
pub fn random_matrix(n: usize, m: usize, seed: u64) -> Mat {
    let mut rng = rng_from(seed);
    Mat::from_fn(n, m, |_, _| rng.random::<f64>() * 2.0 - 1.0).unwrap()
}

/// Product of two seeded random factors: a matrix of rank ≤ `r` (equal to
/// `r` with probability 1).
pub fn random_low_rank(n: usize, m: usize, r: usize, seed: u64) -> Mat {
    let u = random_matrix(n, r, child_seed(seed, "lr-left", 0));
    let v = random_matrix(m, r, child_seed(seed, "lr-right", 0));
    u.matmul_transpose(&v).unwrap()
}

/// The rank-2 cross matrix `e₁wᵀ + we₁ᵀ` on `(N+1)×(N+1)` with
/// `w = (0, N^{-1/2}, …, N^{-1/2})`: both unit singular values, perfectly
/// conditioned, maximally spiky subspaces — yet max norm only `N^{-1/2}`.
pub fn cross_matrix(cap_n: usize) -> Mat {
    let n = cap_n + 1;
    let w = 1.0 / (cap_n as f64).sqrt();
    Mat::from_fn(n, n, |i, j| {
        if i == 0 && j > 0 {
            w
        } else if j == 0 && i > 0 {
            w
        } else {
            0.0
        }
    })
    .unwrap()
}
