//! Rademacher-complexity estimation for the norm balls, closed-form
//! complexity bounds, and exact finite-class generalization-gap enumeration.
//!
//! # The ball complexities
//!
//! For a sample `S = ((i₁,j₁), …, (i_s,j_s))` of index pairs, the empirical
//! Rademacher complexity of a class of matrices (viewed as predictors of
//! entries) is
//!
//! ```text
//!   R̂_s(class) = E_ξ [ sup_{X ∈ class} (1/s) Σ_t ξ_t X_{i_t j_t} ] ,
//! ```
//!
//! with independent uniform signs `ξ_t ∈ {±1}`. Two classes matter here:
//!
//! * **Trace ball** `{‖X‖_Σ ≤ A}` — the supremum has a closed form: it is
//!   `(A/s)·‖Q‖₂` where `Q = Σ_t ξ_t e_{i_t j_t}` is the sign matrix of the
//!   sample (entries accumulate over repeated positions) and `‖·‖₂` is the
//!   spectral norm. So the complexity reduces to the expected spectral norm
//!   of a random-sign matrix, which [`trace_ball_rad_mc`] estimates by Monte
//!   Carlo and [`trace_ball_rad_exact`] evaluates exactly by enumerating
//!   sign vectors (using the `ξ → −ξ` symmetry to halve the work).
//!
//! * **Max ball** `{‖X‖_max ≤ A}` — the supremum has no tractable closed
//!   form (an exact dual would need a Grothendieck-type semidefinite
//!   program, a stated non-goal). [`max_ball_rad_bracket`] instead brackets
//!   the complexity: any feasible point lower-bounds the per-sign supremum,
//!   so seeded factored gradient **ascent** yields a certified lower
//!   estimate, while the closed-form ceiling [`bound_eq2`] and the trace-ball
//!   containment `‖X‖_Σ ≤ √(nm)·‖X‖_max` give computable upper bounds.
//!
//! Spectral norms of the small dense sign matrices go through the Jacobi
//! SVD, which is immune to the tied-leading-singular-value stalls that power
//! iteration suffers on random sign matrices.
//!
//! # Closed-form bounds
//!
//! [`bound_eq2`] is the uniform max-ball ceiling `12·√(A²(n+m)/s)`, valid
//! for every sample. [`bound_eq3`] is the shape of the expected trace-ball
//! complexity under uniform with-replacement sampling,
//! `K·√((A²/nm)·(n+m)·ln(n)/s)` with an unspecified constant `K` that
//! [`fit_trace_shape_constant`] estimates by least squares; nothing in this
//! crate asserts a value for `K`. [`bound_tropp`] evaluates the
//! matrix-concentration form `C·(√(σ²·ln(n+m)) + R·ln(n+m))` that the
//! trace-ball shape descends from, with `σ² = s·max(n,m)/(nm)` (computed by
//! [`tropp_sigma2`]) and `R = 1` for single-entry summands.
//!
//! # Sampling-model reductions
//!
//! The [`gap`] submodule enumerates tiny finite-class problems exactly to
//! validate the with/without-replacement reduction inequalities and the
//! independent-noise variant; see its docs.

pub mod gap;

pub use gap::{
    capped_multiplicity_gap_mean, drop_top_multiplicity, finite_class_erm_check,
    finite_class_gap, ind_noise_gap_check, spread_top_multiplicity, ExceedanceRow,
    FiniteClassErmReport, FiniteClassGapResult, GapMode, IndNoiseGapReport, IndNoiseThresholdRow,
};

use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::rng::{child_seed, rng_from};
use crate::sampling::{sample_indices, IndexSample, SampleMode};
use crate::Mat;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

/// Which norm ball a complexity estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum Ball {
    /// `{X : ‖X‖_Σ ≤ a}`.
    Trace { a: f64 },
    /// `{X : ‖X‖_max ≤ a}`.
    Max { a: f64 },
}

/// How a [`RadEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum EstimateMode {
    /// Full enumeration of the sign space; `std_error` is exactly 0.
    Exact,
    /// Averaged over random sign draws; `std_error` is the standard error
    /// of the mean.
    MonteCarlo,
}

/// Shape summary of the sample behind an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SampleInfo {
    pub n: usize,
    pub m: usize,
    pub s: usize,
}

impl SampleInfo {
    pub fn of(sample: &IndexSample) -> Self {
        SampleInfo { n: sample.n, m: sample.m, s: sample.len() }
    }
}

/// A Rademacher-complexity estimate: the mean over sign vectors of the
/// per-sign supremum, together with its sampling error.
///
/// Invariants: `mean ≥ 0` (the zero matrix is always in the ball, so every
/// per-sign supremum is nonnegative) and `std_error = 0` in exact mode.
/// `num_mc` counts the sign vectors evaluated — for exact mode that is
/// `2^(s−1)`, the half space enumerated under the `ξ → −ξ` symmetry.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RadEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub num_mc: usize,
    pub mode: EstimateMode,
    pub ball: Ball,
    pub sample: SampleInfo,
}

/// Build the sign matrix `Q = Σ_t ξ_t e_{i_t j_t}`; repeated positions
/// accumulate.
fn sign_matrix(sample: &IndexSample, xi: &[f64]) -> Mat {
    let mut q = Mat::zeros(sample.n, sample.m).expect("sample grid is non-empty");
    for (&(i, j), &x) in sample.pairs.iter().zip(xi) {
        q.set(i, j, q.get(i, j) + x);
    }
    q
}

/// Spectral norm via the Jacobi SVD (largest singular value).
fn spectral_norm_dense(q: &Mat) -> Result<f64> {
    Ok(svd(q)?.sigma[0])
}

fn check_radius(a: f64) -> Result<()> {
    if !a.is_finite() || !(a > 0.0) {
        return Err(Error::Parameter(format!(
            "ball radius A must be finite and positive, got {a}"
        )));
    }
    Ok(())
}

/// Mean and standard error of the mean (sample standard deviation over
/// `√k`); the standard error is 0 for a single value.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Monte-Carlo estimate of the empirical trace-ball complexity
/// `(A/s)·E_ξ‖Σ_t ξ_t e_{i_t j_t}‖₂` on a fixed sample.
///
/// Draws `num_mc` independent sign vectors and averages the resulting
/// spectral norms. Degenerate spreads (every draw giving the same norm, as
/// happens for `s = 1`) report a standard error of exactly 0.
pub fn trace_ball_rad_mc(
    sample: &IndexSample,
    a: f64,
    num_mc: usize,
    seed: u64,
) -> Result<RadEstimate> {
    check_radius(a)?;
    if num_mc == 0 {
        return Err(Error::Parameter("Monte-Carlo draw count must be ≥ 1".into()));
    }
    let s = sample.len();
    let mut rng = rng_from(child_seed(seed, "trace-rad-signs", 0));
    let mut values = Vec::with_capacity(num_mc);
    let mut xi = vec![0.0; s];
    for _ in 0..num_mc {
        for x in xi.iter_mut() {
            *x = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let q = sign_matrix(sample, &xi);
        values.push(a / s as f64 * spectral_norm_dense(&q)?);
    }
    let (mean, std_error) = mean_and_se(&values);
    Ok(RadEstimate {
        mean,
        std_error,
        num_mc,
        mode: EstimateMode::MonteCarlo,
        ball: Ball::Trace { a },
        sample: SampleInfo::of(sample),
    })
}

/// Largest sample size accepted by [`trace_ball_rad_exact`] (the sign space
/// has `2^s` elements).
pub const MAX_EXACT_SIGNS: usize = 16;

/// Exact empirical trace-ball complexity by full sign enumeration.
///
/// Negating every sign leaves `‖Q‖₂` unchanged, so it suffices to enumerate
/// the `2^(s−1)` vectors with `ξ₁ = +1`; the two half-spaces contribute
/// identical averages. Requires `s ≤ 16`.
pub fn trace_ball_rad_exact(sample: &IndexSample, a: f64) -> Result<RadEstimate> {
    check_radius(a)?;
    let s = sample.len();
    if s > MAX_EXACT_SIGNS {
        return Err(Error::Parameter(format!(
            "exact sign enumeration is limited to s ≤ {MAX_EXACT_SIGNS}, got s = {s}"
        )));
    }
    let half: usize = 1 << (s - 1);
    let mut total = 0.0;
    let mut xi = vec![1.0; s];
    for mask in 0..half {
        for (t, x) in xi.iter_mut().enumerate().skip(1) {
            *x = if mask >> (t - 1) & 1 == 1 { -1.0 } else { 1.0 };
        }
        let q = sign_matrix(sample, &xi);
        total += spectral_norm_dense(&q)?;
    }
    Ok(RadEstimate {
        mean: a / s as f64 * (total / half as f64),
        std_error: 0.0,
        num_mc: half,
        mode: EstimateMode::Exact,
        ball: Ball::Trace { a },
        sample: SampleInfo::of(sample),
    })
}

/// Estimate the **expected** trace-ball complexity: the average of the
/// empirical complexity over fresh uniform with-replacement samples of size
/// `s`. This is the quantity the `bound_eq3` shape bounds.
///
/// Each of the `sample_trials` trials draws its own sample and runs
/// `mc_per_sample` sign draws; the reported standard error is computed
/// across trial means, so it captures both randomness sources. With a
/// single trial the inner (sign-level) standard error is reported instead.
pub fn expected_trace_rad(
    n: usize,
    m: usize,
    s: usize,
    a: f64,
    sample_trials: usize,
    mc_per_sample: usize,
    seed: u64,
) -> Result<RadEstimate> {
    if sample_trials == 0 {
        return Err(Error::Parameter("sample trial count must be ≥ 1".into()));
    }
    let mut trial_means = Vec::with_capacity(sample_trials);
    let mut single_se = 0.0;
    for trial in 0..sample_trials as u64 {
        let sample = sample_indices(
            n,
            m,
            s,
            SampleMode::WithReplacement,
            child_seed(seed, "expected-rad-sample", trial),
        )?;
        let est = trace_ball_rad_mc(
            &sample,
            a,
            mc_per_sample,
            child_seed(seed, "expected-rad-signs", trial),
        )?;
        trial_means.push(est.mean);
        single_se = est.std_error;
    }
    let (mean, se_across) = mean_and_se(&trial_means);
    Ok(RadEstimate {
        mean,
        std_error: if sample_trials >= 2 { se_across } else { single_se },
        num_mc: sample_trials * mc_per_sample,
        mode: EstimateMode::MonteCarlo,
        ball: Ball::Trace { a },
        sample: SampleInfo { n, m, s },
    })
}

/// Tuning knobs for [`max_ball_rad_bracket`].
#[derive(Debug, Clone)]
pub struct MaxBallOptions {
    /// Sign draws for the Monte-Carlo lower estimate.
    pub num_mc: usize,
    /// Seeded ascent restarts per sign vector.
    pub restarts: usize,
    /// Projected-ascent steps per restart.
    pub ascent_steps: usize,
    /// Width of the ascent factorization `X = U Vᵀ`.
    pub rank: usize,
    pub seed: u64,
}

impl Default for MaxBallOptions {
    fn default() -> Self {
        MaxBallOptions {
            num_mc: 24,
            restarts: 3,
            ascent_steps: 300,
            rank: 5,
            seed: 0x7e57_ab1e_5eed_0001,
        }
    }
}

/// A one-sided bracket for the empirical max-ball complexity.
#[derive(Debug, Clone)]
pub struct MaxBallBracket {
    /// Monte-Carlo average of per-sign **lower** bounds on the supremum
    /// (every ascent iterate is a feasible point of the ball, so its
    /// objective value never exceeds the true supremum).
    pub lower: RadEstimate,
    /// `min(upper_eq2, upper_containment)`.
    pub upper: f64,
    /// The uniform ceiling `12·√(A²(n+m)/s)`.
    pub upper_eq2: f64,
    /// Containment ceiling through the trace ball of radius `A·√(nm)`:
    /// `(A·√(nm)/s)·E_ξ‖Q‖₂`, evaluated exactly when `s ≤ 16` and otherwise
    /// by Monte Carlo padded with three standard errors to stay one-sided.
    pub upper_containment: f64,
}

/// Bracket the empirical max-ball complexity on a fixed sample.
///
/// The per-sign supremum `sup {⟨Ξ, X⟩/s : ‖X‖_max ≤ A}` is nonconvex to
/// evaluate exactly, so the lower side runs seeded projected gradient
/// ascent over factorizations `X = U Vᵀ` with factor rows capped at `√A`
/// (an exact parameterization of the ball) and keeps the best feasible
/// objective, clamped at 0 (the zero matrix is always feasible). The upper
/// side combines the closed-form ceiling with the trace-ball containment
/// `‖X‖_Σ ≤ √(nm)·‖X‖_max`.
pub fn max_ball_rad_bracket(
    sample: &IndexSample,
    a: f64,
    cfg: &MaxBallOptions,
) -> Result<MaxBallBracket> {
    check_radius(a)?;
    if cfg.num_mc == 0 || cfg.restarts == 0 || cfg.ascent_steps == 0 || cfg.rank == 0 {
        return Err(Error::Parameter(
            "max-ball bracket needs positive draw, restart, step, and rank counts".into(),
        ));
    }
    let (n, m, s) = (sample.n, sample.m, sample.len());
    let row_cap = a.sqrt();

    let mut rng = rng_from(child_seed(cfg.seed, "max-rad-signs", 0));
    let mut xi = vec![0.0; s];
    let mut values = Vec::with_capacity(cfg.num_mc);
    for draw in 0..cfg.num_mc as u64 {
        for x in xi.iter_mut() {
            *x = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let sign_mat = sign_matrix(sample, &xi);
        let mut best = 0.0_f64;
        for restart in 0..cfg.restarts as u64 {
            let val = ascend_linear_objective(
                &sign_mat,
                s,
                row_cap,
                cfg.rank,
                cfg.ascent_steps,
                child_seed(cfg.seed, "max-rad-ascent", draw * 1000 + restart),
            )?;
            if val > best {
                best = val;
            }
        }
        values.push(best);
    }
    let (mean, std_error) = mean_and_se(&values);
    let lower = RadEstimate {
        mean,
        std_error,
        num_mc: cfg.num_mc,
        mode: EstimateMode::MonteCarlo,
        ball: Ball::Max { a },
        sample: SampleInfo::of(sample),
    };

    let upper_eq2 = bound_eq2(a, n, m, s);
    let trace_radius = a * ((n * m) as f64).sqrt();
    let upper_containment = if s <= MAX_EXACT_SIGNS {
        trace_ball_rad_exact(sample, trace_radius)?.mean
    } else {
        let est = trace_ball_rad_mc(
            sample,
            trace_radius,
            cfg.num_mc.max(32),
            child_seed(cfg.seed, "max-rad-containment", 0),
        )?;
        est.mean + 3.0 * est.std_error
    };
    Ok(MaxBallBracket {
        lower,
        upper: upper_eq2.min(upper_containment),
        upper_eq2,
        upper_containment,
    })
}

/// Maximize `⟨Ξ, U Vᵀ⟩ / s` over factor rows capped at `row_cap` by
/// projected gradient ascent; returns the best objective seen (a valid
/// lower bound on the supremum over the max-norm ball).
fn ascend_linear_objective(
    sign_mat: &Mat,
    s: usize,
    row_cap: f64,
    rank: usize,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let (n, m) = (sign_mat.rows(), sign_mat.cols());
    let k = rank.min(n).min(m).max(1);
    let mut rng = rng_from(seed);
    let init_scale = 0.5 * row_cap / (k as f64).sqrt();
    let mut u = Mat::from_fn(n, k, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        g * init_scale
    })?;
    let mut v = Mat::from_fn(m, k, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        g * init_scale
    })?;
    project_rows(&mut u, row_cap);
    project_rows(&mut v, row_cap);

    let sf = s as f64;
    let mut best = f64::NEG_INFINITY;
    let mut stall = 0usize;
    for _ in 0..steps {
        // tu = Ξ·V gives both the U-gradient (tu/s) and the objective
        // Σ_i U_i·tu_i / s; tv = Ξᵀ·U gives the V-gradient.
        let tu = sign_mat.matmul(&v)?;
        let tv = sign_mat.transpose().matmul(&u)?;
        let mut obj = 0.0;
        for i in 0..n {
            for l in 0..k {
                obj += u.get(i, l) * tu.get(i, l);
            }
        }
        obj /= sf;
        if obj > best + 1e-13 * best.abs().max(1.0) {
            best = obj;
            stall = 0;
        } else {
            best = best.max(obj);
            stall += 1;
            if stall > 40 {
                break;
            }
        }
        // Scale-free step: a full step would move a zero row straight to the
        // cap along its gradient direction.
        let mut gmax = 0.0_f64;
        for i in 0..n {
            gmax = gmax.max(row_norm_of(&tu, i));
        }
        for j in 0..m {
            gmax = gmax.max(row_norm_of(&tv, j));
        }
        if gmax == 0.0 {
            break;
        }
        let step = 0.8 * row_cap / gmax;
        for i in 0..n {
            for l in 0..k {
                u.set(i, l, u.get(i, l) + step * tu.get(i, l));
            }
        }
        for j in 0..m {
            for l in 0..k {
                v.set(j, l, v.get(j, l) + step * tv.get(j, l));
            }
        }
        project_rows(&mut u, row_cap);
        project_rows(&mut v, row_cap);
    }
    // The running best is always the objective of some feasible iterate.
    Ok(best.max(0.0))
}

fn row_norm_of(x: &Mat, i: usize) -> f64 {
    let mut acc = 0.0;
    for l in 0..x.cols() {
        let e = x.get(i, l);
        acc += e * e;
    }
    acc.sqrt()
}

fn project_rows(x: &mut Mat, cap: f64) {
    for i in 0..x.rows() {
        let norm = row_norm_of(x, i);
        if norm > cap {
            let f = cap / norm;
            for l in 0..x.cols() {
                x.set(i, l, x.get(i, l) * f);
            }
        }
    }
}

/// Uniform ceiling on the empirical max-ball complexity:
/// `12·√(A²(n+m)/s)`. Valid for every sample of size `s`.
pub fn bound_eq2(a: f64, n: usize, m: usize, s: usize) -> f64 {
    12.0 * (a * a * (n + m) as f64 / s as f64).sqrt()
}

/// Shape of the expected trace-ball complexity under uniform
/// with-replacement sampling: `K·√((A²/nm)·(n+m)·ln(N)/s)` with
/// `N = max(n, m)`. The constant `K` is a caller-supplied parameter — fit
/// it with [`fit_trace_shape_constant`]; no value is asserted here.
pub fn bound_eq3(a: f64, n: usize, m: usize, s: usize, k: f64) -> f64 {
    let nm = (n * m) as f64;
    let ln_n = (n.max(m) as f64).ln();
    k * (a * a / nm * (n + m) as f64 * ln_n / s as f64).sqrt()
}

/// Matrix-concentration ceiling on the expected spectral norm of a sum of
/// independent zero-mean single-entry matrices:
/// `C·(√(σ²·ln(n+m)) + R·ln(n+m))`, where `σ²` is the variance parameter
/// (see [`tropp_sigma2`]), `R` almost surely bounds each summand's spectral
/// norm (1 for signed single entries), and `C` is an explicit user constant
/// — supplied, never asserted.
pub fn bound_tropp(sigma2: f64, r: f64, n: usize, m: usize, c: f64) -> f64 {
    let ln_nm = ((n + m) as f64).ln();
    c * ((sigma2 * ln_nm).sqrt() + r * ln_nm)
}

/// Variance parameter for [`bound_tropp`] with `s` uniform single-entry
/// summands on an `n × m` grid: `σ² = s·max(n,m)/(nm)`.
pub fn tropp_sigma2(n: usize, m: usize, s: usize) -> f64 {
    s as f64 * n.max(m) as f64 / (n * m) as f64
}

/// Least-squares fit of the constant `K` in the trace-ball complexity
/// shape: given `(config, estimate)` pairs, returns the `K̂` minimizing
/// `Σ (estimate − K·shape)²` where `shape = bound_eq3(a, n, m, s, 1)`.
pub fn fit_trace_shape_constant(points: &[(SampleInfo, f64)], a: f64) -> Result<f64> {
    check_radius(a)?;
    if points.is_empty() {
        return Err(Error::Parameter("shape fit needs at least one point".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (info, estimate) in points {
        let shape = bound_eq3(a, info.n, info.m, info.s, 1.0);
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::Parameter(format!(
                "degenerate shape value {shape} for configuration {info:?}"
            )));
        }
        num += estimate * shape;
        den += shape * shape;
    }
    Ok(num / den)
}
