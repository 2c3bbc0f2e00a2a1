//! Constrained empirical-risk minimizers over the trace-norm and max-norm
//! balls, their box-intersected variants, a brute-force oracle for tiny
//! instances, and evaluation metrics.
//!
//! Two solver families share all conventions:
//!
//! * **Trace family** ([`erm_trace`], [`erm_trace_box`]) — Frank–Wolfe over
//!   `{‖X‖_Σ ≤ A}`. The linear minimization oracle is the top singular pair
//!   of the negative gradient; squared loss uses exact line search, other
//!   losses the classic `2/(t+2)` schedule; periodically the weights of the
//!   collected rank-one atoms are re-optimized (fully-corrective sweep),
//!   which is what lets the solver reach tight tolerances instead of the
//!   `O(1/t)` zig-zag floor.
//! * **Max family** ([`erm_max`], [`erm_max_box`]) — projected gradient on a
//!   Burer–Monteiro factorization `X = U Vᵀ` with every factor row projected
//!   onto the ball of radius `√A` after each step, which keeps
//!   `‖X‖_max ≤ A` exactly feasible at all times. Seeded restarts mitigate
//!   the nonconvex parameterization.
//!
//! The empirical objective is always the **normalized** sum over records
//! with repetition, `L̂(X) = (1/s)·Σ_t ℓ(X_{i_t j_t}, y_t)`: repeated
//! positions count repeatedly.
//!
//! The `∞`-ball intersection is handled by an increasing quadratic hinge
//! penalty on observed-entry overshoot (the intersection admits no simple
//! projection); results report the residual box violation rather than
//! pretending exactness.

pub mod fw;
pub mod oracle;
pub mod pgd;

pub use fw::{erm_trace, erm_trace_box};
pub use oracle::{tiny_erm_oracle, OracleResult};
pub use pgd::{erm_max, erm_max_box};

use crate::error::{Error, Result};
use crate::sampling::{IndexSample, ObservationSet};
use crate::Mat;
use std::time::Duration;

/// Loss functions on a single entry. `Huber` is an explicitly-parameterized
/// smoothing of the absolute loss; choosing `Abs` smooths automatically
/// (δ₀ = 0.1·data scale, halved every 200 iterations) and both report the
/// plain absolute loss as the empirical loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    Abs,
    Squared,
    Huber { delta0: f64 },
}

impl Loss {
    /// The reported (true, unsmoothed) per-entry loss.
    pub fn true_loss(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        match self {
            Loss::Squared => d * d,
            Loss::Abs | Loss::Huber { .. } => d.abs(),
        }
    }

    /// Smoothed loss value used inside the solvers at smoothing width
    /// `delta` (ignored for `Squared`).
    pub(crate) fn smooth_loss(&self, x: f64, y: f64, delta: f64) -> f64 {
        let d = x - y;
        match self {
            Loss::Squared => d * d,
            Loss::Abs | Loss::Huber { .. } => {
                if delta <= 0.0 || d.abs() >= delta {
                    d.abs() - 0.5 * delta.max(0.0)
                } else {
                    0.5 * d * d / delta
                }
            }
        }
    }

    /// Derivative of the smoothed loss in `x`.
    pub(crate) fn smooth_deriv(&self, x: f64, y: f64, delta: f64) -> f64 {
        let d = x - y;
        match self {
            Loss::Squared => 2.0 * d,
            Loss::Abs | Loss::Huber { .. } => {
                if delta <= 0.0 {
                    d.signum()
                } else {
                    (d / delta).clamp(-1.0, 1.0)
                }
            }
        }
    }

    /// Initial smoothing width given the data scale.
    pub(crate) fn delta0(&self, data_scale: f64) -> f64 {
        match self {
            Loss::Squared => 0.0,
            Loss::Abs => 0.1 * data_scale.max(1e-12),
            Loss::Huber { delta0 } => *delta0,
        }
    }

    /// Smoothing width at iteration `t`: `δ₀ · 0.5^⌊t/200⌋`.
    pub(crate) fn delta_at(&self, data_scale: f64, t: usize) -> f64 {
        let d0 = self.delta0(data_scale);
        if d0 == 0.0 {
            0.0
        } else {
            d0 * 0.5_f64.powi((t / 200) as i32)
        }
    }
}

/// Solver tuning knobs shared by both families.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Iteration budget per restart.
    pub iterations: usize,
    /// Factorization width `k` for the max family (ignored by the trace
    /// family). The usual choice for a planted rank `r` is `2r + 2`.
    pub rank_budget: usize,
    /// Seeded restarts for the max family (the trace family is convex and
    /// runs once).
    pub restarts: usize,
    /// Convergence tolerance: the run is flagged converged when the best
    /// loss stops improving by more than `tolerance·max(1, loss)` over a
    /// trailing window, or reaches `tolerance` outright.
    pub tolerance: f64,
    pub seed: u64,
    /// Box-penalty weight schedule: `λ_t = initial · growth^⌊t/period⌋`,
    /// capped at 1e9.
    pub box_penalty_initial: f64,
    pub box_penalty_growth: f64,
    pub box_penalty_period: usize,
    /// Clip the returned estimate to `[-B, B]` entrywise (evaluation-side
    /// only; never fed back into solver state). Reported via
    /// [`FitResult::clipped`].
    pub clip_to_box: bool,
    /// How often (in iterations) the trace family re-optimizes atom weights.
    pub correct_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: 2000,
            rank_budget: 8,
            restarts: 5,
            tolerance: 1e-9,
            seed: 0x1234_5678,
            box_penalty_initial: 1.0,
            box_penalty_growth: 2.0,
            box_penalty_period: 50,
            clip_to_box: false,
            correct_every: 25,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Parameter("iteration budget must be ≥ 1".into()));
        }
        if self.rank_budget == 0 {
            return Err(Error::Parameter("rank budget must be ≥ 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Parameter("restart count must be ≥ 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter("tolerance must be positive".into()));
        }
        if !(self.box_penalty_initial > 0.0)
            || !(self.box_penalty_growth >= 1.0)
            || self.box_penalty_period == 0
        {
            return Err(Error::Parameter("box penalty schedule is malformed".into()));
        }
        if self.correct_every == 0 {
            return Err(Error::Parameter("correction period must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// An explicit max-norm certificate: `X = U Vᵀ` with every row of both
/// factors inside the ball of radius `row_cap = √A`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredMatrix {
    pub u: Mat,
    pub v: Mat,
    pub row_cap: f64,
}

impl FactoredMatrix {
    pub fn to_matrix(&self) -> Result<Mat> {
        self.u.matmul_transpose(&self.v)
    }

    /// Largest row-cap overshoot across both factors (0 when feasible).
    pub fn row_cap_violation(&self) -> f64 {
        let over_u = self.u.max_row_norm() - self.row_cap;
        let over_v = self.v.max_row_norm() - self.row_cap;
        over_u.max(over_v).max(0.0)
    }
}

/// Outcome of one ERM solve.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub estimate: Mat,
    /// The certificate factorization, for the max family.
    pub factored: Option<FactoredMatrix>,
    /// Best-so-far true empirical loss after each iteration (running
    /// minimum, hence nonincreasing).
    pub trajectory: Vec<f64>,
    /// True empirical loss of `estimate`.
    pub empirical_loss: f64,
    /// Constraint overshoot of `estimate`: `max(0, ‖X‖_Σ − A)` for the
    /// trace family, the factor row-cap overshoot for the max family.
    pub constraint_residual: f64,
    /// `max(0, |X|_∞ − B)` over the full matrix (0 when no box).
    pub box_violation: f64,
    /// Whether `estimate` was entry-clipped to the box after solving.
    pub clipped: bool,
    pub converged: bool,
    pub iterations_run: usize,
    pub wall_time: Duration,
}

/// Reconstruction metrics against a target.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EvalMetrics {
    /// `(1/nm)·‖target − X̂‖₁`.
    pub l1: f64,
    /// `(1/nm)·‖target − X̂‖_F²`.
    pub l2: f64,
    /// Same pair restricted to the held-out index list (averaged with
    /// repetition), when one is supplied.
    pub heldout_l1: Option<f64>,
    pub heldout_l2: Option<f64>,
}

/// Average L1/squared reconstruction error, optionally also on a held-out
/// index sample.
pub fn evaluate(
    xhat: &Mat,
    target: &Mat,
    heldout: Option<&IndexSample>,
) -> Result<EvalMetrics> {
    if xhat.rows() != target.rows() || xhat.cols() != target.cols() {
        return Err(Error::Dimension(format!(
            "estimate {}×{} vs target {}×{}",
            xhat.rows(),
            xhat.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let nm = (xhat.rows() * xhat.cols()) as f64;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for i in 0..xhat.rows() {
        for j in 0..xhat.cols() {
            let d = target.get(i, j) - xhat.get(i, j);
            l1 += d.abs();
            l2 += d * d;
        }
    }
    let (mut heldout_l1, mut heldout_l2) = (None, None);
    if let Some(sample) = heldout {
        if sample.n != xhat.rows() || sample.m != xhat.cols() {
            return Err(Error::Dimension(format!(
                "held-out sample grid {}×{} does not match {}×{}",
                sample.n,
                sample.m,
                xhat.rows(),
                xhat.cols()
            )));
        }
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        for &(i, j) in &sample.pairs {
            let d = target.get(i, j) - xhat.get(i, j);
            h1 += d.abs();
            h2 += d * d;
        }
        let count = sample.len() as f64;
        heldout_l1 = Some(h1 / count);
        heldout_l2 = Some(h2 / count);
    }
    Ok(EvalMetrics {
        l1: l1 / nm,
        l2: l2 / nm,
        heldout_l1,
        heldout_l2,
    })
}

/// True (unsmoothed, penalty-free) empirical loss of `x` on the
/// observations: `(1/s)·Σ_t ℓ(x_{i_t j_t}, y_t)`, repetitions counted.
pub fn empirical_loss(obs: &ObservationSet, x: &Mat, loss: Loss) -> Result<f64> {
    check_obs(obs, x)?;
    let s = obs.records.len() as f64;
    let mut acc = 0.0;
    for rec in &obs.records {
        acc += loss.true_loss(x.get(rec.i, rec.j), rec.value);
    }
    Ok(acc / s)
}

pub(crate) fn check_obs(obs: &ObservationSet, x: &Mat) -> Result<()> {
    if obs.records.is_empty() {
        return Err(Error::Parameter("observation set is empty".into()));
    }
    if obs.n != x.rows() || obs.m != x.cols() {
        return Err(Error::Dimension(format!(
            "observations are on a {}×{} grid, matrix is {}×{}",
            obs.n,
            obs.m,
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

pub(crate) fn require_nonempty(obs: &ObservationSet) -> Result<()> {
    if obs.records.is_empty() {
        return Err(Error::Parameter("observation set is empty".into()));
    }
    for rec in &obs.records {
        if rec.i >= obs.n || rec.j >= obs.m {
            return Err(Error::Parameter(format!(
                "record position ({}, {}) outside {}×{} grid",
                rec.i, rec.j, obs.n, obs.m
            )));
        }
    }
    Ok(())
}

/// Observations flattened into parallel vectors for tight solver loops.
/// Repetitions are preserved: position `t` is the `t`-th record.
pub(crate) struct ObsVecs {
    pub n: usize,
    pub m: usize,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub y: Vec<f64>,
}

impl ObsVecs {
    pub fn flatten(obs: &ObservationSet) -> Self {
        let s = obs.records.len();
        let mut i = Vec::with_capacity(s);
        let mut j = Vec::with_capacity(s);
        let mut y = Vec::with_capacity(s);
        for rec in &obs.records {
            i.push(rec.i);
            j.push(rec.j);
            y.push(rec.value);
        }
        ObsVecs { n: obs.n, m: obs.m, i, j, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    /// True empirical loss of the observed-entry values `x_obs`.
    pub fn true_loss(&self, x_obs: &[f64], loss: Loss) -> f64 {
        let mut acc = 0.0;
        for (x, y) in x_obs.iter().zip(&self.y) {
            acc += loss.true_loss(*x, *y);
        }
        acc / self.len() as f64
    }

    /// Mean quadratic-hinge box overshoot of the observed-entry values.
    pub fn box_penalty(&self, x_obs: &[f64], b: f64) -> f64 {
        if !b.is_finite() {
            return 0.0;
        }
        let mut acc = 0.0;
        for &x in x_obs {
            acc += hinge_sq(x, b);
        }
        acc / self.len() as f64
    }
}

/// Picks the better of two (true loss, box penalty) pairs when judged at the
/// penalty weight `lambda` (`lambda = 0` compares pure losses). Used to keep
/// a consistent "best iterate" under the ramping box penalty.
pub(crate) fn penalized_score(true_loss: f64, penalty: f64, lambda: f64) -> f64 {
    true_loss + lambda * penalty
}

/// Constraint families the tiny-instance oracle (and the CLI) speak about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    Trace { a: f64 },
    TraceBox { a: f64, b: f64 },
    Max { a: f64 },
    MaxBox { a: f64, b: f64 },
}

impl Constraint {
    pub fn a(&self) -> f64 {
        match *self {
            Constraint::Trace { a }
            | Constraint::TraceBox { a, .. }
            | Constraint::Max { a }
            | Constraint::MaxBox { a, .. } => a,
        }
    }

    /// Box half-width; `+∞` when the family has no box.
    pub fn b(&self) -> f64 {
        match *self {
            Constraint::TraceBox { b, .. } | Constraint::MaxBox { b, .. } => b,
            _ => f64::INFINITY,
        }
    }

    pub fn is_trace_family(&self) -> bool {
        matches!(self, Constraint::Trace { .. } | Constraint::TraceBox { .. })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let a = self.a();
        if !a.is_finite() || !(a > 0.0) {
            return Err(Error::Parameter(format!(
                "constraint radius A must be finite and positive, got {a}"
            )));
        }
        let b = self.b();
        if b.is_nan() || !(b > 0.0) {
            return Err(Error::Parameter(format!(
                "box half-width B must be positive (or infinite), got {b}"
            )));
        }
        Ok(())
    }
}

/// Largest |observation|, the scale the smoothing schedule keys off.
pub(crate) fn data_scale(obs: &ObservationSet) -> f64 {
    obs.records
        .iter()
        .map(|r| r.value.abs())
        .fold(0.0, f64::max)
}

/// λ at iteration `t` under the config's schedule.
pub(crate) fn box_lambda(cfg: &SolverConfig, t: usize) -> f64 {
    (cfg.box_penalty_initial * cfg.box_penalty_growth.powi((t / cfg.box_penalty_period) as i32))
        .min(1e9)
}

/// Quadratic hinge overshoot `max(0, |x| − b)²`; 0 for an infinite box.
pub(crate) fn hinge_sq(x: f64, b: f64) -> f64 {
    if !b.is_finite() {
        return 0.0;
    }
    let over = x.abs() - b;
    if over > 0.0 {
        over * over
    } else {
        0.0
    }
}

/// Derivative of [`hinge_sq`] in `x`.
pub(crate) fn hinge_sq_deriv(x: f64, b: f64) -> f64 {
    if !b.is_finite() {
        return 0.0;
    }
    let over = x.abs() - b;
    if over > 0.0 {
        2.0 * over * x.signum()
    } else {
        0.0
    }
}

/// Full-matrix box overshoot `max(0, |X|_∞ − b)`.
pub(crate) fn full_box_violation(x: &Mat, b: f64) -> f64 {
    if !b.is_finite() {
        0.0
    } else {
        (x.max_abs() - b).max(0.0)
    }
}

/// Entry-clip to `[-b, b]`.
pub(crate) fn clip_matrix(x: &Mat, b: f64) -> Mat {
    Mat::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j).clamp(-b, b))
        .expect("clipping keeps entries finite")
}
