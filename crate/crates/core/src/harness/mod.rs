//! Scenario runner: reproduces each reconstruction claim at desk scale with
//! planted ground truth, seeded sampling, slope fitting, and plain-file
//! reporting. This is the layer the CLI drives.
//!
//! Five scenarios are provided:
//!
//! * **scaling-l1** — absolute-loss reconstruction of a bounded-entry
//!   low-rank target under arbitrary bounded noise; the excess L1 error
//!   above the noise comparator should decay like `s^(−1/2)`.
//! * **scaling-l2** — squared-loss reconstruction; in the noiseless regime
//!   the excess error above `σ²` should decay roughly like `1/s` up to
//!   logarithmic factors.
//! * **recovery-ind-noise** — independent zero-mean noise drawn fresh per
//!   observation: the squared-loss minimizer recovers the ground truth
//!   matrix itself; both sampling models run under identical budgets.
//! * **spiky-counterexample** — a spiky low-rank target that defeats
//!   uniform-sampling reconstruction: average squared error stays near the
//!   information floor of 1/2 no matter the estimator.
//! * **replacement-compare** — paired runs showing sampling without
//!   replacement is at least as good as sampling with replacement.
//!
//! Every run is fully reproducible: an identical [`ScenarioConfig`]
//! (including its seed) produces identical report rows. Trials are
//! independent jobs with deterministic child seeds, so a work pool could
//! execute them in any order; rows are sorted by `(s, trial)` before
//! aggregation to keep the output order-independent.

use crate::error::{Error, Result};
use crate::estimators::{
    erm_max, erm_max_box, erm_trace, erm_trace_box, FitResult, Loss, SolverConfig,
};
use crate::norms::trace_norm;
use crate::rademacher::{finite_class_gap, GapMode};
use crate::rng::{child_seed, rng_from};
use crate::sampling::{
    noise_precondition_check, observe, sample_indices, spiky_matrix, IndexSample, NoiseModel,
    ObservationSemantics, SampleMode,
};
use crate::Mat;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::path::Path;
use std::time::Instant;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    ScalingL1,
    ScalingL2,
    RecoveryIndNoise,
    SpikyCounterexample,
    ReplacementCompare,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::ScalingL1 => "scaling-l1",
            Scenario::ScalingL2 => "scaling-l2",
            Scenario::RecoveryIndNoise => "recovery-ind-noise",
            Scenario::SpikyCounterexample => "spiky-counterexample",
            Scenario::ReplacementCompare => "replacement-compare",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "scaling-l1" => Ok(Scenario::ScalingL1),
            "scaling-l2" => Ok(Scenario::ScalingL2),
            "recovery-ind-noise" => Ok(Scenario::RecoveryIndNoise),
            "spiky-counterexample" => Ok(Scenario::SpikyCounterexample),
            "replacement-compare" => Ok(Scenario::ReplacementCompare),
            other => Err(Error::Parse(format!(
                "unknown scenario {other:?}; expected scaling-l1, scaling-l2, \
                 recovery-ind-noise, spiky-counterexample, or replacement-compare"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Noise specification for the planted observation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// No noise.
    None,
    /// I.i.d. gaussian with standard deviation `sigma`.
    Gaussian,
    /// I.i.d. uniform on `[−sigma, sigma]`.
    Uniform,
    /// A fixed matrix of `±sigma` signs, drawn once from the root seed and
    /// shared by every trial — an arbitrary bounded perturbation.
    Adversarial,
}

impl NoiseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Uniform => "uniform",
            NoiseKind::Adversarial => "adversarial",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "none" => Ok(NoiseKind::None),
            "gaussian" => Ok(NoiseKind::Gaussian),
            "uniform" => Ok(NoiseKind::Uniform),
            "adversarial" => Ok(NoiseKind::Adversarial),
            other => Err(Error::Parse(format!(
                "unknown noise kind {other:?}; expected none, gaussian, uniform, or adversarial"
            ))),
        }
    }
}

/// Constraint family for the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintFamily {
    Max,
    Trace,
    MaxBox,
    TraceBox,
}

impl ConstraintFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintFamily::Max => "max",
            ConstraintFamily::Trace => "trace",
            ConstraintFamily::MaxBox => "max-box",
            ConstraintFamily::TraceBox => "trace-box",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "max" => Ok(ConstraintFamily::Max),
            "trace" => Ok(ConstraintFamily::Trace),
            "max-box" => Ok(ConstraintFamily::MaxBox),
            "trace-box" => Ok(ConstraintFamily::TraceBox),
            other => Err(Error::Parse(format!(
                "unknown constraint family {other:?}; expected max, trace, max-box, or trace-box"
            ))),
        }
    }

    fn is_box(&self) -> bool {
        matches!(self, ConstraintFamily::MaxBox | ConstraintFamily::TraceBox)
    }
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub m: usize,
    /// Planted rank.
    pub r: usize,
    /// Sample sizes, strictly increasing.
    pub s_grid: Vec<usize>,
    pub trials: usize,
    pub noise: NoiseKind,
    /// Gaussian standard deviation / uniform half-width / adversarial
    /// amplitude, depending on `noise`.
    pub sigma: f64,
    pub constraint: ConstraintFamily,
    /// Constraint radius override; `None` uses the planted-model default
    /// (`√r` for the max family, `√(r·n·m)` for the trace family, the
    /// target's exact trace norm for the spiky scenario).
    pub radius_a: Option<f64>,
    /// Entrywise box bound for the box families (default 1, the planted
    /// entry scale).
    pub radius_b: Option<f64>,
    /// Multiplicity constant for the independent-noise cap echo.
    pub k_mult: u32,
    /// Tighten the noise-magnitude precondition to its strict form and add
    /// per-sample-size empirical success frequencies to the aggregates.
    pub strict_noise_check: bool,
    /// Error threshold defining "success" for the frequency report.
    pub success_threshold: f64,
    /// Solver iteration override; 0 keeps the solver default.
    pub iterations: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Desk-scale defaults for a scenario: shapes and grids sized so the
    /// full suite stays in the tens of minutes on one core.
    pub fn defaults_for(scenario: Scenario) -> Self {
        let base = ScenarioConfig {
            scenario,
            n: 48,
            m: 48,
            r: 2,
            s_grid: vec![300, 600, 1200, 2400, 4800],
            trials: 10,
            noise: NoiseKind::None,
            sigma: 0.0,
            constraint: ConstraintFamily::Max,
            radius_a: None,
            radius_b: None,
            k_mult: 2,
            strict_noise_check: false,
            success_threshold: 0.05,
            iterations: 0,
            seed: 0x5ce0_a51d_0000_0001,
        };
        match scenario {
            Scenario::ScalingL1 => ScenarioConfig {
                noise: NoiseKind::Adversarial,
                sigma: 0.5,
                ..base
            },
            Scenario::ScalingL2 => base,
            Scenario::RecoveryIndNoise => ScenarioConfig {
                noise: NoiseKind::Gaussian,
                sigma: 0.5,
                ..base
            },
            Scenario::SpikyCounterexample => ScenarioConfig {
                n: 32,
                m: 32,
                s_grid: vec![512],
                constraint: ConstraintFamily::Trace,
                ..base
            },
            Scenario::ReplacementCompare => ScenarioConfig {
                n: 32,
                m: 32,
                s_grid: vec![128, 256, 512, 1024],
                noise: NoiseKind::Gaussian,
                sigma: 0.25,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < 2 {
            return Err(Error::Parameter("n and m must be ≥ 2".into()));
        }
        if self.r == 0 || self.r > self.n.min(self.m) {
            return Err(Error::Parameter(format!(
                "planted rank must satisfy 1 ≤ r ≤ min(n, m), got r = {}",
                self.r
            )));
        }
        if self.s_grid.is_empty() {
            return Err(Error::Parameter("s grid must be non-empty".into()));
        }
        if self.s_grid[0] == 0 {
            return Err(Error::Parameter("sample sizes must be ≥ 1".into()));
        }
        if !self.s_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parameter("s grid must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::Parameter("trial count must be ≥ 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be finite and ≥ 0, got {}", self.sigma)));
        }
        if let Some(a) = self.radius_a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Parameter(format!("radius_a must be finite and > 0, got {a}")));
            }
        }
        if let Some(b) = self.radius_b {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Parameter(format!("radius_b must be finite and > 0, got {b}")));
            }
        }
        if self.k_mult == 0 {
            return Err(Error::Parameter("k_mult must be ≥ 1".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::Parameter("success_threshold must be > 0".into()));
        }
        let needs_wo = matches!(
            self.scenario,
            Scenario::SpikyCounterexample | Scenario::ReplacementCompare
        );
        if needs_wo {
            let max_s = *self.s_grid.last().expect("non-empty");
            if max_s > self.n * self.m {
                return Err(Error::Parameter(format!(
                    "{} samples without replacement: every s must be ≤ n·m = {}",
                    self.scenario,
                    self.n * self.m
                )));
            }
        }
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override {spec:?} is not of the form key=value")))?;
        self.apply_key(key.trim(), value.trim())
    }

    fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Parse(format!("key {key}: cannot parse {value:?}")))
        }
        match key {
            "scenario" => self.scenario = Scenario::parse(value)?,
            "n" => self.n = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "s_grid" => {
                let grid: Result<Vec<usize>> =
                    value.split(',').map(|p| num("s_grid", p.trim())).collect();
                self.s_grid = grid?;
            }
            "trials" => self.trials = num(key, value)?,
            "noise" => self.noise = NoiseKind::parse(value)?,
            "sigma" => self.sigma = num(key, value)?,
            "constraint" => self.constraint = ConstraintFamily::parse(value)?,
            "radius_a" => self.radius_a = Some(num(key, value)?),
            "radius_b" => self.radius_b = Some(num(key, value)?),
            "k_mult" => self.k_mult = num(key, value)?,
            "strict_noise_check" => self.strict_noise_check = num(key, value)?,
            "success_threshold" => self.success_threshold = num(key, value)?,
            "iterations" => self.iterations = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => {
                return Err(Error::Parse(format!(
                    "unknown config key {other:?}; known keys: scenario, n, m, r, s_grid, \
                     trials, noise, sigma, constraint, radius_a, radius_b, k_mult, \
                     strict_noise_check, success_threshold, iterations, seed"
                )));
            }
        }
        Ok(())
    }
}

/// Parse a flat `key = value` config file (`#` starts a comment). The
/// `scenario` key is required and selects the defaults every other key
/// overrides.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut pairs = Vec::new();
    let mut scenario = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {}: {raw:?} is not key = value", lineno + 1))
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key == "scenario" {
            scenario = Some(Scenario::parse(&value)?);
        }
        pairs.push((key, value));
    }
    let scenario = scenario
        .ok_or_else(|| Error::Parse("config must set the scenario key".into()))?;
    let mut cfg = ScenarioConfig::defaults_for(scenario);
    for (key, value) in &pairs {
        cfg.apply_key(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One per-(s, trial) metric observation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricRow {
    pub scenario: String,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub s: usize,
    pub trial: usize,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

/// Mean and standard error of one metric at one sample size.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AggregateRow {
    pub metric: String,
    pub s: usize,
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Ordinary-least-squares fit of `log(mean error)` against `log s`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub std_error: f64,
    pub r2: f64,
    pub points_used: usize,
}

/// One named pass/fail check evaluated by a scenario runner.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AssertionOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Complete record of one scenario run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentReport {
    /// Echo of the configuration that produced this report.
    pub config: ScenarioConfig,
    /// The mathematical claim this scenario instantiates, in words.
    pub claim: String,
    /// The exact constraint radii used.
    pub constraint_used: String,
    /// One row per (s, trial) carrying the scenario's primary metric,
    /// sorted by (s, trial). Row count is `|s_grid|·trials` minus any
    /// recorded estimator failures.
    pub rows: Vec<MetricRow>,
    /// Mean/SE per (metric, s), primary and auxiliary metrics alike.
    pub aggregates: Vec<AggregateRow>,
    /// Log-log slope of the primary metric, for the decaying scenarios.
    pub slope: Option<SlopeFit>,
    pub assertions: Vec<AssertionOutcome>,
    /// Free-form notes: cap echoes, precondition reports, linked exact
    /// checks.
    pub appendix: Vec<String>,
    pub estimator_failures: usize,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    pub fn all_assertions_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Fit `log(value) ~ slope·log(s) + intercept` by ordinary least squares
/// over the points whose value exceeds `floor` (10× the solver tolerance in
/// scenario use — values at the floor measure the optimizer, not the
/// statistics). Requires at least three distinct usable sample sizes.
pub fn fit_slope(points: &[(f64, f64)], floor: f64) -> Result<SlopeFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(s, v)| s > 0.0 && v.is_finite() && v > floor)
        .collect();
    let mut distinct: Vec<f64> = usable.iter().map(|&(s, _)| s).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Parameter(format!(
            "degenerate slope fit: {} distinct sample sizes above the error floor {floor:e}; \
             need at least 3",
            distinct.len()
        )));
    }
    let k = usable.len() as f64;
    let xs: Vec<f64> = usable.iter().map(|&(s, _)| s.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, v)| v.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let dof = (usable.len() as f64 - 2.0).max(1.0);
    let std_error = (ssr / dof / sxx).sqrt();
    let r2 = if sst > 0.0 {
        1.0 - ssr / sst
    } else if ssr <= f64::EPSILON {
        1.0
    } else {
        0.0
    };
    Ok(SlopeFit { slope, std_error, r2, points_used: usable.len() })
}

/// Write the metric rows as CSV with the stable column order
/// `scenario,n,m,r,s,trial,metric,value,seed`.
pub fn write_rows_csv(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut out = String::from("scenario,n,m,r,s,trial,metric,value,seed\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.scenario, row.n, row.m, row.r, row.s, row.trial, row.metric, row.value, row.seed
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write the full report (aggregates, slope, assertions, appendix) as JSON.
pub fn write_report_json(report: &ExperimentReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Dispatch on the configured scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    match cfg.scenario {
        Scenario::ScalingL1 => run_scaling_l1(cfg),
        Scenario::ScalingL2 => run_scaling_l2(cfg),
        Scenario::RecoveryIndNoise => run_recovery_ind_noise(cfg),
        Scenario::SpikyCounterexample => run_spiky_counterexample(cfg),
        Scenario::ReplacementCompare => run_replacement_compare(cfg),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

/// Planted ground truth: `M = U Vᵀ` with unit-norm factor rows, so every
/// entry is in `[−1, 1]`, `‖M‖_max ≤ 1 ≤ √r`, and `‖M‖_Σ ≤ √(r·n·m)` —
/// feasible for both families' default radii with slack.
fn planted_truth(n: usize, m: usize, r: usize, seed: u64) -> Result<Mat> {
    let u = unit_row_factor(n, r, child_seed(seed, "planted-left", 0));
    let v = unit_row_factor(m, r, child_seed(seed, "planted-right", 0));
    u.matmul_transpose(&v)
}

fn unit_row_factor(rows: usize, r: usize, seed: u64) -> Mat {
    let mut rng = rng_from(seed);
    let mut f = Mat::zeros(rows, r).expect("positive dims");
    for i in 0..rows {
        loop {
            let row: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                for (j, x) in row.iter().enumerate() {
                    f.set(i, j, x / norm);
                }
                break;
            }
        }
    }
    f
}

/// Materialize the full noise matrix for one trial. Gaussian and uniform
/// noise re-draw per trial; the adversarial matrix is fixed by the root
/// seed and shared across trials (it is one arbitrary perturbation, not a
/// random process).
fn materialize_noise(cfg: &ScenarioConfig, trial_seed: u64) -> Result<Mat> {
    match cfg.noise {
        NoiseKind::None => Mat::zeros(cfg.n, cfg.m),
        NoiseKind::Gaussian => {
            let mut rng = rng_from(child_seed(trial_seed, "noise-matrix", 0));
            Mat::from_fn(cfg.n, cfg.m, |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                cfg.sigma * g
            })
        }
        NoiseKind::Uniform => {
            let mut rng = rng_from(child_seed(trial_seed, "noise-matrix", 0));
            Mat::from_fn(cfg.n, cfg.m, |_, _| {
                if cfg.sigma == 0.0 {
                    0.0
                } else {
                    rng.random_range(-cfg.sigma..=cfg.sigma)
                }
            })
        }
        NoiseKind::Adversarial => {
            let mut rng = rng_from(child_seed(cfg.seed, "adversarial-noise", 0));
            Mat::from_fn(cfg.n, cfg.m, |_, _| {
                if rng.random::<bool>() {
                    cfg.sigma
                } else {
                    -cfg.sigma
                }
            })
        }
    }
}

/// The independent-noise model matching the config, for per-observation
/// semantics.
fn independent_noise_model(cfg: &ScenarioConfig) -> Result<NoiseModel> {
    match cfg.noise {
        NoiseKind::None => Ok(NoiseModel::None),
        NoiseKind::Gaussian => {
            if cfg.sigma == 0.0 {
                Ok(NoiseModel::None)
            } else {
                NoiseModel::iid_gaussian(cfg.sigma)
            }
        }
        NoiseKind::Uniform => {
            if cfg.sigma == 0.0 {
                Ok(NoiseModel::None)
            } else {
                NoiseModel::iid_uniform(cfg.sigma)
            }
        }
        NoiseKind::Adversarial => Err(Error::Parameter(
            "this scenario requires independent zero-mean noise; the adversarial kind is a \
             fixed perturbation"
                .into(),
        )),
    }
}

fn solver_config(cfg: &ScenarioConfig, trial_seed: u64) -> SolverConfig {
    let mut sc = SolverConfig {
        rank_budget: 2 * cfg.r + 2,
        seed: child_seed(trial_seed, "solver", 0),
        ..SolverConfig::default()
    };
    if cfg.iterations > 0 {
        sc.iterations = cfg.iterations;
    }
    sc
}

fn default_radius_a(cfg: &ScenarioConfig) -> f64 {
    match cfg.constraint {
        ConstraintFamily::Max | ConstraintFamily::MaxBox => (cfg.r as f64).sqrt(),
        ConstraintFamily::Trace | ConstraintFamily::TraceBox => {
            (cfg.r as f64 * cfg.n as f64 * cfg.m as f64).sqrt()
        }
    }
}

fn constraint_echo(cfg: &ScenarioConfig, a: f64) -> String {
    if cfg.constraint.is_box() {
        let b = cfg.radius_b.unwrap_or(1.0);
        format!("{} ball, A = {a:.6}, entry box B = {b:.6}", cfg.constraint.as_str())
    } else {
        format!("{} ball, A = {a:.6}", cfg.constraint.as_str())
    }
}

fn fit_estimator(
    cfg: &ScenarioConfig,
    obs: &crate::sampling::ObservationSet,
    a: f64,
    loss: Loss,
    sc: &SolverConfig,
) -> Result<FitResult> {
    let b = cfg.radius_b.unwrap_or(1.0);
    match cfg.constraint {
        ConstraintFamily::Max => erm_max(obs, a, loss, sc),
        ConstraintFamily::Trace => erm_trace(obs, a, loss, sc),
        ConstraintFamily::MaxBox => erm_max_box(obs, a, b, loss, sc),
        ConstraintFamily::TraceBox => erm_trace_box(obs, a, b, loss, sc),
    }
}

fn trial_seed(cfg: &ScenarioConfig, s_index: usize, trial: usize) -> u64 {
    let s_seed = child_seed(cfg.seed, "s-grid", s_index as u64);
    child_seed(s_seed, "trial", trial as u64)
}

/// Observe the fixed matrix `y` at freshly sampled positions (no extra
/// noise: `y` already carries it).
fn observe_fixed(
    y: &Mat,
    s: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<(IndexSample, crate::sampling::ObservationSet)> {
    let sample = sample_indices(y.rows(), y.cols(), s, mode, child_seed(seed, "sample", 0))?;
    let obs = observe(y, &sample, &NoiseModel::None, ObservationSemantics::PerEntry, 0)?;
    Ok((sample, obs))
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    crate::rademacher::mean_and_se(values)
}

fn make_row(cfg: &ScenarioConfig, s: usize, trial: usize, metric: &str, value: f64, seed: u64) -> MetricRow {
    MetricRow {
        scenario: cfg.scenario.as_str().to_string(),
        n: cfg.n,
        m: cfg.m,
        r: cfg.r,
        s,
        trial,
        metric: metric.to_string(),
        value,
        seed,
    }
}

/// Group metric values per s into aggregate rows.
fn aggregate(metric: &str, per_s: &[(usize, Vec<f64>)]) -> Vec<AggregateRow> {
    per_s
        .iter()
        .filter(|(_, values)| !values.is_empty())
        .map(|(s, values)| {
            let (mean, std_error) = mean_se(values);
            AggregateRow { metric: metric.to_string(), s: *s, mean, std_error, count: values.len() }
        })
        .collect()
}

/// Shared failure accounting: estimator errors are recorded and tolerated
/// up to 20% of attempted fits, past which the scenario aborts.
struct FailureBudget {
    failures: usize,
    attempts: usize,
}

impl FailureBudget {
    fn new() -> Self {
        FailureBudget { failures: 0, attempts: 0 }
    }

    fn check(&self) -> Result<()> {
        if self.failures * 5 > self.attempts {
            return Err(Error::NonConvergence {
                routine: "scenario runner",
                detail: format!(
                    "estimator failures exceeded 20% of attempts ({} of {})",
                    self.failures, self.attempts
                ),
            });
        }
        Ok(())
    }
}

fn slope_floor(sc_tolerance: f64) -> f64 {
    10.0 * sc_tolerance
}

fn assert_outcome(name: &str, passed: bool, detail: String) -> AssertionOutcome {
    AssertionOutcome { name: name.to_string(), passed, detail }
}

/// Per-s monotone-decrease check within two joint standard errors; returns
/// (passed, detail).
fn decreasing_within_2se(aggs: &[AggregateRow]) -> (bool, String) {
    let mut violations = Vec::new();
    for w in aggs.windows(2) {
        let joint = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        if w[1].mean > w[0].mean + 2.0 * joint {
            violations.push(format!(
                "s {}→{}: {:.4e} rose to {:.4e} (2·SE gate {:.4e})",
                w[0].s,
                w[1].s,
                w[0].mean,
                w[1].mean,
                2.0 * joint
            ));
        }
    }
    if violations.is_empty() {
        (true, "means decrease along the grid within two joint SEs".to_string())
    } else {
        (false, violations.join("; "))
    }
}

/// Slope assertions shared by the scaling scenarios.
fn slope_assertions(
    assertions: &mut Vec<AssertionOutcome>,
    slope: &Option<SlopeFit>,
    band: (f64, f64),
    min_r2: f64,
) {
    match slope {
        Some(fit) => {
            assertions.push(assert_outcome(
                "slope_in_band",
                fit.slope >= band.0 && fit.slope <= band.1,
                format!("fitted slope {:.4} against band [{}, {}]", fit.slope, band.0, band.1),
            ));
            assertions.push(assert_outcome(
                "r2_at_least",
                fit.r2 >= min_r2,
                format!("R² {:.4} against minimum {min_r2}", fit.r2),
            ));
        }
        None => assertions.push(assert_outcome(
            "slope_in_band",
            false,
            "slope fit degenerate: fewer than 3 usable sample sizes".to_string(),
        )),
    }
}

/// Fraction of per-trial values at or below the success threshold, per s.
fn success_frequencies(
    metric: &str,
    per_s: &[(usize, Vec<f64>)],
    threshold: f64,
) -> Vec<AggregateRow> {
    per_s
        .iter()
        .filter(|(_, values)| !values.is_empty())
        .map(|(s, values)| {
            let hits = values.iter().filter(|v| **v <= threshold).count();
            AggregateRow {
                metric: format!("{metric}_success_freq"),
                s: *s,
                mean: hits as f64 / values.len() as f64,
                std_error: 0.0,
                count: values.len(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Scenario: scaling-l1.
// ---------------------------------------------------------------------------

/// Absolute-loss scaling: excess L1 error above the noise comparator
/// `‖Y − M‖₁/(nm)` against sample size, expected slope ≈ −1/2.
pub fn run_scaling_l1(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let nm = (cfg.n * cfg.m) as f64;
    let truth = planted_truth(cfg.n, cfg.m, cfg.r, child_seed(cfg.seed, "planted", 0))?;
    let a = cfg.radius_a.unwrap_or_else(|| default_radius_a(cfg));

    let mut rows = Vec::new();
    let mut per_s: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut budget = FailureBudget::new();
    let mut tolerance = SolverConfig::default().tolerance;
    for (si, &s) in cfg.s_grid.iter().enumerate() {
        let mut excesses = Vec::new();
        for t in 0..cfg.trials {
            let ts = trial_seed(cfg, si, t);
            let z = materialize_noise(cfg, ts)?;
            let y = truth.add(&z)?;
            let comparator = z.l1_norm() / nm;
            let (_, obs) = observe_fixed(&y, s, SampleMode::WithReplacement, ts)?;
            let sc = solver_config(cfg, ts);
            tolerance = sc.tolerance;
            budget.attempts += 1;
            match fit_estimator(cfg, &obs, a, Loss::Abs, &sc) {
                Ok(fit) => {
                    let excess = y.sub(&fit.estimate)?.l1_norm() / nm - comparator;
                    rows.push(make_row(cfg, s, t, "excess_l1", excess, ts));
                    excesses.push(excess);
                }
                Err(_) => budget.failures += 1,
            }
        }
        per_s.push((s, excesses));
    }
    budget.check()?;

    let mut aggregates = aggregate("excess_l1", &per_s);
    if cfg.strict_noise_check {
        aggregates.extend(success_frequencies("excess_l1", &per_s, cfg.success_threshold));
    }
    let slope_points: Vec<(f64, f64)> =
        aggregates.iter().filter(|a| a.metric == "excess_l1").map(|a| (a.s as f64, a.mean)).collect();
    let slope = fit_slope(&slope_points, slope_floor(tolerance)).ok();

    let mut assertions = Vec::new();
    if cfg.s_grid.len() >= 3 {
        slope_assertions(&mut assertions, &slope, (-0.65, -0.35), 0.9);
    }
    let mut neg = Vec::new();
    for agg in aggregates.iter().filter(|a| a.metric == "excess_l1") {
        if agg.mean < -2.0 * agg.std_error {
            neg.push(format!("s = {}: mean {:.4e} below −2·SE", agg.s, agg.mean));
        }
    }
    assertions.push(assert_outcome(
        "excess_nonnegative_within_2se",
        neg.is_empty(),
        if neg.is_empty() { "all sample sizes pass".to_string() } else { neg.join("; ") },
    ));

    rows.sort_by_key(|r| (r.s, r.trial));
    Ok(ExperimentReport {
        config: cfg.clone(),
        claim: "bounded-entry reconstruction with the absolute loss: the constrained \
                minimizer's excess L1 error above the noise comparator decays like s^(−1/2), \
                with no assumption on the perturbation"
            .to_string(),
        constraint_used: constraint_echo(cfg, a),
        rows,
        aggregates,
        slope,
        assertions,
        appendix: vec![format!(
            "comparator per trial: ‖Y − M‖₁/(nm) of the realized perturbation; noise kind {}, \
             amplitude {}",
            cfg.noise.as_str(),
            cfg.sigma
        )],
        estimator_failures: budget.failures,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Scenario: scaling-l2.
// ---------------------------------------------------------------------------

/// Squared-loss scaling: excess quadratic error above the realized noise
/// level `σ² = ‖Z‖_F²/(nm)`; in the noiseless regime the slope target is
/// ≈ −1 up to logarithmic factors. When a box family is configured the
/// unconstrained twin runs alongside for a paired comparison.
pub fn run_scaling_l2(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let nm = (cfg.n * cfg.m) as f64;
    let truth = planted_truth(cfg.n, cfg.m, cfg.r, child_seed(cfg.seed, "planted", 0))?;
    let a = cfg.radius_a.unwrap_or_else(|| default_radius_a(cfg));

    let mut appendix = Vec::new();
    // Noise-magnitude precondition on the first trial's realized noise.
    let z0 = materialize_noise(cfg, trial_seed(cfg, 0, 0))?;
    let pre = noise_precondition_check(&z0, cfg.r, cfg.strict_noise_check)?;
    if !pre.pass {
        return Err(Error::Parameter(format!(
            "noise magnitude precondition failed: |Z|_∞ = {:.4} exceeds the {} threshold {:.4}",
            pre.linf,
            if cfg.strict_noise_check { "strict" } else { "lenient" },
            if cfg.strict_noise_check { pre.strict_threshold } else { pre.lenient_threshold }
        )));
    }
    appendix.push(format!(
        "noise precondition ({}): |Z|_∞ = {:.4}, lenient threshold {:.4}, strict threshold {:.4}",
        if cfg.strict_noise_check { "strict" } else { "lenient" },
        pre.linf,
        pre.lenient_threshold,
        pre.strict_threshold
    ));

    let paired_unboxed = cfg.constraint.is_box();
    let mut rows = Vec::new();
    let mut per_s: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut per_s_unboxed: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut per_s_paired_gap: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut budget = FailureBudget::new();
    let mut tolerance = SolverConfig::default().tolerance;
    for (si, &s) in cfg.s_grid.iter().enumerate() {
        let mut excesses = Vec::new();
        let mut unboxed = Vec::new();
        let mut gaps = Vec::new();
        for t in 0..cfg.trials {
            let ts = trial_seed(cfg, si, t);
            let z = materialize_noise(cfg, ts)?;
            let y = truth.add(&z)?;
            let sigma2 = z.frobenius_norm().powi(2) / nm;
            let (_, obs) = observe_fixed(&y, s, SampleMode::WithReplacement, ts)?;
            let sc = solver_config(cfg, ts);
            tolerance = sc.tolerance;
            budget.attempts += 1;
            let fitted = match fit_estimator(cfg, &obs, a, Loss::Squared, &sc) {
                Ok(fit) => fit,
                Err(_) => {
                    budget.failures += 1;
                    continue;
                }
            };
            let excess = y.sub(&fitted.estimate)?.frobenius_norm().powi(2) / nm - sigma2;
            rows.push(make_row(cfg, s, t, "excess_l2", excess, ts));
            excesses.push(excess);
            if paired_unboxed {
                // Same data, same budget, box dropped.
                let mut unboxed_cfg = cfg.clone();
                unboxed_cfg.constraint = match cfg.constraint {
                    ConstraintFamily::MaxBox => ConstraintFamily::Max,
                    ConstraintFamily::TraceBox => ConstraintFamily::Trace,
                    other => other,
                };
                budget.attempts += 1;
                match fit_estimator(&unboxed_cfg, &obs, a, Loss::Squared, &sc) {
                    Ok(fit) => {
                        let e = y.sub(&fit.estimate)?.frobenius_norm().powi(2) / nm - sigma2;
                        unboxed.push(e);
                        gaps.push(excess - e);
                    }
                    Err(_) => budget.failures += 1,
                }
            }
        }
        per_s.push((s, excesses));
        per_s_unboxed.push((s, unboxed));
        per_s_paired_gap.push((s, gaps));
    }
    budget.check()?;

    let mut aggregates = aggregate("excess_l2", &per_s);
    if paired_unboxed {
        aggregates.extend(aggregate("excess_l2_unboxed", &per_s_unboxed));
        aggregates.extend(aggregate("excess_l2_box_minus_unboxed", &per_s_paired_gap));
    }
    if cfg.strict_noise_check {
        aggregates.extend(success_frequencies("excess_l2", &per_s, cfg.success_threshold));
    }
    let slope_points: Vec<(f64, f64)> =
        aggregates.iter().filter(|a| a.metric == "excess_l2").map(|a| (a.s as f64, a.mean)).collect();
    let slope = fit_slope(&slope_points, slope_floor(tolerance)).ok();

    let mut assertions = Vec::new();
    // The slope band is asserted only in the noiseless regime; with noise
    // the report records both regimes without asserting the crossover.
    if cfg.noise == NoiseKind::None && cfg.s_grid.len() >= 3 {
        slope_assertions(&mut assertions, &slope, (-1.3, -0.7), 0.9);
    }
    if paired_unboxed {
        let mut bad = Vec::new();
        for agg in aggregates.iter().filter(|a| a.metric == "excess_l2_box_minus_unboxed") {
            if agg.mean > 2.0 * agg.std_error {
                bad.push(format!("s = {}: box is worse by {:.4e}", agg.s, agg.mean));
            }
        }
        assertions.push(assert_outcome(
            "box_no_worse_within_2se",
            bad.is_empty(),
            if bad.is_empty() {
                "box-constrained error ≤ unconstrained + 2·SE at every s".to_string()
            } else {
                bad.join("; ")
            },
        ));
    }

    rows.sort_by_key(|r| (r.s, r.trial));
    Ok(ExperimentReport {
        config: cfg.clone(),
        claim: "squared-loss reconstruction: excess quadratic error above the noise level \
                decays roughly like 1/s (up to logarithmic factors) in the noiseless regime"
            .to_string(),
        constraint_used: constraint_echo(cfg, a),
        rows,
        aggregates,
        slope,
        assertions,
        appendix,
        estimator_failures: budget.failures,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Scenario: recovery-ind-noise.
// ---------------------------------------------------------------------------

/// Independent-noise recovery: per-observation fresh noise with replacement
/// (primary arm) against per-entry noise without replacement (secondary
/// arm), measuring `(1/nm)·‖M − X̂‖_F²` — recovery of the ground truth
/// itself, not of the noisy labels.
pub fn run_recovery_ind_noise(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let nm = (cfg.n * cfg.m) as f64;
    let truth = planted_truth(cfg.n, cfg.m, cfg.r, child_seed(cfg.seed, "planted", 0))?;
    let a = cfg.radius_a.unwrap_or_else(|| default_radius_a(cfg));
    let noise = independent_noise_model(cfg)?;

    let mut appendix = Vec::new();
    let k = cfg.k_mult as f64;
    let cap = (k + 1.0) / std::f64::consts::E * nm.powf(1.0 - 1.0 / (k + 1.0));
    let inside: Vec<usize> =
        cfg.s_grid.iter().copied().filter(|&s| (s as f64) <= cap).collect();
    appendix.push(format!(
        "without-replacement arm cap at K = {}: s ≤ (K+1)/e·(nm)^(1−1/(K+1)) = {:.1}; grid \
         points inside the cap: {:?}",
        cfg.k_mult, cap, inside
    ));
    appendix.push(
        "the without-replacement guarantee needs the budget both large enough for the target \
         accuracy and below the cap; outside it only the with-replacement arm is covered"
            .to_string(),
    );

    let mut rows = Vec::new();
    let mut per_s: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut per_s_wo: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut budget = FailureBudget::new();
    let mut tolerance = SolverConfig::default().tolerance;
    for (si, &s) in cfg.s_grid.iter().enumerate() {
        let mut mses = Vec::new();
        let mut mses_wo = Vec::new();
        for t in 0..cfg.trials {
            let ts = trial_seed(cfg, si, t);
            let sc = solver_config(cfg, ts);
            tolerance = sc.tolerance;

            // Primary arm: with replacement, fresh noise per observation.
            let sample = sample_indices(
                cfg.n,
                cfg.m,
                s,
                SampleMode::WithReplacement,
                child_seed(ts, "sample-with", 0),
            )?;
            let obs = observe(
                &truth,
                &sample,
                &noise,
                ObservationSemantics::PerObservation,
                child_seed(ts, "noise-with", 0),
            )?;
            budget.attempts += 1;
            match fit_estimator(cfg, &obs, a, Loss::Squared, &sc) {
                Ok(fit) => {
                    let mse = truth.sub(&fit.estimate)?.frobenius_norm().powi(2) / nm;
                    rows.push(make_row(cfg, s, t, "mse_to_m", mse, ts));
                    mses.push(mse);
                }
                Err(_) => budget.failures += 1,
            }

            // Secondary arm: without replacement, per-entry noise — only
            // runnable while s fits the grid.
            if s <= cfg.n * cfg.m {
                let sample = sample_indices(
                    cfg.n,
                    cfg.m,
                    s,
                    SampleMode::WithoutReplacement,
                    child_seed(ts, "sample-without", 0),
                )?;
                let obs = observe(
                    &truth,
                    &sample,
                    &noise,
                    ObservationSemantics::PerEntry,
                    child_seed(ts, "noise-without", 0),
                )?;
                budget.attempts += 1;
                match fit_estimator(cfg, &obs, a, Loss::Squared, &sc) {
                    Ok(fit) => {
                        mses_wo.push(truth.sub(&fit.estimate)?.frobenius_norm().powi(2) / nm);
                    }
                    Err(_) => budget.failures += 1,
                }
            }
        }
        per_s.push((s, mses));
        per_s_wo.push((s, mses_wo));
    }
    budget.check()?;
    if cfg.s_grid.iter().any(|&s| s > cfg.n * cfg.m) {
        appendix.push(format!(
            "grid points above n·m = {} run the with-replacement arm only",
            cfg.n * cfg.m
        ));
    }

    let mut aggregates = aggregate("mse_to_m", &per_s);
    aggregates.extend(aggregate("mse_to_m_wo", &per_s_wo));
    if cfg.strict_noise_check {
        aggregates.extend(success_frequencies("mse_to_m", &per_s, cfg.success_threshold));
    }
    let slope_points: Vec<(f64, f64)> =
        aggregates.iter().filter(|a| a.metric == "mse_to_m").map(|a| (a.s as f64, a.mean)).collect();
    let slope = fit_slope(&slope_points, slope_floor(tolerance)).ok();

    let mut assertions = Vec::new();
    let primary: Vec<AggregateRow> =
        aggregates.iter().filter(|a| a.metric == "mse_to_m").cloned().collect();
    let (dec_ok, dec_detail) = decreasing_within_2se(&primary);
    assertions.push(assert_outcome("mse_decreasing_within_2se", dec_ok, dec_detail));

    rows.sort_by_key(|r| (r.s, r.trial));
    Ok(ExperimentReport {
        config: cfg.clone(),
        claim: "independent zero-mean noise: the squared-loss minimizer recovers the ground \
                truth matrix itself; fresh per-observation noise lets repeated positions \
                average their noise down"
            .to_string(),
        constraint_used: constraint_echo(cfg, a),
        rows,
        aggregates,
        slope,
        assertions,
        appendix,
        estimator_failures: budget.failures,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Scenario: spiky-counterexample.
// ---------------------------------------------------------------------------

/// Spiky-target counterexample: a rank-r matrix whose mass hides in r
/// columns of `±√(m/r)` spikes. Whatever the estimator does, the entries it
/// never saw are independent signs, so the average squared error over the
/// whole matrix cannot drop below ≈ (unseen fraction)·(m/r)·(1/nm-scale) —
/// at `s = nm/2` the information floor is 1/2.
pub fn run_spiky_counterexample(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.noise != NoiseKind::None {
        return Err(Error::Parameter(
            "the spiky counterexample observes its target exactly; set noise = none".into(),
        ));
    }
    let start = Instant::now();
    let nm = (cfg.n * cfg.m) as f64;
    let y = spiky_matrix(cfg.n, cfg.m, cfg.r, child_seed(cfg.seed, "spiky-truth", 0))?;
    // Generous radius: the target's own trace norm, so the estimator could
    // in principle interpolate everything it saw.
    let a = match cfg.radius_a {
        Some(a) => a,
        None => trace_norm(&y)?,
    };

    let mut rows = Vec::new();
    let mut per_s_full: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut per_s_unobserved: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut per_s_observed: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut budget = FailureBudget::new();
    for (si, &s) in cfg.s_grid.iter().enumerate() {
        let mut full = Vec::new();
        let mut unobs = Vec::new();
        let mut obs_err = Vec::new();
        for t in 0..cfg.trials {
            let ts = trial_seed(cfg, si, t);
            let (sample, obs) = observe_fixed(&y, s, SampleMode::WithoutReplacement, ts)?;
            let sc = solver_config(cfg, ts);
            budget.attempts += 1;
            let fitted = match erm_trace(&obs, a, Loss::Squared, &sc) {
                Ok(fit) => fit,
                Err(_) => {
                    budget.failures += 1;
                    continue;
                }
            };
            let diff = y.sub(&fitted.estimate)?;
            let mse_full = diff.frobenius_norm().powi(2) / nm;
            rows.push(make_row(cfg, s, t, "mse_full", mse_full, ts));
            full.push(mse_full);

            let mut seen = vec![false; cfg.n * cfg.m];
            for &(i, j) in &sample.pairs {
                seen[i * cfg.m + j] = true;
            }
            let (mut sq_unseen, mut cnt_unseen) = (0.0, 0usize);
            let (mut sq_seen, mut cnt_seen) = (0.0, 0usize);
            for i in 0..cfg.n {
                for j in 0..cfg.m {
                    let e = diff.get(i, j).powi(2);
                    if seen[i * cfg.m + j] {
                        sq_seen += e;
                        cnt_seen += 1;
                    } else {
                        sq_unseen += e;
                        cnt_unseen += 1;
                    }
                }
            }
            if cnt_unseen > 0 {
                unobs.push(sq_unseen / cnt_unseen as f64);
            }
            if cnt_seen > 0 {
                obs_err.push(sq_seen / cnt_seen as f64);
            }
        }
        per_s_full.push((s, full));
        per_s_unobserved.push((s, unobs));
        per_s_observed.push((s, obs_err));
    }
    budget.check()?;

    let mut aggregates = aggregate("mse_full", &per_s_full);
    aggregates.extend(aggregate("mse_unobserved_per_entry", &per_s_unobserved));
    aggregates.extend(aggregate("mse_observed_per_entry", &per_s_observed));

    let mut assertions = Vec::new();
    let mut low = Vec::new();
    for agg in aggregates.iter().filter(|a| a.metric == "mse_full") {
        if agg.mean < 0.4 {
            low.push(format!("s = {}: mean squared error {:.4} below 0.4", agg.s, agg.mean));
        }
    }
    assertions.push(assert_outcome(
        "average_squared_error_at_least_0.4",
        low.is_empty(),
        if low.is_empty() {
            "reconstruction error stays at the information floor".to_string()
        } else {
            low.join("; ")
        },
    ));

    rows.sort_by_key(|r| (r.s, r.trial));
    Ok(ExperimentReport {
        config: cfg.clone(),
        claim: "spiky low-rank targets defeat uniform-sample reconstruction: unseen spike \
                entries are independent signs, so half-observation leaves an expected average \
                squared error of at least 1/2 for every estimator"
            .to_string(),
        constraint_used: format!("trace ball, A = {a:.6} (the target's own trace norm unless overridden)"),
        rows,
        aggregates,
        slope: None,
        assertions,
        appendix: vec![format!(
            "benchmark: information floor 1/2 at s = nm/2; spike amplitude √(m/r) = {:.4}",
            (cfg.m as f64 / cfg.r as f64).sqrt()
        )],
        estimator_failures: budget.failures,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Scenario: replacement-compare.
// ---------------------------------------------------------------------------

/// Paired comparison of sampling modes on identical targets and budgets:
/// the without-replacement arm should never be worse than the
/// with-replacement arm beyond paired noise.
pub fn run_replacement_compare(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let nm = (cfg.n * cfg.m) as f64;
    let truth = planted_truth(cfg.n, cfg.m, cfg.r, child_seed(cfg.seed, "planted", 0))?;
    let a = cfg.radius_a.unwrap_or_else(|| default_radius_a(cfg));

    let mut rows = Vec::new();
    let mut per_s_diff: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut per_s_with: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut per_s_without: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut budget = FailureBudget::new();
    for (si, &s) in cfg.s_grid.iter().enumerate() {
        let mut diffs = Vec::new();
        let mut errs_w = Vec::new();
        let mut errs_wo = Vec::new();
        for t in 0..cfg.trials {
            let ts = trial_seed(cfg, si, t);
            // Shared target for the pair: identical Y, identical budgets.
            let z = materialize_noise(cfg, ts)?;
            let y = truth.add(&z)?;
            let sc = solver_config(cfg, ts);

            let (_, obs_w) = observe_fixed(&y, s, SampleMode::WithReplacement, child_seed(ts, "arm-with", 0))?;
            let (_, obs_wo) =
                observe_fixed(&y, s, SampleMode::WithoutReplacement, child_seed(ts, "arm-without", 0))?;
            budget.attempts += 2;
            let fit_w = fit_estimator(cfg, &obs_w, a, Loss::Squared, &sc);
            let fit_wo = fit_estimator(cfg, &obs_wo, a, Loss::Squared, &sc);
            match (fit_w, fit_wo) {
                (Ok(fw), Ok(fwo)) => {
                    let err_w = y.sub(&fw.estimate)?.frobenius_norm().powi(2) / nm;
                    let err_wo = y.sub(&fwo.estimate)?.frobenius_norm().powi(2) / nm;
                    let diff = err_wo - err_w;
                    rows.push(make_row(cfg, s, t, "error_diff_wo_minus_w", diff, ts));
                    diffs.push(diff);
                    errs_w.push(err_w);
                    errs_wo.push(err_wo);
                }
                (w, wo) => {
                    budget.failures += usize::from(w.is_err()) + usize::from(wo.is_err());
                }
            }
        }
        per_s_diff.push((s, diffs));
        per_s_with.push((s, errs_w));
        per_s_without.push((s, errs_wo));
    }
    budget.check()?;

    let mut aggregates = aggregate("error_diff_wo_minus_w", &per_s_diff);
    aggregates.extend(aggregate("error_with", &per_s_with));
    aggregates.extend(aggregate("error_without", &per_s_without));

    let mut assertions = Vec::new();
    let mut bad = Vec::new();
    for agg in aggregates.iter().filter(|a| a.metric == "error_diff_wo_minus_w") {
        if agg.mean > 2.0 * agg.std_error {
            bad.push(format!(
                "s = {}: without-replacement worse by {:.4e} (2·paired-SE gate {:.4e})",
                agg.s,
                agg.mean,
                2.0 * agg.std_error
            ));
        }
    }
    assertions.push(assert_outcome(
        "without_replacement_no_worse_within_2se",
        bad.is_empty(),
        if bad.is_empty() { "holds at every s".to_string() } else { bad.join("; ") },
    ));

    // Link the exact tiny-universe reduction into the appendix.
    let mut appendix = Vec::new();
    let tiny_y = Mat::from_rows(&[vec![1.0, -0.5, 0.25], vec![0.0, 2.0, -1.0]])?;
    let tiny_class = vec![
        Mat::zeros(2, 3)?,
        tiny_y.scale(0.5)?,
        planted_truth(2, 3, 1, child_seed(cfg.seed, "tiny-class", 0))?,
    ];
    let mut tiny_ok = true;
    for s in [2usize, 3] {
        let res = finite_class_gap(&tiny_class, &tiny_y, s, Loss::Abs, GapMode::Exact, 0)?;
        tiny_ok &= res.expectation_ordered && res.all_exceedances_hold;
        appendix.push(format!(
            "exact tiny-universe check (s = {s}): E_wo = {:.6} ≤ E_w = {:.6}; {} exceedance \
             thresholds all within the 4s factor: {}",
            res.mean_without,
            res.mean_with,
            res.exceedance.len(),
            res.all_exceedances_hold
        ));
    }
    assertions.push(assert_outcome(
        "exact_tiny_universe_reduction",
        tiny_ok,
        "enumerated 6-cell universe satisfies both reduction inequalities".to_string(),
    ));

    rows.sort_by_key(|r| (r.s, r.trial));
    Ok(ExperimentReport {
        config: cfg.clone(),
        claim: "sampling without replacement is at least as good as sampling with replacement \
                for the same budget on a fixed target"
            .to_string(),
        constraint_used: constraint_echo(cfg, a),
        rows,
        aggregates,
        slope: None,
        assertions,
        appendix,
        estimator_failures: budget.failures,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parse_defaults_and_overrides() {
        let cfg = parse_config(
            "# comment\nscenario = scaling-l1\nn = 12\nm = 12\ns_grid = 40, 80, 160\ntrials = 3\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::ScalingL1);
        assert_eq!((cfg.n, cfg.m, cfg.r), (12, 12, 2));
        assert_eq!(cfg.s_grid, vec![40, 80, 160]);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.seed, 7);
        // Scenario defaults survive for keys not set.
        assert_eq!(cfg.noise, NoiseKind::Adversarial);
        assert_eq!(cfg.sigma, 0.5);

        let mut cfg = cfg;
        cfg.apply_override("noise=gaussian").unwrap();
        cfg.apply_override("sigma = 0.25").unwrap();
        assert_eq!(cfg.noise, NoiseKind::Gaussian);
        assert_eq!(cfg.sigma, 0.25);
        assert!(cfg.apply_override("bogus=1").is_err());
        assert!(cfg.apply_override("no-equals").is_err());
    }

    #[test]
    fn config_validation_rejects_malformed_grids() {
        let mut cfg = ScenarioConfig::defaults_for(Scenario::ScalingL2);
        cfg.validate().unwrap();
        cfg.s_grid = vec![100, 100];
        assert!(cfg.validate().is_err());
        cfg.s_grid = vec![200, 100];
        assert!(cfg.validate().is_err());
        cfg.s_grid = vec![];
        assert!(cfg.validate().is_err());
        cfg.s_grid = vec![100];
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.r = 0;
        assert!(cfg.validate().is_err());
        cfg.r = 2;
        cfg.sigma = f64::NAN;
        assert!(cfg.validate().is_err());

        // Without-replacement scenarios must fit the grid.
        let mut cfg = ScenarioConfig::defaults_for(Scenario::SpikyCounterexample);
        cfg.s_grid = vec![cfg.n * cfg.m + 1];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_scenario_key_is_rejected() {
        assert!(parse_config("n = 10\n").is_err());
        assert!(parse_config("scenario = no-such\n").is_err());
        assert!(parse_config("scenario scaling-l1\n").is_err());
    }

    #[test]
    fn slope_fit_recovers_exact_power_laws() {
        let grid: Vec<f64> = vec![100.0, 200.0, 400.0, 800.0, 1600.0];
        let inv: Vec<(f64, f64)> = grid.iter().map(|&s| (s, 3.7 / s)).collect();
        let fit = fit_slope(&inv, 0.0).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12, "slope {}", fit.slope);
        assert!(fit.std_error < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);

        let half: Vec<(f64, f64)> = grid.iter().map(|&s| (s, 0.8 / s.sqrt())).collect();
        let fit = fit_slope(&half, 0.0).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_on_the_cubed_log_curve() {
        // error = c·(ln s)³/s on a geometric grid spanning [10², 10⁴]: the
        // local exponent −1 + 3/ln s runs from −0.35 to −0.67 across the
        // window, and the least-squares aggregate lands near −0.55.
        let points: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let s = 100.0 * 10.0_f64.powf(i as f64 / 4.0);
                (s, 2.0 * s.ln().powi(3) / s)
            })
            .collect();
        let fit = fit_slope(&points, 0.0).unwrap();
        assert!(
            fit.slope > -0.62 && fit.slope < -0.48,
            "logarithmic-factor slope {} escaped its window",
            fit.slope
        );
        assert!(fit.slope > -1.0 && fit.slope < -0.35);
    }

    #[test]
    fn slope_fit_floor_filter_and_degeneracy() {
        // Two of five points sit below the floor → still 3 usable.
        let points =
            vec![(10.0, 1e-12), (20.0, 1e-12), (40.0, 0.4), (80.0, 0.2), (160.0, 0.1)];
        let fit = fit_slope(&points, 1e-8).unwrap();
        assert_eq!(fit.points_used, 3);
        assert!((fit.slope + 1.0).abs() < 1e-9);

        // Only two usable → explicit degenerate-fit error.
        let err = fit_slope(&points[..4], 1e-1).unwrap_err();
        assert!(err.to_string().contains("degenerate slope fit"));
    }

    #[test]
    fn planted_truth_is_feasible_for_the_default_radii() {
        let m = planted_truth(20, 15, 3, 99).unwrap();
        assert!(m.max_abs() <= 1.0 + 1e-12);
        let tn = trace_norm(&m).unwrap();
        assert!(tn <= (3.0 * 20.0 * 15.0f64).sqrt() + 1e-9);
    }

    #[test]
    fn adversarial_noise_is_fixed_across_trials() {
        let mut cfg = ScenarioConfig::defaults_for(Scenario::ScalingL1);
        cfg.n = 6;
        cfg.m = 6;
        let z1 = materialize_noise(&cfg, 111).unwrap();
        let z2 = materialize_noise(&cfg, 222).unwrap();
        assert_eq!(z1.entries(), z2.entries());
        assert!(z1.entries().iter().all(|&e| e.abs() == cfg.sigma));

        cfg.noise = NoiseKind::Gaussian;
        let g1 = materialize_noise(&cfg, 111).unwrap();
        let g2 = materialize_noise(&cfg, 222).unwrap();
        assert_ne!(g1.entries(), g2.entries());
    }

    #[test]
    fn csv_rows_use_the_stable_column_order() {
        let dir = std::env::temp_dir().join("lowrank-harness-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.csv");
        let rows = vec![MetricRow {
            scenario: "scaling-l1".into(),
            n: 4,
            m: 5,
            r: 1,
            s: 10,
            trial: 0,
            metric: "excess_l1".into(),
            value: 0.125,
            seed: 42,
        }];
        write_rows_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "scenario,n,m,r,s,trial,metric,value,seed\nscaling-l1,4,5,1,10,0,excess_l1,0.125,42\n"
        );
        std::fs::remove_file(&path).ok();
    }
}
