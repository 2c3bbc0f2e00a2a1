//! Finite-class generalization-gap machinery: exact enumeration of tiny
//! sampling universes and Monte-Carlo estimation at larger sizes.
//!
//! For a finite class of matrices and a fixed target `Y`, the object of
//! interest is the supremum generalization gap
//!
//! ```text
//!   gap(S) = sup_{X ∈ class} [ L(X) − L̂_S(X) ] ,
//! ```
//!
//! where `L(X)` is the full-matrix average loss and
//! `L̂_S(X) = (1/s)·Σ_t ℓ(X_{i_t j_t}, y_t)` is the empirical average over
//! the sample (repetitions counted). Three reduction inequalities between
//! sampling models are validated here, all of them theorems — any observed
//! violation in exact mode is a bug, never noise:
//!
//! * **Expectation order**: `E_wo[gap] ≤ E_w[gap]` — sampling without
//!   replacement is at least as good as sampling with replacement.
//! * **Exceedance transfer**: `P_wo(gap ≥ c) ≤ 4s·P_w(gap ≥ c)` for every
//!   real threshold `c` (stated for any monotone transform of `L`; the
//!   identity transform is used throughout).
//! * **Independent-noise variant**: when each with-replacement observation
//!   re-draws its noise independently, and `s ≤ (K+1)/e·(nm)^(1−1/(K+1))`,
//!   then `P_wo(gap ≥ c) ≤ 4K·P_w(gap ≥ c/(2K))`.
//!
//! Exact mode enumerates the **ordered**-sample space — all `(nm)^s` index
//! tuples with replacement, all `nm·(nm−1)⋯(nm−s+1)` tuples without — so
//! probabilities are integer counts over a uniform space and the exceedance
//! comparisons are exact integer cross-multiplications, free of rounding.
//! Both step functions `c ↦ P(gap ≥ c)` change only at achieved gap values,
//! so checking every achieved value (from either space) covers all real
//! thresholds.
//!
//! The proof device behind the reductions — rewriting a multiplicity vector
//! `N = (N₁, …, N_r, 0, …)` by spreading its top-multiplicity positions
//! into singletons or dropping them — is exposed as the pure count
//! transforms [`spread_top_multiplicity`] / [`drop_top_multiplicity`], and
//! the intermediate "each position at most `r` times" sampling law is
//! spot-checked by [`capped_multiplicity_gap_mean`].

use crate::error::{Error, Result};
use crate::estimators::Loss;
use crate::rademacher::mean_and_se;
use crate::rng::child_seed;
use crate::sampling::{
    observe, sample_indices, IndexSample, MultiplicityVector, NoiseModel, ObservationSemantics,
    SampleMode,
};
use crate::Mat;
use num_rational::Ratio;

/// Largest grid (`n·m`) enumerable in exact mode.
pub const EXACT_MAX_CELLS: usize = 9;
/// Largest sample size enumerable in exact mode.
pub const EXACT_MAX_SAMPLE: usize = 4;
/// Cap on enumerated outcomes (index tuples × noise combinations).
const EXACT_MAX_OUTCOMES: u128 = 2_000_000;

/// How a gap computation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    /// Full enumeration of the ordered-sample space (and, for the
    /// independent-noise check, the noise outcome space).
    Exact,
    /// Monte Carlo over `trials` seeded samples per sampling model.
    MonteCarlo { trials: usize },
}

/// One exceedance threshold row: integer counts of `gap ≥ threshold` under
/// both sampling models over uniform outcome spaces.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExceedanceRow {
    pub threshold: f64,
    pub with_count: u64,
    pub with_total: u64,
    pub without_count: u64,
    pub without_total: u64,
    /// `P_wo(gap ≥ c) ≤ 4s·P_w(gap ≥ c)`, decided by exact integer
    /// cross-multiplication.
    pub holds: bool,
}

impl ExceedanceRow {
    /// `P_w(gap ≥ threshold)` as an exact reduced rational.
    pub fn prob_with(&self) -> Ratio<u64> {
        Ratio::new(self.with_count, self.with_total)
    }

    /// `P_wo(gap ≥ threshold)` as an exact reduced rational.
    pub fn prob_without(&self) -> Ratio<u64> {
        Ratio::new(self.without_count, self.without_total)
    }
}

/// Result of a finite-class gap comparison between sampling models.
#[derive(Debug, Clone)]
pub struct FiniteClassGapResult {
    /// Echo of the class the suprema ranged over.
    pub class: Vec<Mat>,
    pub s: usize,
    pub loss: Loss,
    pub exact: bool,
    /// `E[gap]` under with-replacement sampling (exact mode: the exact mean
    /// over the ordered-sample space; standard error 0).
    pub mean_with: f64,
    pub se_with: f64,
    pub mean_without: f64,
    pub se_without: f64,
    /// Whether `mean_without ≤ mean_with` up to summation rounding
    /// (`1e-12` relative).
    pub expectation_ordered: bool,
    /// Exceedance comparison at every achieved gap value; empty in
    /// Monte-Carlo mode.
    pub exceedance: Vec<ExceedanceRow>,
    /// All exceedance rows hold (vacuously true in Monte-Carlo mode).
    pub all_exceedances_hold: bool,
    pub outcomes_with: u64,
    pub outcomes_without: u64,
}

fn check_gap_loss(loss: Loss) -> Result<()> {
    match loss {
        Loss::Abs | Loss::Squared => Ok(()),
        Loss::Huber { .. } => Err(Error::Parameter(
            "gap comparisons are defined for the absolute and squared losses only".into(),
        )),
    }
}

fn check_class(class: &[Mat], y: &Mat) -> Result<()> {
    if class.is_empty() {
        return Err(Error::Parameter("matrix class must be non-empty".into()));
    }
    for (idx, x) in class.iter().enumerate() {
        if x.rows() != y.rows() || x.cols() != y.cols() {
            return Err(Error::Dimension(format!(
                "class member {idx} is {}×{}, target is {}×{}",
                x.rows(),
                x.cols(),
                y.rows(),
                y.cols()
            )));
        }
    }
    Ok(())
}

/// Full-matrix average loss `(1/nm)·Σ_ij ℓ(X_ij, Y_ij)`.
fn population_loss(x: &Mat, y: &Mat, loss: Loss) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            acc += loss.true_loss(x.get(i, j), y.get(i, j));
        }
    }
    acc / (x.rows() * x.cols()) as f64
}

/// `sup_X [pop_X − (1/s)·Σ_t ℓ(X_{i_t j_t}, values_t)]`.
fn sup_gap(
    class: &[Mat],
    pop: &[f64],
    positions: &[(usize, usize)],
    values: &[f64],
    loss: Loss,
) -> f64 {
    let s = positions.len() as f64;
    let mut best = f64::NEG_INFINITY;
    for (x, &lx) in class.iter().zip(pop) {
        let mut emp = 0.0;
        for (&(i, j), &y) in positions.iter().zip(values) {
            emp += loss.true_loss(x.get(i, j), y);
        }
        let gap = lx - emp / s;
        if gap > best {
            best = gap;
        }
    }
    best
}

/// Enumerate every ordered index tuple of length `s` over the `n×m` grid in
/// which no position appears more than `max_mult` times, and hand each to
/// the visitor along with the decoded positions.
fn for_each_tuple(
    n: usize,
    m: usize,
    s: usize,
    max_mult: usize,
    mut visit: impl FnMut(&[(usize, usize)]),
) {
    let cells = n * m;
    let total = (cells as u64).pow(s as u32);
    let mut positions = vec![(0usize, 0usize); s];
    let mut mult = vec![0u8; cells];
    'codes: for code in 0..total {
        let mut rest = code;
        mult.iter_mut().for_each(|c| *c = 0);
        for slot in positions.iter_mut() {
            let lin = (rest % cells as u64) as usize;
            rest /= cells as u64;
            mult[lin] += 1;
            if usize::from(mult[lin]) > max_mult {
                continue 'codes;
            }
            *slot = (lin / m, lin % m);
        }
        visit(&positions);
    }
}

/// Count `values ≥ c` given `values` sorted ascending.
fn count_at_least(sorted: &[f64], c: f64) -> u64 {
    (sorted.len() - sorted.partition_point(|v| *v < c)) as u64
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("gap values are finite"));
    v
}

/// Distinct achieved values across both spaces, ascending.
fn achieved_thresholds(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).expect("gap values are finite"));
    all.dedup();
    all
}

/// Exact integer test `lhs_count/lhs_total ≤ factor·rhs_count/rhs_total`.
fn ratio_le(lhs_count: u64, lhs_total: u64, factor: u64, rhs_count: u64, rhs_total: u64) -> bool {
    (lhs_count as u128) * (rhs_total as u128) <= (factor as u128) * (rhs_count as u128) * (lhs_total as u128)
}

fn check_exact_size(cells: usize, s: usize) -> Result<()> {
    if cells > EXACT_MAX_CELLS || s > EXACT_MAX_SAMPLE {
        return Err(Error::Parameter(format!(
            "exact enumeration is limited to n·m ≤ {EXACT_MAX_CELLS} and \
             s ≤ {EXACT_MAX_SAMPLE}, got n·m = {cells}, s = {s}"
        )));
    }
    if s > cells {
        return Err(Error::Parameter(format!(
            "without-replacement sampling needs s ≤ n·m, got s = {s}, n·m = {cells}"
        )));
    }
    Ok(())
}

/// Compare the supremum generalization gap under with- versus
/// without-replacement sampling of observation positions from the fixed
/// matrix `y` (no noise; a position's value is just its entry).
///
/// Exact mode enumerates the ordered-sample spaces and reports exact means
/// plus the exceedance comparison `P_wo(gap ≥ c) ≤ 4s·P_w(gap ≥ c)` at
/// every achieved threshold. Monte-Carlo mode reports means with standard
/// errors under both models and leaves the exceedance table empty.
pub fn finite_class_gap(
    class: &[Mat],
    y: &Mat,
    s: usize,
    loss: Loss,
    mode: GapMode,
    seed: u64,
) -> Result<FiniteClassGapResult> {
    check_gap_loss(loss)?;
    check_class(class, y)?;
    if s == 0 {
        return Err(Error::Parameter("sample size must be ≥ 1".into()));
    }
    let (n, m) = (y.rows(), y.cols());
    let pop: Vec<f64> = class.iter().map(|x| population_loss(x, y, loss)).collect();

    let gap_of = |positions: &[(usize, usize)]| {
        let values: Vec<f64> = positions.iter().map(|&(i, j)| y.get(i, j)).collect();
        sup_gap(class, &pop, positions, &values, loss)
    };

    match mode {
        GapMode::Exact => {
            check_exact_size(n * m, s)?;
            let mut gaps_w = Vec::new();
            for_each_tuple(n, m, s, s, |positions| gaps_w.push(gap_of(positions)));
            let mut gaps_wo = Vec::new();
            for_each_tuple(n, m, s, 1, |positions| gaps_wo.push(gap_of(positions)));
            Ok(assemble_exact_result(class, s, loss, &gaps_w, &gaps_wo))
        }
        GapMode::MonteCarlo { trials } => {
            if trials == 0 {
                return Err(Error::Parameter("Monte-Carlo trial count must be ≥ 1".into()));
            }
            let mut gaps_w = Vec::with_capacity(trials);
            let mut gaps_wo = Vec::with_capacity(trials);
            for t in 0..trials as u64 {
                let sw = sample_indices(
                    n,
                    m,
                    s,
                    SampleMode::WithReplacement,
                    child_seed(seed, "gap-with", t),
                )?;
                gaps_w.push(gap_of(&sw.pairs));
                let swo = sample_indices(
                    n,
                    m,
                    s,
                    SampleMode::WithoutReplacement,
                    child_seed(seed, "gap-without", t),
                )?;
                gaps_wo.push(gap_of(&swo.pairs));
            }
            let (mean_with, se_with) = mean_and_se(&gaps_w);
            let (mean_without, se_without) = mean_and_se(&gaps_wo);
            Ok(FiniteClassGapResult {
                class: class.to_vec(),
                s,
                loss,
                exact: false,
                mean_with,
                se_with,
                mean_without,
                se_without,
                expectation_ordered: ordered_within_rounding(mean_without, mean_with),
                exceedance: Vec::new(),
                all_exceedances_hold: true,
                outcomes_with: trials as u64,
                outcomes_without: trials as u64,
            })
        }
    }
}

fn ordered_within_rounding(smaller: f64, larger: f64) -> bool {
    smaller <= larger + 1e-12 * larger.abs().max(1.0)
}

fn assemble_exact_result(
    class: &[Mat],
    s: usize,
    loss: Loss,
    gaps_w: &[f64],
    gaps_wo: &[f64],
) -> FiniteClassGapResult {
    let (mean_with, _) = mean_and_se(gaps_w);
    let (mean_without, _) = mean_and_se(gaps_wo);
    let sorted_w = sorted_copy(gaps_w);
    let sorted_wo = sorted_copy(gaps_wo);
    let with_total = gaps_w.len() as u64;
    let without_total = gaps_wo.len() as u64;
    let mut exceedance = Vec::new();
    let mut all_hold = true;
    for &c in &achieved_thresholds(&sorted_w, &sorted_wo) {
        let with_count = count_at_least(&sorted_w, c);
        let without_count = count_at_least(&sorted_wo, c);
        let holds = ratio_le(without_count, without_total, 4 * s as u64, with_count, with_total);
        all_hold &= holds;
        exceedance.push(ExceedanceRow {
            threshold: c,
            with_count,
            with_total,
            without_count,
            without_total,
            holds,
        });
    }
    FiniteClassGapResult {
        class: class.to_vec(),
        s,
        loss,
        exact: true,
        mean_with,
        se_with: 0.0,
        mean_without,
        se_without: 0.0,
        expectation_ordered: ordered_within_rounding(mean_without, mean_with),
        exceedance,
        all_exceedances_hold: all_hold,
        outcomes_with: with_total,
        outcomes_without: without_total,
    }
}

/// Exact mean of the supremum gap under uniform sampling over ordered
/// tuples in which every position appears at most `r` times — the
/// interpolating law between without-replacement (`r = 1`) and unrestricted
/// with-replacement (`r ≥ s`). Returns the mean and the outcome count.
pub fn capped_multiplicity_gap_mean(
    class: &[Mat],
    y: &Mat,
    s: usize,
    loss: Loss,
    r: usize,
) -> Result<(f64, u64)> {
    check_gap_loss(loss)?;
    check_class(class, y)?;
    if s == 0 || r == 0 {
        return Err(Error::Parameter("sample size and multiplicity cap must be ≥ 1".into()));
    }
    let (n, m) = (y.rows(), y.cols());
    check_exact_size(n * m, s)?;
    if r * n * m < s {
        return Err(Error::Parameter(format!(
            "no tuple of length {s} fits {n}×{m} with multiplicity cap {r}"
        )));
    }
    let pop: Vec<f64> = class.iter().map(|x| population_loss(x, y, loss)).collect();
    let mut total = 0.0;
    let mut count = 0u64;
    for_each_tuple(n, m, s, r, |positions| {
        let values: Vec<f64> = positions.iter().map(|&(i, j)| y.get(i, j)).collect();
        total += sup_gap(class, &pop, positions, &values, loss);
        count += 1;
    });
    Ok((total / count as f64, count))
}

/// Spread the top-multiplicity positions of `N = (N₁, …, N_r, 0, …)` into
/// singletons: the derived vector has `N′₁ = N₁ + r·N_r`, keeps
/// `N₂ … N_{r−1}`, and zeroes every index ≥ r. Preserves `Σ i·N_i`.
/// Requires a top multiplicity r ≥ 2 (a flat vector has nothing to spread).
pub fn spread_top_multiplicity(nv: &MultiplicityVector) -> Result<MultiplicityVector> {
    let (r, n_r) = top_multiplicity(nv)?;
    let mut counts = vec![0usize; nv.counts.len()];
    counts[0] = nv.multiplicity(1) + r * n_r;
    for i in 2..r {
        counts[i - 1] = nv.multiplicity(i);
    }
    let out = MultiplicityVector { counts };
    debug_assert_eq!(out.total(), nv.total());
    Ok(out)
}

/// Drop the top-multiplicity positions of `N = (N₁, …, N_r, 0, …)`
/// entirely: keeps `N₁ … N_{r−1}` and zeroes every index ≥ r, so the total
/// becomes `Σ i·N_i − r·N_r`. Requires a top multiplicity r ≥ 2.
pub fn drop_top_multiplicity(nv: &MultiplicityVector) -> Result<MultiplicityVector> {
    let (r, n_r) = top_multiplicity(nv)?;
    let mut counts = vec![0usize; nv.counts.len()];
    for i in 1..r {
        counts[i - 1] = nv.multiplicity(i);
    }
    let out = MultiplicityVector { counts };
    debug_assert_eq!(out.total(), nv.total() - r * n_r);
    Ok(out)
}

fn top_multiplicity(nv: &MultiplicityVector) -> Result<(usize, usize)> {
    let r = nv
        .counts
        .iter()
        .rposition(|&c| c > 0)
        .map(|p| p + 1)
        .ok_or_else(|| Error::Parameter("multiplicity vector is empty".into()))?;
    if r < 2 {
        return Err(Error::Parameter(
            "multiplicity transforms need a top multiplicity ≥ 2; the vector is already flat"
                .into(),
        ));
    }
    Ok((r, nv.multiplicity(r)))
}

/// One threshold row of the independent-noise exceedance comparison.
///
/// The right side's threshold shrink `c/(2K)` is realized by comparing the
/// pre-scaled values `2K·gap` against `c`, which keeps both sides' counting
/// on the same float grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IndNoiseThresholdRow {
    pub threshold: f64,
    pub without_count: u64,
    pub without_total: u64,
    /// Count of with-replacement outcomes with `2K·gap ≥ threshold`.
    pub with_scaled_count: u64,
    pub with_total: u64,
    /// `P_wo(gap ≥ c) ≤ 4K·P_w(gap ≥ c/(2K))`, exact integer
    /// cross-multiplication.
    pub holds: bool,
    /// `4K·P_w(gap ≥ c/(2K)) − P_wo(gap ≥ c)` as floats (how much slack the
    /// inequality has at this threshold).
    pub margin: f64,
}

/// Report of the independent-noise sampling-model comparison.
///
/// This is a **consistency check, not a proof**: exact mode verifies the
/// inequality family over a fully enumerated tiny universe, Monte-Carlo
/// mode merely reports empirical frequencies with their margins.
#[derive(Debug, Clone)]
pub struct IndNoiseGapReport {
    pub k: u32,
    /// The sample-size cap `(K+1)/e·(nm)^(1−1/(K+1))` under which the
    /// reduction is proved.
    pub cap: f64,
    pub cap_satisfied: bool,
    pub exact: bool,
    /// Average noise variance `σ² = (1/nm)·Σ_ij E[Z_ij²]`.
    pub sigma2: f64,
    pub mean_gap_with: f64,
    pub mean_gap_without: f64,
    pub rows: Vec<IndNoiseThresholdRow>,
    pub all_hold: bool,
    pub outcomes_with: u64,
    pub outcomes_without: u64,
}

/// Average noise variance per entry; rejects noise that is not independent
/// and mean-zero.
fn noise_variance(noise: &NoiseModel, n: usize, m: usize) -> Result<f64> {
    Ok(match noise {
        NoiseModel::None => 0.0,
        NoiseModel::IidGaussian { sigma } => sigma * sigma,
        NoiseModel::IidUniform { half_width } => half_width * half_width / 3.0,
        NoiseModel::LocationDependent { table } => {
            let mut acc = 0.0;
            for row in table {
                for d in row {
                    acc += d.variance();
                }
            }
            acc / (n * m) as f64
        }
        NoiseModel::Adversarial { .. } => {
            return Err(Error::Parameter(
                "the independent-noise comparison requires independent mean-zero noise; \
                 a fixed noise matrix is neither"
                    .into(),
            ));
        }
    })
}

/// Per-entry noise supports for exact enumeration: available when the noise
/// is absent (trivial support `{0}`) or location-dependent with equal-mass
/// distributions of one common support size.
fn exact_noise_supports(noise: &NoiseModel, n: usize, m: usize) -> Option<Vec<Vec<f64>>> {
    match noise {
        NoiseModel::None => Some(vec![vec![0.0]; n * m]),
        NoiseModel::LocationDependent { table } => {
            let d = table[0][0].values().len();
            let mut supports = Vec::with_capacity(n * m);
            for row in table {
                for dist in row {
                    if dist.values().len() != d || !dist.is_equal_mass() {
                        return None;
                    }
                    supports.push(dist.values().to_vec());
                }
            }
            Some(supports)
        }
        _ => None,
    }
}

/// Compare the supremum gap under the two sampling models when noise is
/// **independent per observation**: the with-replacement arm re-draws noise
/// on every observation (repeated positions average their noise down), the
/// without-replacement arm observes each of its distinct positions once.
///
/// The loss is squared and the population loss is the expected squared
/// error of a fresh noisy observation, `L(X) = σ² + (1/nm)·‖M − X‖_F²`; the
/// monotone transform applied to `L` is the identity. Exact mode needs the
/// tiny-universe limits plus exactly enumerable noise (none, or equal-mass
/// per-entry supports of a common size). The inequality family checked at
/// threshold `c` is `P_wo(gap ≥ c) ≤ 4K·P_w(gap ≥ c/(2K))`.
///
/// `strict_cap` controls what happens when `s` exceeds the cap
/// `(K+1)/e·(nm)^(1−1/(K+1))`: an error naming the cap (strict), or a
/// report annotated `cap_satisfied = false` (lenient — useful for observing
/// the inequality empirically outside its proved regime).
#[allow(clippy::too_many_arguments)]
pub fn ind_noise_gap_check(
    class: &[Mat],
    m_true: &Mat,
    noise: &NoiseModel,
    s: usize,
    k: u32,
    mode: GapMode,
    seed: u64,
    strict_cap: bool,
) -> Result<IndNoiseGapReport> {
    check_class(class, m_true)?;
    if s == 0 {
        return Err(Error::Parameter("sample size must be ≥ 1".into()));
    }
    if k == 0 {
        return Err(Error::Parameter("the multiplicity constant K must be ≥ 1".into()));
    }
    let (n, m) = (m_true.rows(), m_true.cols());
    let cells = (n * m) as f64;
    let kf = k as f64;
    let cap = (kf + 1.0) / std::f64::consts::E * cells.powf(1.0 - 1.0 / (kf + 1.0));
    let cap_satisfied = (s as f64) <= cap;
    if strict_cap && !cap_satisfied {
        return Err(Error::Parameter(format!(
            "sample size s = {s} exceeds the reduction cap \
             (K+1)/e·(nm)^(1−1/(K+1)) = {cap:.4} at K = {k}"
        )));
    }
    let sigma2 = noise_variance(noise, n, m)?;
    // Population loss: expected squared error of a fresh noisy observation.
    let pop: Vec<f64> = class
        .iter()
        .map(|x| {
            let diff = x.sub(m_true).expect("shapes checked");
            sigma2 + diff.frobenius_norm().powi(2) / cells
        })
        .collect();

    let (gaps_w, gaps_wo, exact) = match mode {
        GapMode::Exact => {
            check_exact_size(n * m, s)?;
            let supports = exact_noise_supports(noise, n, m).ok_or_else(|| {
                Error::Parameter(
                    "exact mode needs exactly enumerable noise: none, or equal-mass \
                     per-entry supports of a common size"
                        .into(),
                )
            })?;
            let d = supports[0].len();
            let tuples_w = (n * m).pow(s as u32) as u128;
            let combos = (d as u128).pow(s as u32);
            if tuples_w * combos > EXACT_MAX_OUTCOMES {
                return Err(Error::Parameter(format!(
                    "exact enumeration would visit {} outcomes (cap {EXACT_MAX_OUTCOMES})",
                    tuples_w * combos
                )));
            }
            let mut gaps_w = Vec::new();
            for_each_tuple(n, m, s, s, |positions| {
                enumerate_noise_outcomes(class, &pop, m_true, positions, &supports, d, &mut gaps_w);
            });
            let mut gaps_wo = Vec::new();
            for_each_tuple(n, m, s, 1, |positions| {
                enumerate_noise_outcomes(class, &pop, m_true, positions, &supports, d, &mut gaps_wo);
            });
            (gaps_w, gaps_wo, true)
        }
        GapMode::MonteCarlo { trials } => {
            if trials == 0 {
                return Err(Error::Parameter("Monte-Carlo trial count must be ≥ 1".into()));
            }
            let mut gaps_w = Vec::with_capacity(trials);
            let mut gaps_wo = Vec::with_capacity(trials);
            for t in 0..trials as u64 {
                let sw = sample_indices(
                    n,
                    m,
                    s,
                    SampleMode::WithReplacement,
                    child_seed(seed, "ind-with-sample", t),
                )?;
                let obs = observe(
                    m_true,
                    &sw,
                    noise,
                    ObservationSemantics::PerObservation,
                    child_seed(seed, "ind-with-noise", t),
                )?;
                gaps_w.push(gap_of_records(class, &pop, &obs.records));
                let swo = sample_indices(
                    n,
                    m,
                    s,
                    SampleMode::WithoutReplacement,
                    child_seed(seed, "ind-without-sample", t),
                )?;
                let obs = observe(
                    m_true,
                    &swo,
                    noise,
                    ObservationSemantics::PerEntry,
                    child_seed(seed, "ind-without-noise", t),
                )?;
                gaps_wo.push(gap_of_records(class, &pop, &obs.records));
            }
            (gaps_w, gaps_wo, false)
        }
    };

    let (mean_gap_with, _) = mean_and_se(&gaps_w);
    let (mean_gap_without, _) = mean_and_se(&gaps_wo);
    let scale = 2.0 * kf;
    let scaled_w: Vec<f64> = gaps_w.iter().map(|g| scale * g).collect();
    let sorted_scaled_w = sorted_copy(&scaled_w);
    let sorted_wo = sorted_copy(&gaps_wo);
    let with_total = gaps_w.len() as u64;
    let without_total = gaps_wo.len() as u64;
    let mut rows = Vec::new();
    let mut all_hold = true;
    for &c in &achieved_thresholds(&sorted_wo, &sorted_scaled_w) {
        let without_count = count_at_least(&sorted_wo, c);
        let with_scaled_count = count_at_least(&sorted_scaled_w, c);
        let holds = ratio_le(without_count, without_total, 4 * k as u64, with_scaled_count, with_total);
        all_hold &= holds;
        rows.push(IndNoiseThresholdRow {
            threshold: c,
            without_count,
            without_total,
            with_scaled_count,
            with_total,
            holds,
            margin: 4.0 * kf * (with_scaled_count as f64 / with_total as f64)
                - without_count as f64 / without_total as f64,
        });
    }
    Ok(IndNoiseGapReport {
        k,
        cap,
        cap_satisfied,
        exact,
        sigma2,
        mean_gap_with,
        mean_gap_without,
        rows,
        all_hold,
        outcomes_with: with_total,
        outcomes_without: without_total,
    })
}

fn gap_of_records(
    class: &[Mat],
    pop: &[f64],
    records: &[crate::sampling::ObservationRecord],
) -> f64 {
    let positions: Vec<(usize, usize)> = records.iter().map(|r| (r.i, r.j)).collect();
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    sup_gap(class, &pop.to_vec(), &positions, &values, Loss::Squared)
}

fn enumerate_noise_outcomes(
    class: &[Mat],
    pop: &[f64],
    m_true: &Mat,
    positions: &[(usize, usize)],
    supports: &[Vec<f64>],
    d: usize,
    out: &mut Vec<f64>,
) {
    let s = positions.len();
    let m = m_true.cols();
    let combos = (d as u64).pow(s as u32);
    let mut values = vec![0.0; s];
    for combo in 0..combos {
        let mut rest = combo;
        for (t, &(i, j)) in positions.iter().enumerate() {
            let pick = (rest % d as u64) as usize;
            rest /= d as u64;
            values[t] = m_true.get(i, j) + supports[i * m + j][pick];
        }
        out.push(sup_gap(class, pop, positions, &values, Loss::Squared));
    }
}

/// Report of the finite-class excess-risk comparison: the Monte-Carlo
/// average risk of the empirical minimizer against the best fixed member
/// plus twice the class's expected Rademacher complexity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FiniteClassErmReport {
    /// `E_S[L(X̂(S))]` with `X̂(S)` the class member minimizing the
    /// empirical absolute loss (ties break to the lowest index).
    pub mean_risk: f64,
    pub se_risk: f64,
    /// `min_X L(X)` over the class.
    pub best_member_risk: f64,
    /// Monte-Carlo estimate of the class's expected Rademacher complexity
    /// `E_{S,ξ}[sup_X (1/s)·Σ_t ξ_t X_{i_t j_t}]`.
    pub rad_mean: f64,
    pub rad_se: f64,
    /// `mean_risk ≤ best_member_risk + 2·rad_mean + 3·√(se_risk² + (2·rad_se)²)`.
    pub holds_within_three_se: bool,
    pub trials: usize,
}

/// Validate the finite-class excess-risk bound
/// `E_S[L(X̂)] ≤ L(M) + 2·R_s(class)` by Monte Carlo with the absolute
/// loss: `trials` with-replacement samples drive both the risk of the
/// empirical minimizer and (on independent samples, `mc_per_trial` sign
/// draws each) the complexity estimate. The verdict allows three joint
/// standard errors of slack for the two Monte-Carlo averages.
pub fn finite_class_erm_check(
    class: &[Mat],
    y: &Mat,
    s: usize,
    trials: usize,
    mc_per_trial: usize,
    seed: u64,
) -> Result<FiniteClassErmReport> {
    check_class(class, y)?;
    if s == 0 || trials == 0 || mc_per_trial == 0 {
        return Err(Error::Parameter(
            "sample size, trial count, and sign draws must all be ≥ 1".into(),
        ));
    }
    let (n, m) = (y.rows(), y.cols());
    let pop: Vec<f64> = class.iter().map(|x| population_loss(x, y, Loss::Abs)).collect();
    let best_member_risk = pop.iter().copied().fold(f64::INFINITY, f64::min);

    let mut risks = Vec::with_capacity(trials);
    let mut rad_trials = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let sample = sample_indices(
            n,
            m,
            s,
            SampleMode::WithReplacement,
            child_seed(seed, "erm-risk-sample", t),
        )?;
        let mut best_emp = f64::INFINITY;
        let mut best_idx = 0;
        for (idx, x) in class.iter().enumerate() {
            let emp: f64 = sample
                .pairs
                .iter()
                .map(|&(i, j)| (x.get(i, j) - y.get(i, j)).abs())
                .sum::<f64>()
                / s as f64;
            if emp < best_emp {
                best_emp = emp;
                best_idx = idx;
            }
        }
        risks.push(pop[best_idx]);

        let rad_sample = sample_indices(
            n,
            m,
            s,
            SampleMode::WithReplacement,
            child_seed(seed, "erm-rad-sample", t),
        )?;
        rad_trials.push(class_rad_mean(class, &rad_sample, mc_per_trial, child_seed(seed, "erm-rad-signs", t)));
    }
    let (mean_risk, se_risk) = mean_and_se(&risks);
    let (rad_mean, rad_se) = mean_and_se(&rad_trials);
    let joint_se = (se_risk * se_risk + 4.0 * rad_se * rad_se).sqrt();
    Ok(FiniteClassErmReport {
        mean_risk,
        se_risk,
        best_member_risk,
        rad_mean,
        rad_se,
        holds_within_three_se: mean_risk <= best_member_risk + 2.0 * rad_mean + 3.0 * joint_se,
        trials,
    })
}

/// `E_ξ[sup_X (1/s)·Σ_t ξ_t X_{i_t j_t}]` over `draws` sign vectors on one
/// fixed sample.
fn class_rad_mean(class: &[Mat], sample: &IndexSample, draws: usize, seed: u64) -> f64 {
    use rand::Rng as _;
    let mut rng = crate::rng::rng_from(seed);
    let s = sample.len();
    let mut total = 0.0;
    let mut xi = vec![0.0; s];
    for _ in 0..draws {
        for x in xi.iter_mut() {
            *x = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let mut best = f64::NEG_INFINITY;
        for x in class {
            let val: f64 = sample
                .pairs
                .iter()
                .zip(&xi)
                .map(|(&(i, j), &sign)| sign * x.get(i, j))
                .sum::<f64>()
                / s as f64;
            best = best.max(val);
        }
        total += best;
    }
    total / draws as f64
}
