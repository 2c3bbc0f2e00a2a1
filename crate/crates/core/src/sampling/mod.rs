//! Observation-generation machinery: index sampling with and without
//! replacement, multiplicity vectors, and the noise models with per-entry
//! versus per-observation semantics.
//!
//! Everything here is deterministic given a seed. Derived randomness always
//! goes through [`crate::rng::child_seed`] with a role tag, so the same
//! logical quantity (the noise attached to entry `(i,j)`, say) is stable no
//! matter how many other draws happen around it.
//!
//! The two observation semantics differ only on repeated positions:
//!
//! * **per-entry** — a position has one noisy value; sampling it again
//!   returns the same value (noise is a property of the entry).
//! * **per-observation** — every draw of a position receives fresh
//!   independent noise (noise is a property of the measurement).
//!
//! The distinction drives the replacement reductions: repeated positions
//! carry no extra information per-entry, but average down per-observation.

pub mod io;

pub use io::{read_observations, read_observations_file, write_observations, write_observations_file};

use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from, Rng};
use crate::Mat;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use std::collections::HashMap;

/// Whether repeated index draws are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SampleMode {
    WithReplacement,
    WithoutReplacement,
}

/// Whether a repeated position re-observes the same noisy value or draws
/// fresh noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ObservationSemantics {
    PerEntry,
    PerObservation,
}

impl ObservationSemantics {
    pub fn as_str(self) -> &'static str {
        match self {
            ObservationSemantics::PerEntry => "per_entry",
            ObservationSemantics::PerObservation => "per_observation",
        }
    }

    pub fn parse(word: &str) -> Result<Self> {
        match word {
            "per_entry" => Ok(ObservationSemantics::PerEntry),
            "per_observation" => Ok(ObservationSemantics::PerObservation),
            other => Err(Error::Parse(format!("unknown observation semantics '{other}'"))),
        }
    }
}

/// An ordered sequence of sampled index pairs on an `n × m` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSample {
    pub n: usize,
    pub m: usize,
    pub pairs: Vec<(usize, usize)>,
    pub mode: SampleMode,
    pub seed: u64,
}

impl IndexSample {
    /// Build a sample from explicit pairs, enforcing the invariants: indices
    /// in range, and distinctness under `WithoutReplacement`.
    pub fn new(
        n: usize,
        m: usize,
        pairs: Vec<(usize, usize)>,
        mode: SampleMode,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Parameter("index grid must be non-empty".into()));
        }
        if pairs.is_empty() {
            return Err(Error::Parameter("sample must contain at least one pair".into()));
        }
        for &(i, j) in &pairs {
            if i >= n || j >= m {
                return Err(Error::Parameter(format!(
                    "index pair ({i}, {j}) outside {n}×{m} grid"
                )));
            }
        }
        if mode == SampleMode::WithoutReplacement {
            if pairs.len() > n * m {
                return Err(Error::Parameter(format!(
                    "without-replacement sample of size {} exceeds grid size {}",
                    pairs.len(),
                    n * m
                )));
            }
            let mut seen = vec![false; n * m];
            for &(i, j) in &pairs {
                let lin = i * m + j;
                if seen[lin] {
                    return Err(Error::Parameter(format!(
                        "without-replacement sample repeats position ({i}, {j})"
                    )));
                }
                seen[lin] = true;
            }
        }
        Ok(IndexSample { n, m, pairs, mode, seed })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Draw `s` index pairs uniformly from an `n × m` grid.
///
/// With replacement: `s` i.i.d. uniform positions. Without replacement: a
/// uniformly random ordered `s`-arrangement via partial Fisher–Yates over a
/// virtual (sparse) index array, so the cost is `O(s)` even when `s ≪ nm`.
pub fn sample_indices(
    n: usize,
    m: usize,
    s: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<IndexSample> {
    if n == 0 || m == 0 {
        return Err(Error::Parameter("index grid must be non-empty".into()));
    }
    if s == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let total = n
        .checked_mul(m)
        .ok_or_else(|| Error::Parameter("grid size overflows".into()))?;
    let mut rng = rng_from(child_seed(seed, "sample-indices", 0));
    let pairs = match mode {
        SampleMode::WithReplacement => (0..s)
            .map(|_| {
                let lin = rng.random_range(0..total);
                (lin / m, lin % m)
            })
            .collect(),
        SampleMode::WithoutReplacement => {
            if s > total {
                return Err(Error::Parameter(format!(
                    "cannot draw {s} distinct positions from a grid of {total}"
                )));
            }
            // Partial Fisher–Yates on the virtual array 0..total: position t
            // swaps with a uniform u ∈ [t, total); only touched slots are
            // materialized.
            let mut touched: HashMap<usize, usize> = HashMap::new();
            let mut out = Vec::with_capacity(s);
            for t in 0..s {
                let u = rng.random_range(t..total);
                let chosen = *touched.get(&u).unwrap_or(&u);
                let at_t = *touched.get(&t).unwrap_or(&t);
                touched.insert(u, at_t);
                out.push((chosen / m, chosen % m));
            }
            out
        }
    };
    IndexSample::new(n, m, pairs, mode, seed)
}

/// The multiplicity vector `(N₁, …, N_s)`: `N_i` counts matrix positions
/// appearing exactly `i` times in the sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityVector {
    pub counts: Vec<usize>,
}

impl MultiplicityVector {
    /// `N_i` (1-indexed, 0 beyond the stored length).
    pub fn multiplicity(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else {
            self.counts.get(i - 1).copied().unwrap_or(0)
        }
    }

    /// `Σ i·N_i` — always the sample size.
    pub fn total(&self) -> usize {
        self.counts
            .iter()
            .enumerate()
            .map(|(idx, &c)| (idx + 1) * c)
            .sum()
    }

    /// Number of distinct positions `Σ N_i`.
    pub fn distinct(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Compute the multiplicity vector of a sample.
pub fn multiplicity_vector(sample: &IndexSample) -> MultiplicityVector {
    let mut per_position: HashMap<(usize, usize), usize> = HashMap::new();
    for &pair in &sample.pairs {
        *per_position.entry(pair).or_insert(0) += 1;
    }
    let s = sample.len();
    let mut counts = vec![0usize; s];
    for &times in per_position.values() {
        counts[times - 1] += 1;
    }
    let mv = MultiplicityVector { counts };
    debug_assert_eq!(mv.total(), s, "Σ i·N_i must equal the sample size");
    mv
}

/// A finite discrete distribution used by location-dependent noise; mean
/// zero is enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::Parameter(
                "discrete distribution needs matching non-empty value/probability lists".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("discrete distribution value".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Parameter("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "probabilities must sum to 1 within 1e-12, got {total}"
            )));
        }
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        if mean.abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "location-dependent noise must be mean-zero within 1e-12, got mean {mean:e}"
            )));
        }
        Ok(DiscreteDistribution { values, probs })
    }

    /// Symmetric two-point distribution `±a` with equal mass.
    pub fn symmetric_pair(a: f64) -> Result<Self> {
        DiscreteDistribution::new(vec![a, -a], vec![0.5, 0.5])
    }

    pub fn draw(&self, rng: &mut Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        *self.values.last().expect("non-empty by construction")
    }

    pub fn variance(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * v * p).sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Whether every outcome carries the same probability mass (within
    /// 1e-12). Equal-mass supports admit exact integer-counting enumeration.
    pub fn is_equal_mass(&self) -> bool {
        let uniform = 1.0 / self.probs.len() as f64;
        self.probs.iter().all(|p| (p - uniform).abs() <= 1e-12)
    }
}

/// The noise attached to observations.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    /// Exact observations.
    None,
    /// I.i.d. centered gaussian with standard deviation `sigma`.
    IidGaussian { sigma: f64 },
    /// I.i.d. uniform on `[-half_width, half_width]`.
    IidUniform { half_width: f64 },
    /// Independent but not identically distributed: one mean-zero discrete
    /// distribution per matrix entry (row-major table).
    LocationDependent { table: Vec<Vec<DiscreteDistribution>> },
    /// A fixed, arbitrary noise matrix added to `M` — expresses biased and
    /// correlated noise. Inherently per-entry.
    Adversarial { z: Mat },
}

impl NoiseModel {
    pub fn iid_gaussian(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::Parameter(format!(
                "gaussian noise sigma must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(NoiseModel::IidGaussian { sigma })
    }

    pub fn iid_uniform(half_width: f64) -> Result<Self> {
        if !half_width.is_finite() || half_width < 0.0 {
            return Err(Error::Parameter(format!(
                "uniform noise half-width must be finite and nonnegative, got {half_width}"
            )));
        }
        Ok(NoiseModel::IidUniform { half_width })
    }

    /// Build location-dependent noise from a rectangular table of per-entry
    /// distributions (each already mean-zero by construction).
    pub fn location_dependent(table: Vec<Vec<DiscreteDistribution>>) -> Result<Self> {
        if table.is_empty() || table[0].is_empty() {
            return Err(Error::Parameter("noise table must be non-empty".into()));
        }
        let width = table[0].len();
        if table.iter().any(|row| row.len() != width) {
            return Err(Error::Parameter("noise table must be rectangular".into()));
        }
        Ok(NoiseModel::LocationDependent { table })
    }

    pub fn adversarial(z: Mat) -> Self {
        NoiseModel::Adversarial { z }
    }

    fn check_shape(&self, n: usize, m: usize) -> Result<()> {
        match self {
            NoiseModel::LocationDependent { table } => {
                if table.len() != n || table[0].len() != m {
                    return Err(Error::Dimension(format!(
                        "noise table is {}×{}, matrix is {n}×{m}",
                        table.len(),
                        table[0].len()
                    )));
                }
            }
            NoiseModel::Adversarial { z } => {
                if z.rows() != n || z.cols() != m {
                    return Err(Error::Dimension(format!(
                        "adversarial noise is {}×{}, matrix is {n}×{m}",
                        z.rows(),
                        z.cols()
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One observed record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationRecord {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// An immutable set of observations of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub n: usize,
    pub m: usize,
    pub semantics: ObservationSemantics,
    pub records: Vec<ObservationRecord>,
    /// How the underlying index sample was drawn; `None` for sets loaded
    /// from files (the file format does not record provenance).
    pub sample_mode: Option<SampleMode>,
    /// Seed the values were generated from; `None` for loaded sets.
    pub seed: Option<u64>,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Generate observations of `M` at the sampled positions under the given
/// noise model and semantics.
///
/// Noise randomness is keyed so the declared semantics hold by construction:
/// per-entry draws derive their stream from the entry's linear index (the
/// same position always re-derives the same value), per-observation draws
/// derive it from the record number. Adversarial noise is a fixed matrix and
/// therefore only meaningful per-entry; combining it with per-observation
/// semantics is rejected.
pub fn observe(
    m: &Mat,
    sample: &IndexSample,
    noise: &NoiseModel,
    semantics: ObservationSemantics,
    seed: u64,
) -> Result<ObservationSet> {
    if sample.n != m.rows() || sample.m != m.cols() {
        return Err(Error::Dimension(format!(
            "sample grid {}×{} does not match matrix {}×{}",
            sample.n,
            sample.m,
            m.rows(),
            m.cols()
        )));
    }
    noise.check_shape(m.rows(), m.cols())?;
    if matches!(noise, NoiseModel::Adversarial { .. })
        && semantics == ObservationSemantics::PerObservation
    {
        return Err(Error::Parameter(
            "adversarial noise is a fixed matrix; per-observation semantics would \
             contradict it"
                .into(),
        ));
    }

    let cols = m.cols();
    let mut records = Vec::with_capacity(sample.len());
    for (t, &(i, j)) in sample.pairs.iter().enumerate() {
        let stream_index = match semantics {
            ObservationSemantics::PerEntry => (i * cols + j) as u64,
            ObservationSemantics::PerObservation => t as u64,
        };
        let tag = match semantics {
            ObservationSemantics::PerEntry => "entry-noise",
            ObservationSemantics::PerObservation => "obs-noise",
        };
        let z = match noise {
            NoiseModel::None => 0.0,
            NoiseModel::IidGaussian { sigma } => {
                let mut rng = rng_from(child_seed(seed, tag, stream_index));
                let g: f64 = StandardNormal.sample(&mut rng);
                sigma * g
            }
            NoiseModel::IidUniform { half_width } => {
                let mut rng = rng_from(child_seed(seed, tag, stream_index));
                let u: f64 = rng.random();
                half_width * (2.0 * u - 1.0)
            }
            NoiseModel::LocationDependent { table } => {
                let mut rng = rng_from(child_seed(seed, tag, stream_index));
                table[i][j].draw(&mut rng)
            }
            NoiseModel::Adversarial { z } => z.get(i, j),
        };
        let value = m.get(i, j) + z;
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("observed value at ({i}, {j})")));
        }
        records.push(ObservationRecord { i, j, value });
    }
    Ok(ObservationSet {
        n: m.rows(),
        m: m.cols(),
        semantics,
        records,
        sample_mode: Some(sample.mode),
        seed: Some(seed),
    })
}

/// Report of the noise-magnitude precondition for squared-loss recovery.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NoisePreconditionReport {
    pub linf: f64,
    /// Lenient threshold `√(r·n/ln n)`.
    pub lenient_threshold: f64,
    /// Strict threshold `√(r·ln n)`.
    pub strict_threshold: f64,
    pub passes_lenient: bool,
    pub passes_strict: bool,
    /// The verdict under the requested strictness.
    pub pass: bool,
}

/// Check `|Z|_∞` against the two noise-magnitude thresholds used by the
/// squared-loss recovery guarantees: the generous `√(r·n/ln n)` and the
/// stricter `√(r·ln n)`. For non-square matrices `n` is the larger
/// dimension.
pub fn noise_precondition_check(z: &Mat, r: usize, strict: bool) -> Result<NoisePreconditionReport> {
    let n = z.rows().max(z.cols());
    if n < 2 {
        return Err(Error::Parameter(
            "noise precondition needs dimension ≥ 2 (ln n must be positive)".into(),
        ));
    }
    if r == 0 {
        return Err(Error::Parameter("rank must be positive".into()));
    }
    let linf = z.max_abs();
    let ln_n = (n as f64).ln();
    let lenient_threshold = (r as f64 * n as f64 / ln_n).sqrt();
    let strict_threshold = (r as f64 * ln_n).sqrt();
    let passes_lenient = linf <= lenient_threshold;
    let passes_strict = linf <= strict_threshold;
    Ok(NoisePreconditionReport {
        linf,
        lenient_threshold,
        strict_threshold,
        passes_lenient,
        passes_strict,
        pass: if strict { passes_strict } else { passes_lenient },
    })
}

/// The spiky low-rank matrix used by the counterexample experiments: the
/// left `n × r` block holds i.i.d. signs scaled to `√(m/r)`, everything else
/// is zero. By construction `rank ≤ r`, the average squared entry is exactly
/// 1, and the maximal squared entry is exactly `m/r`.
pub fn spiky_matrix(n: usize, m: usize, r: usize, seed: u64) -> Result<Mat> {
    if r == 0 || r > m || r > n {
        return Err(Error::Parameter(format!(
            "spiky construction needs 1 ≤ r ≤ min(n, m), got r={r}, n={n}, m={m}"
        )));
    }
    let amp = (m as f64 / r as f64).sqrt();
    let mut rng = rng_from(child_seed(seed, "spiky", 0));
    Mat::from_fn(n, m, |_, j| {
        if j < r {
            if rng.random::<bool>() {
                amp
            } else {
                -amp
            }
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, DEFAULT_RANK_REL_TOL};

    #[test]
    fn full_census_without_replacement_hits_every_position() {
        let s = sample_indices(3, 4, 12, SampleMode::WithoutReplacement, 7).unwrap();
        let mut seen = vec![false; 12];
        for &(i, j) in &s.pairs {
            seen[i * 4 + j] = true;
        }
        assert!(seen.iter().all(|&b| b));
        let mv = multiplicity_vector(&s);
        assert_eq!(mv.multiplicity(1), 12);
        assert_eq!(mv.distinct(), 12);
    }

    #[test]
    fn oversized_without_replacement_rejected() {
        assert!(matches!(
            sample_indices(2, 2, 5, SampleMode::WithoutReplacement, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn multiplicity_of_explicit_pairs() {
        let s = IndexSample::new(
            2,
            2,
            vec![(0, 0), (0, 0), (1, 1)],
            SampleMode::WithReplacement,
            0,
        )
        .unwrap();
        let mv = multiplicity_vector(&s);
        assert_eq!(mv.multiplicity(1), 1);
        assert_eq!(mv.multiplicity(2), 1);
        assert_eq!(mv.multiplicity(3), 0);
        assert_eq!(mv.total(), 3);
    }

    #[test]
    fn index_sample_validation() {
        assert!(IndexSample::new(2, 2, vec![(2, 0)], SampleMode::WithReplacement, 0).is_err());
        assert!(IndexSample::new(
            2,
            2,
            vec![(0, 0), (0, 0)],
            SampleMode::WithoutReplacement,
            0
        )
        .is_err());
    }

    #[test]
    fn noiseless_observation_returns_entries() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = sample_indices(2, 2, 4, SampleMode::WithoutReplacement, 3).unwrap();
        let obs = observe(&m, &s, &NoiseModel::None, ObservationSemantics::PerEntry, 5).unwrap();
        for rec in &obs.records {
            assert_eq!(rec.value, m.get(rec.i, rec.j));
        }
    }

    #[test]
    fn per_entry_repeats_are_identical() {
        let m = Mat::zeros(3, 3).unwrap();
        let pairs = vec![(1, 2), (0, 0), (1, 2), (1, 2), (2, 1), (0, 0)];
        let s = IndexSample::new(3, 3, pairs, SampleMode::WithReplacement, 0).unwrap();
        let noise = NoiseModel::iid_gaussian(1.0).unwrap();
        let obs = observe(&m, &s, &noise, ObservationSemantics::PerEntry, 11).unwrap();
        assert_eq!(obs.records[0].value, obs.records[2].value);
        assert_eq!(obs.records[0].value, obs.records[3].value);
        assert_eq!(obs.records[1].value, obs.records[5].value);
        assert_ne!(obs.records[0].value, obs.records[1].value);
    }

    #[test]
    fn per_observation_repeats_differ() {
        let m = Mat::zeros(2, 2).unwrap();
        let pairs = vec![(0, 0), (0, 0), (0, 0)];
        let s = IndexSample::new(2, 2, pairs, SampleMode::WithReplacement, 0).unwrap();
        let noise = NoiseModel::iid_gaussian(1.0).unwrap();
        let obs = observe(&m, &s, &noise, ObservationSemantics::PerObservation, 11).unwrap();
        assert_ne!(obs.records[0].value, obs.records[1].value);
        assert_ne!(obs.records[1].value, obs.records[2].value);
    }

    #[test]
    fn adversarial_per_observation_is_contradictory() {
        let m = Mat::zeros(2, 2).unwrap();
        let s = sample_indices(2, 2, 2, SampleMode::WithReplacement, 1).unwrap();
        let noise = NoiseModel::adversarial(Mat::identity(2).unwrap());
        assert!(matches!(
            observe(&m, &s, &noise, ObservationSemantics::PerObservation, 0),
            Err(Error::Parameter(_))
        ));
        assert!(observe(&m, &s, &noise, ObservationSemantics::PerEntry, 0).is_ok());
    }

    #[test]
    fn observation_is_deterministic() {
        let m = Mat::from_fn(3, 3, |i, j| (i + j) as f64).unwrap();
        let s = sample_indices(3, 3, 6, SampleMode::WithReplacement, 21).unwrap();
        let noise = NoiseModel::iid_uniform(0.5).unwrap();
        let a = observe(&m, &s, &noise, ObservationSemantics::PerObservation, 9).unwrap();
        let b = observe(&m, &s, &noise, ObservationSemantics::PerObservation, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn discrete_distribution_must_be_mean_zero() {
        assert!(DiscreteDistribution::new(vec![1.0, -0.5], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![1.0, -1.0], vec![0.6, 0.4]).is_err());
        let ok = DiscreteDistribution::symmetric_pair(0.5).unwrap();
        assert!((ok.variance() - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn location_dependent_table_shape_checked() {
        let d = DiscreteDistribution::symmetric_pair(1.0).unwrap();
        let noise = NoiseModel::location_dependent(vec![vec![d.clone()], vec![d.clone()]]).unwrap();
        let m = Mat::zeros(2, 2).unwrap();
        let s = sample_indices(2, 2, 2, SampleMode::WithReplacement, 1).unwrap();
        assert!(matches!(
            observe(&m, &s, &noise, ObservationSemantics::PerEntry, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn noise_precondition_arithmetic() {
        let mut z = Mat::zeros(100, 100).unwrap();
        z.set(3, 4, 5.0);
        let rep = noise_precondition_check(&z, 2, false).unwrap();
        assert!((rep.lenient_threshold - (200.0 / 100.0_f64.ln()).sqrt()).abs() <= 1e-12);
        assert!((rep.strict_threshold - (2.0 * 100.0_f64.ln()).sqrt()).abs() <= 1e-12);
        assert!(rep.passes_lenient && rep.pass);
        assert!(!rep.passes_strict);
        let strict = noise_precondition_check(&z, 2, true).unwrap();
        assert!(!strict.pass);

        let zero = Mat::zeros(10, 10).unwrap();
        let rep = noise_precondition_check(&zero, 1, true).unwrap();
        assert!(rep.passes_lenient && rep.passes_strict && rep.pass);
    }

    #[test]
    fn spiky_matrix_pinned_statistics() {
        let y = spiky_matrix(8, 6, 2, 17).unwrap();
        let nm = 48.0;
        let avg_sq = y.frobenius_norm().powi(2) / nm;
        assert!((avg_sq - 1.0).abs() <= 1e-12);
        assert!((y.max_abs().powi(2) - 3.0).abs() <= 1e-12); // m/r = 3
        assert!(numerical_rank(&y, DEFAULT_RANK_REL_TOL).unwrap() <= 2);
        for i in 0..8 {
            for j in 2..6 {
                assert_eq!(y.get(i, j), 0.0);
            }
        }
    }
}
