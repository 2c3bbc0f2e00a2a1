//! Closed-form sample-complexity calculators and the smooth-loss excess-risk
//! bound.
//!
//! These are pure arithmetic: each formula is an asymptotic sample-size
//! requirement with a suppressed big-O constant, and that constant is always
//! an explicit user input (default 1 at the CLI layer) — fitting it to data
//! is an experiment, not a constant. Logarithms are natural throughout.
//!
//! Dimension convention: the formulas are stated for `n ≥ m`; the evaluators
//! sort the two dimensions internally, so callers may pass them in either
//! order.

use crate::error::{Error, Result};

/// Which sample-complexity formula to evaluate.
///
/// The middle four are guarantees from the published matrix-completion
/// literature, named by their authors; the first and last describe the
/// max-norm ERM guarantees this library's estimators target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleComplexityFormula {
    /// Max-norm ERM sample size for mean-squared reconstruction error
    /// `σ² + ε` under bounded entries:
    /// `C · (r(n+m)/ε) · ((σ²+ε)/ε) · (ln³(1/ε) + β)`.
    /// `β` trades sample size for failure probability `n^{-β}`; at `β = 0`
    /// this is the plain in-expectation requirement.
    MaxNormMeanSquared,
    /// Trace-norm estimation with independent subgaussian noise
    /// (Negahban–Wainwright; Koltchinskii et al.):
    /// `C · (r·n·ln n / ε) · (1 + σ²)`, sampling with replacement.
    NegahbanWainwright,
    /// Spectral truncation with i.i.d. subgaussian noise, approximate
    /// recovery (Keshavan–Montanari–Oh):
    /// `C · (r·n/ε) · √(n/m) · (1 + σ²·ln n)`, sampling without replacement.
    KeshavanMontanariOhApprox,
    /// Noiseless exact recovery under incoherence (Recht):
    /// `C · r·n · max{μ₀, μ₁²} · ln² n`. Requires `μ₀, μ₁`; ignores `ε, σ²`.
    Recht,
    /// Near-exact recovery under incoherence and conditioning
    /// (Keshavan–Montanari–Oh):
    /// `C · r·n·κ⁴ · max{ (1/ε)·ln(r·n·κ⁴/ε), r·κ²·μ₀², r·κ²·μ₁² }`.
    /// Requires `μ₀, μ₁, κ`.
    KeshavanMontanariOhExact,
    /// Max-norm ERM restated in incoherence terms:
    /// `C · (r·n/ε) · ((σ²+ε)/ε) · min{κ², r}·μ₀² · ln³(μ₀²·r/ε)`.
    /// Requires `μ₀, κ`.
    MaxNormIncoherent,
}

/// Inputs for [`sample_complexity`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleComplexityQuery {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// Target excess error `ε > 0`.
    pub epsilon: f64,
    /// Noise floor `σ² ≥ 0` (mean-squared error of the best rank-`r`
    /// approximation, or the noise variance, depending on the formula).
    pub sigma2: f64,
    /// High-probability exponent `β ≥ 0` (only
    /// [`SampleComplexityFormula::MaxNormMeanSquared`] uses it).
    pub beta: f64,
    /// The suppressed big-O constant, supplied by the caller.
    pub constant: f64,
    /// Incoherence `μ₀`, where the formula requires it.
    pub mu0: Option<f64>,
    /// Incoherence `μ₁`, where the formula requires it.
    pub mu1: Option<f64>,
    /// Condition number `κ`, where the formula requires it.
    pub kappa: Option<f64>,
    pub which: SampleComplexityFormula,
}

impl SampleComplexityQuery {
    /// A query with the given shape/target and every optional field unset,
    /// `β = 0`, `σ² = 0`, constant 1.
    pub fn new(n: usize, m: usize, r: usize, epsilon: f64, which: SampleComplexityFormula) -> Self {
        SampleComplexityQuery {
            n,
            m,
            r,
            epsilon,
            sigma2: 0.0,
            beta: 0.0,
            constant: 1.0,
            mu0: None,
            mu1: None,
            kappa: None,
            which,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.r == 0 {
            return Err(Error::Parameter("dimensions and rank must be positive".into()));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Parameter(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        for (name, v) in [
            ("sigma2", self.sigma2),
            ("beta", self.beta),
            ("constant", self.constant),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        for (name, v) in [("mu0", self.mu0), ("mu1", self.mu1), ("kappa", self.kappa)] {
            if let Some(v) = v {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::Parameter(format!(
                        "{name} must be positive and finite when supplied, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn need(&self, field: Option<f64>, name: &str) -> Result<f64> {
        field.ok_or_else(|| {
            Error::Parameter(format!(
                "formula {:?} requires the {name} incoherence field",
                self.which
            ))
        })
    }
}

/// Evaluate the selected sample-complexity formula. Pure arithmetic; returns
/// the sample-size requirement with the user's constant substituted for the
/// big-O constant.
pub fn sample_complexity(q: &SampleComplexityQuery) -> Result<f64> {
    q.validate()?;
    let big = q.n.max(q.m) as f64;
    let small = q.n.min(q.m) as f64;
    let sum = (q.n + q.m) as f64;
    let r = q.r as f64;
    let eps = q.epsilon;
    let s2 = q.sigma2;
    let value = match q.which {
        SampleComplexityFormula::MaxNormMeanSquared => {
            (r * sum / eps) * ((s2 + eps) / eps) * ((1.0 / eps).ln().powi(3) + q.beta)
        }
        SampleComplexityFormula::NegahbanWainwright => {
            (r * big * big.ln() / eps) * (1.0 + s2)
        }
        SampleComplexityFormula::KeshavanMontanariOhApprox => {
            (r * big / eps) * (big / small).sqrt() * (1.0 + big.ln() * s2)
        }
        SampleComplexityFormula::Recht => {
            let mu0 = q.need(q.mu0, "mu0")?;
            let mu1 = q.need(q.mu1, "mu1")?;
            r * big * mu0.max(mu1 * mu1) * big.ln().powi(2)
        }
        SampleComplexityFormula::KeshavanMontanariOhExact => {
            let mu0 = q.need(q.mu0, "mu0")?;
            let mu1 = q.need(q.mu1, "mu1")?;
            let kappa = q.need(q.kappa, "kappa")?;
            let k2 = kappa * kappa;
            let k4 = k2 * k2;
            let inner = ((r * big * k4 / eps).ln() / eps)
                .max(r * k2 * mu0 * mu0)
                .max(r * k2 * mu1 * mu1);
            r * big * k4 * inner
        }
        SampleComplexityFormula::MaxNormIncoherent => {
            let mu0 = q.need(q.mu0, "mu0")?;
            let kappa = q.need(q.kappa, "kappa")?;
            let lead = (kappa * kappa).min(r);
            (r * big / eps) * ((s2 + eps) / eps)
                * lead
                * mu0
                * mu0
                * (mu0 * mu0 * r / eps).ln().powi(3)
        }
    };
    Ok(q.constant * value)
}

/// Excess-risk bound for smooth bounded losses over a class of predictors
/// `X: indices → [-B, B]`, loss bounded by `b` with second derivative
/// bounded by `H`, at confidence `1 − δ` over a sample of size `s`:
///
/// ```text
///   R̃_s = H·rad²·ln³(B/rad) + b·ln(ln(s)/δ)/s
///   bound = L* + C·( √(L*·R̃_s) + R̃_s )
/// ```
///
/// where `rad` is the (expected) Rademacher complexity of the class and `L*`
/// the best achievable loss in it.
///
/// Corner conventions, all documented policy rather than limits of the
/// statement:
/// * `rad = 0` returns `L*` exactly (the complexity term vanishes by
///   continuity of `x²·ln³(B/x)` at 0).
/// * `s` is floored at 2 inside the iterated logarithm so `ln(ln(s))` is
///   defined for `s = 1`.
/// * A non-positive `R̃_s` (possible for very large `δ`) is floored at 0,
///   collapsing the bound to `L*`.
pub fn smooth_excess_bound(
    lstar: f64,
    rad: f64,
    b_predictor: f64,
    b_loss: f64,
    h_smooth: f64,
    s: usize,
    delta: f64,
    constant: f64,
) -> Result<f64> {
    for (name, v) in [
        ("Lstar", lstar),
        ("rad", rad),
        ("B", b_predictor),
        ("b", b_loss),
        ("H", h_smooth),
        ("constant", constant),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Parameter(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    if s == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0,1), got {delta}")));
    }
    if rad == 0.0 {
        return Ok(lstar);
    }
    if rad > b_predictor {
        return Err(Error::Parameter(format!(
            "complexity radius {rad} exceeds the predictor bound {b_predictor}"
        )));
    }
    let s_eff = (s.max(2)) as f64;
    let rtilde = h_smooth * rad * rad * (b_predictor / rad).ln().powi(3)
        + b_loss * (s_eff.ln() / delta).ln() / s as f64;
    let rtilde = rtilde.max(0.0);
    Ok(lstar + constant * ((lstar * rtilde).sqrt() + rtilde))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(which: SampleComplexityFormula) -> SampleComplexityQuery {
        SampleComplexityQuery::new(64, 64, 2, 0.1, which)
    }

    #[test]
    fn max_norm_mean_squared_pinned_value() {
        // constant 1, r=2, n=m=64, ε=0.1, σ²=0:
        //   2·128/0.1 · (0+0.1)/0.1 · ln³(10) = 2560·ln³(10).
        let q = base(SampleComplexityFormula::MaxNormMeanSquared);
        let got = sample_complexity(&q).unwrap();
        let expect = 2560.0 * 10.0_f64.ln().powi(3);
        assert!((got - expect).abs() <= 1e-9 * expect, "got {got}, expect {expect}");
    }

    #[test]
    fn recht_pinned_value() {
        // constant 1, r=1, n=64, μ₀=μ₁=1 → 64·ln²64.
        let mut q = SampleComplexityQuery::new(64, 64, 1, 0.1, SampleComplexityFormula::Recht);
        q.mu0 = Some(1.0);
        q.mu1 = Some(1.0);
        let got = sample_complexity(&q).unwrap();
        let expect = 64.0 * 64.0_f64.ln().powi(2);
        assert!((got - expect).abs() <= 1e-9 * expect, "got {got}, expect {expect}");
    }

    #[test]
    fn epsilon_scaling_of_mean_squared_formula() {
        // At σ² = 0 the noise factor is 1, so the value is (K/ε)·ln³(1/ε):
        // halving ε multiplies it by 2·(ln³(2/ε₀)/ln³(1/ε₀)).
        let q1 = base(SampleComplexityFormula::MaxNormMeanSquared);
        let mut q2 = q1.clone();
        q2.epsilon = q1.epsilon / 2.0;
        let v1 = sample_complexity(&q1).unwrap();
        let v2 = sample_complexity(&q2).unwrap();
        let ratio = v2 / v1;
        let expect = 2.0 * (20.0_f64.ln().powi(3) / 10.0_f64.ln().powi(3));
        assert!((ratio - expect).abs() <= 1e-9 * expect, "ratio {ratio}, expect {expect}");
    }

    #[test]
    fn missing_incoherence_fields_error() {
        let q = base(SampleComplexityFormula::Recht);
        assert!(matches!(sample_complexity(&q), Err(crate::Error::Parameter(_))));
        let mut q = base(SampleComplexityFormula::MaxNormIncoherent);
        q.mu0 = Some(2.0);
        assert!(sample_complexity(&q).is_err()); // kappa still missing
        q.kappa = Some(1.5);
        assert!(sample_complexity(&q).is_ok());
    }

    #[test]
    fn dimension_order_is_irrelevant_where_symmetric() {
        let mut a = SampleComplexityQuery::new(
            32,
            80,
            3,
            0.2,
            SampleComplexityFormula::KeshavanMontanariOhApprox,
        );
        a.sigma2 = 0.5;
        let mut b = a.clone();
        b.n = 80;
        b.m = 32;
        assert_eq!(sample_complexity(&a).unwrap(), sample_complexity(&b).unwrap());
    }

    #[test]
    fn invalid_queries_rejected() {
        let mut q = base(SampleComplexityFormula::MaxNormMeanSquared);
        q.epsilon = 0.0;
        assert!(sample_complexity(&q).is_err());
        let mut q = base(SampleComplexityFormula::MaxNormMeanSquared);
        q.sigma2 = -1.0;
        assert!(sample_complexity(&q).is_err());
        let mut q = base(SampleComplexityFormula::MaxNormMeanSquared);
        q.r = 0;
        assert!(sample_complexity(&q).is_err());
    }

    #[test]
    fn smooth_bound_noiseless_collapse() {
        // Lstar = 0 → exactly C·R̃_s.
        let (rad, bp, bl, h, s, delta, c) = (0.05, 1.0, 1.0, 2.0, 100, 0.1, 3.0);
        let got = smooth_excess_bound(0.0, rad, bp, bl, h, s, delta, c).unwrap();
        let rtilde = h * rad * rad * (bp / rad).ln().powi(3)
            + bl * ((100.0_f64).ln() / delta).ln() / 100.0;
        assert!((got - c * rtilde).abs() <= 1e-12 * got.max(1.0));
    }

    #[test]
    fn smooth_bound_zero_radius_returns_lstar() {
        let got = smooth_excess_bound(0.37, 0.0, 1.0, 1.0, 2.0, 50, 0.05, 1.0).unwrap();
        assert_eq!(got, 0.37);
    }

    #[test]
    fn smooth_bound_monotone_in_radius_below_knee() {
        // x²·ln³(B/x) increases on (0, B·e^{-1.5}); sweep inside that range.
        let bp = 1.0;
        let knee = bp * (-1.5_f64).exp();
        let mut prev = -f64::INFINITY;
        for k in 1..=40 {
            let rad = knee * k as f64 / 41.0;
            let v = smooth_excess_bound(0.1, rad, bp, 1.0, 2.0, 200, 0.1, 1.0).unwrap();
            assert!(v > prev, "not increasing at rad={rad}: {v} ≤ {prev}");
            prev = v;
        }
    }

    #[test]
    fn smooth_bound_small_sample_is_defined() {
        // s = 1 floors the iterated log at s = 2 instead of ln(0).
        let v = smooth_excess_bound(0.1, 0.05, 1.0, 1.0, 2.0, 1, 0.1, 1.0).unwrap();
        assert!(v.is_finite() && v >= 0.1);
    }

    #[test]
    fn smooth_bound_rejects_bad_inputs() {
        assert!(smooth_excess_bound(0.1, 0.05, 1.0, 1.0, 2.0, 10, 0.0, 1.0).is_err());
        assert!(smooth_excess_bound(0.1, 0.05, 1.0, 1.0, 2.0, 0, 0.1, 1.0).is_err());
        assert!(smooth_excess_bound(-0.1, 0.05, 1.0, 1.0, 2.0, 10, 0.1, 1.0).is_err());
        assert!(smooth_excess_bound(0.1, 2.0, 1.0, 1.0, 2.0, 10, 0.1, 1.0).is_err());
    }
}
