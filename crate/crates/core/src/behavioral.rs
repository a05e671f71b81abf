//! Prelec probability weighting and the probability-weighted Student's t.
//!
//! Two separate constructions live here and are never mixed:
//!
//! * the weighted-CDF model `F_bw(x) = w(F_t(x); α)` used for estimation,
//!   with density `w'(F_t(x)) · f_t(x)`;
//! * the bounded pointwise adjustment
//!   `B_w[x] = x · (1 + θ · tanh(β · (w(F_t(x)) / F_t(x) − 1)))`.
//!
//! The weighting function is the one-parameter Prelec form
//! `w(p) = exp(−(−ln p)^α)`.

use serde::{Deserialize, Serialize};

use crate::distributions::{uniforms, StudentTParams, TKernel};
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` before the
/// weighting ratio of the adjustment operator is taken.
pub const PROB_CLAMP: f64 = 1e-12;

/// Clamp bounds expressed on `L = −ln p`.
const NEG_LN_MAX: f64 = 27.631_021_115_928_547; // -ln(1e-12)
const NEG_LN_MIN: f64 = 1.000_000_000_000_5e-12; // -ln(1 - 1e-12)

// The density is evaluated exactly in log space; `L` is only kept inside
// the range of positive doubles so that `w'` stays finite when a tail
// probability underflows.
const DENSITY_NEG_LN_MAX: f64 = 708.396_418_532_264_1; // -ln(f64::MIN_POSITIVE)
const DENSITY_NEG_LN_MIN: f64 = f64::MIN_POSITIVE;

/// Prelec distortion exponent, `0 < alpha ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingParams {
    pub alpha: f64,
}

impl WeightingParams {
    pub fn new(alpha: f64) -> Result<Self> {
        let w = WeightingParams { alpha };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.alpha <= 1.0 {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "weighting exponent alpha must lie in (0, 1], got {}",
                self.alpha
            )))
        }
    }
}

/// Student's t base distribution with Prelec-weighted CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehavioralTParams {
    pub base: StudentTParams,
    pub weighting: WeightingParams,
}

impl BehavioralTParams {
    pub fn new(mu: f64, sigma: f64, nu: f64, alpha: f64) -> Result<Self> {
        let p = BehavioralTParams {
            base: StudentTParams { mu, sigma, nu },
            weighting: WeightingParams { alpha },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.weighting.validate()
    }

    pub fn alpha(&self) -> f64 {
        self.weighting.alpha
    }

    pub(crate) fn log_pdf_unchecked(&self, x: f64) -> f64 {
        BehavioralKernel::new(self).log_pdf(x)
    }
}

/// Magnitude and sensitivity of the bounded adjustment operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentParams {
    pub theta_adj: f64,
    pub beta_sens: f64,
}

impl AdjustmentParams {
    pub const DEFAULT_BETA_SENS: f64 = 1.0;
    pub const MAX_THETA_ADJ: f64 = 0.3;

    pub fn new(theta_adj: f64, beta_sens: f64) -> Result<Self> {
        let p = AdjustmentParams {
            theta_adj,
            beta_sens,
        };
        p.validate()?;
        Ok(p)
    }

    /// Adjustment with the default sensitivity `beta_sens = 1`.
    pub fn with_magnitude(theta_adj: f64) -> Result<Self> {
        Self::new(theta_adj, Self::DEFAULT_BETA_SENS)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=Self::MAX_THETA_ADJ).contains(&self.theta_adj) {
            return Err(Error::domain(format!(
                "theta_adj must lie in [0, 0.3], got {}",
                self.theta_adj
            )));
        }
        if !(self.beta_sens > 0.0 && self.beta_sens.is_finite()) {
            return Err(Error::domain(format!(
                "beta_sens must be positive, got {}",
                self.beta_sens
            )));
        }
        Ok(())
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in [0, 1], got {p}")))
    }
}

/// Prelec weighting `w(p) = exp(−(−ln p)^α)`.
pub fn prelec_w(p: f64, weighting: &WeightingParams) -> Result<f64> {
    weighting.validate()?;
    check_probability(p)?;
    if weighting.alpha == 1.0 || p == 0.0 || p == 1.0 {
        return Ok(p);
    }
    Ok((-(-p.ln()).powf(weighting.alpha)).exp())
}

/// Derivative `w'(p) = w(p) · α · (−ln p)^(α−1) / p` on the open interval.
pub fn prelec_w_prime(p: f64, weighting: &WeightingParams) -> Result<f64> {
    weighting.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "weighting derivative needs p in (0, 1), got {p}"
        )));
    }
    Ok(log_w_prime_from_neg_ln(-p.ln(), weighting.alpha).exp())
}

/// `ln w'(p)` written in terms of `L = −ln p`.
fn log_w_prime_from_neg_ln(l: f64, alpha: f64) -> f64 {
    alpha.ln() + (alpha - 1.0) * l.ln() - l.powf(alpha) + l
}

/// Closed-form inverse `w⁻¹(q) = exp(−(−ln q)^(1/α))`.
pub fn prelec_w_inverse(q: f64, weighting: &WeightingParams) -> Result<f64> {
    weighting.validate()?;
    check_probability(q)?;
    if weighting.alpha == 1.0 || q == 0.0 || q == 1.0 {
        return Ok(q);
    }
    Ok((-(-q.ln()).powf(1.0 / weighting.alpha)).exp())
}

/// `F_bw(x) = w(F_t(x))`.
pub fn behavioral_cdf(x: f64, params: &BehavioralTParams) -> Result<f64> {
    params.validate()?;
    if x.is_nan() {
        return Err(Error::domain("CDF argument is NaN"));
    }
    let (lower, upper) = params.base.tails(x)?;
    let alpha = params.weighting.alpha;
    if alpha == 1.0 {
        return Ok(lower);
    }
    let l = neg_ln_lower(lower, upper);
    Ok((-l.powf(alpha)).exp())
}

/// Density implied by the weighted CDF, `w'(F_t(x)) · f_t(x)`.
pub fn behavioral_pdf(x: f64, params: &BehavioralTParams) -> Result<f64> {
    Ok(behavioral_log_pdf(x, params)?.exp())
}

pub fn behavioral_log_pdf(x: f64, params: &BehavioralTParams) -> Result<f64> {
    params.validate()?;
    if !x.is_finite() {
        return Err(Error::domain(format!("density argument must be finite, got {x}")));
    }
    Ok(params.log_pdf_unchecked(x))
}

/// `F_t⁻¹(w⁻¹(p))`, with both tails of `w⁻¹(p)` carried at full precision.
pub fn behavioral_quantile(p: f64, params: &BehavioralTParams) -> Result<f64> {
    params.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let alpha = params.weighting.alpha;
    if alpha == 1.0 {
        return params.base.quantile_from_tails(p, 1.0 - p);
    }
    let e = (-p.ln()).powf(1.0 / alpha);
    params.base.quantile_from_tails((-e).exp(), -(-e).exp_m1())
}

/// Inverse-transform draws through [`behavioral_quantile`].
pub fn behavioral_sample(params: &BehavioralTParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    uniforms(n, seed)
        .into_iter()
        .map(|u| behavioral_quantile(u, params))
        .collect()
}

/// Multiplier `1 + θ · tanh(β · (w(F)/F − 1))` applied by the adjustment operator.
pub fn adjustment_factor(
    x: f64,
    base: &StudentTParams,
    weighting: &WeightingParams,
    adj: &AdjustmentParams,
) -> Result<f64> {
    base.validate()?;
    weighting.validate()?;
    adj.validate()?;
    if x.is_nan() {
        return Err(Error::domain("adjustment argument is NaN"));
    }
    if adj.theta_adj == 0.0 || weighting.alpha == 1.0 {
        return Ok(1.0);
    }
    let (lower, upper) = base.tails(x)?;
    let l = neg_ln_lower(lower, upper).clamp(NEG_LN_MIN, NEG_LN_MAX);
    // w(F)/F = exp(L − L^α)
    let ratio = (l - l.powf(weighting.alpha)).exp();
    Ok(1.0 + adj.theta_adj * (adj.beta_sens * (ratio - 1.0)).tanh())
}

/// `B_w[x] = x · adjustment_factor(x)`.
pub fn adjustment_operator(
    x: f64,
    base: &StudentTParams,
    weighting: &WeightingParams,
    adj: &AdjustmentParams,
) -> Result<f64> {
    Ok(x * adjustment_factor(x, base, weighting, adj)?)
}

/// `−ln F` from the two tails, using whichever is accurate.
fn neg_ln_lower(lower: f64, upper: f64) -> f64 {
    if lower < 0.5 {
        -lower.ln()
    } else {
        -(-upper).ln_1p()
    }
}

/// Precomputed log-density evaluator for one parameter vector.
pub(crate) struct BehavioralKernel {
    t: TKernel,
    mu: f64,
    sigma: f64,
    ln_sigma: f64,
    alpha: f64,
    ln_alpha: f64,
}

impl BehavioralKernel {
    pub(crate) fn new(p: &BehavioralTParams) -> Self {
        BehavioralKernel {
            t: TKernel::new(p.base.nu),
            mu: p.base.mu,
            sigma: p.base.sigma,
            ln_sigma: p.base.sigma.ln(),
            alpha: p.weighting.alpha,
            ln_alpha: p.weighting.alpha.ln(),
        }
    }

    pub(crate) fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        let log_ft = self.t.log_pdf_std(z) - self.ln_sigma;
        if self.alpha == 1.0 {
            return log_ft;
        }
        let (lower, upper) = match self.t.tails(z) {
            Ok(t) => t,
            Err(_) => return f64::NAN,
        };
        if log_ft == f64::NEG_INFINITY {
            return log_ft;
        }
        let l = neg_ln_lower(lower, upper).clamp(DENSITY_NEG_LN_MIN, DENSITY_NEG_LN_MAX);
        log_ft + self.ln_alpha + (self.alpha - 1.0) * l.ln() - l.powf(self.alpha) + l
    }
}
