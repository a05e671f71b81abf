//! Hypothesis tests: the normality battery, nested likelihood-ratio tests
//! for tail thickness and probability weighting, Diebold-Mariano forecast
//! comparison, and AIC ranking.

use serde::Serialize;

use crate::distributions::{Family, ModelParams};
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, FitResult, OptimizerConfig};
use crate::sample_stats;
use crate::special::{chi2_sf, kolmogorov_sf, normal_sf};

/// PIT values are clamped to `[AD_CLAMP, 1 − AD_CLAMP]` before taking logs.
pub const AD_CLAMP: f64 = 1e-12;

/// Reported `α̂` above `1 − WALD_BOUNDARY_WARN` carries a caveat.
pub const WALD_BOUNDARY_WARN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    /// Degrees of freedom of the reference distribution; `1` for the
    /// ½χ²(0) + ½χ²(1) mixture.
    pub df: f64,
    pub p_value: f64,
    pub reject_at_5pct: bool,
    /// Plain χ² p-value when the decision uses a boundary-corrected mixture.
    pub p_value_chi2: Option<f64>,
    pub caveat: Option<String>,
    /// The test could not be carried out (e.g. estimate on the boundary).
    pub inconclusive: bool,
}

impl TestResult {
    fn new(method: &str, statistic: f64, df: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult {
            method: method.to_string(),
            statistic,
            df,
            p_value,
            reject_at_5pct: p_value < 0.05,
            p_value_chi2: None,
            caveat: None,
            inconclusive: false,
        }
    }

    fn with_caveat(mut self, caveat: impl Into<String>) -> Self {
        let caveat = caveat.into();
        self.caveat = Some(match self.caveat.take() {
            Some(prev) => format!("{prev}; {caveat}"),
            None => caveat,
        });
        self
    }
}

fn check_finite(data: &[f64], min_len: usize, what: &str) -> Result<()> {
    if data.len() < min_len {
        return Err(Error::domain(format!(
            "{what} needs at least {min_len} observations, got {}",
            data.len()
        )));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("observation {i} is not finite")));
    }
    Ok(())
}

/// `JB = n/6 (S² + (K − 3)²/4)` against χ²(2).
pub fn jarque_bera(data: &[f64]) -> Result<TestResult> {
    check_finite(data, 8, "Jarque-Bera")?;
    let (m2, m3, m4) = sample_stats::central_moments(data);
    if !(m2 > 0.0) || sample_stats::is_constant(data) {
        return Err(Error::DegenerateData("Jarque-Bera on a constant series".into()));
    }
    let s = m3 / m2.powf(1.5);
    let k = m4 / (m2 * m2);
    let n = data.len() as f64;
    let stat = n / 6.0 * (s * s + 0.25 * (k - 3.0) * (k - 3.0));
    Ok(TestResult::new("jarque-bera", stat, 2.0, chi2_sf(stat, 2.0)?))
}

/// Probability-integral transform of `data` under `params`, in data order.
pub fn pit(data: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    params.validate()?;
    data.iter().map(|&x| params.cdf(x)).collect()
}

/// Kolmogorov-Smirnov distance between the empirical CDF of the PIT values
/// `u` and the uniform CDF, computed exactly at the order statistics.
pub fn ks_statistic_pit(u: &[f64]) -> f64 {
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0_f64, |d, (i, &f)| {
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d.max(hi).max(lo)
    })
}

pub fn ks_statistic(data: &[f64], params: &ModelParams) -> Result<f64> {
    Ok(ks_statistic_pit(&pit(data, params)?))
}

/// One-sample KS test with the asymptotic Kolmogorov p-value, evaluated at
/// `(√n + 0.12 + 0.11/√n) D`.
pub fn ks_test(data: &[f64], params: &ModelParams) -> Result<TestResult> {
    check_finite(data, 10, "Kolmogorov-Smirnov")?;
    let d = ks_statistic(data, params)?;
    let rn = (data.len() as f64).sqrt();
    let p = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
    Ok(TestResult::new("kolmogorov-smirnov", d, f64::NAN, p).with_caveat(
        "asymptotic p-value; parameters estimated from the same data make the test conservative",
    ))
}

/// `A² = −n − (1/n) Σ (2i − 1)[ln u₍ᵢ₎ + ln(1 − u₍ₙ₊₁₋ᵢ₎)]` with the PIT
/// values clamped away from 0 and 1.
pub fn anderson_darling_statistic_pit(u: &[f64]) -> f64 {
    let mut s: Vec<f64> = u.iter().map(|v| v.clamp(AD_CLAMP, 1.0 - AD_CLAMP)).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let sum: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (s[i].ln() + (-s[n - 1 - i]).ln_1p()))
        .sum();
    -(n as f64) - sum / n as f64
}

/// Approximate p-value for `A²` with estimated location and scale, using
/// the small-sample adjustment `A²(1 + 0.75/n + 2.25/n²)`.
pub fn anderson_darling_p_value(a2: f64, n: usize) -> f64 {
    let n = n as f64;
    let a = a2 * (1.0 + 0.75 / n + 2.25 / (n * n));
    let p = if a >= 0.6 {
        // the fitted quadratic turns upward past its vertex
        let a = a.min(5.709 / (2.0 * 0.0186));
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    p.clamp(0.0, 1.0)
}

pub fn anderson_darling(data: &[f64], params: &ModelParams) -> Result<TestResult> {
    check_finite(data, 10, "Anderson-Darling")?;
    let a2 = anderson_darling_statistic_pit(&pit(data, params)?);
    let p = anderson_darling_p_value(a2, data.len());
    Ok(TestResult::new("anderson-darling", a2, f64::NAN, p)
        .with_caveat("approximate p-value for a normal null with estimated parameters"))
}

/// p-value under ½χ²(0) + ½χ²(1).
pub fn mixture_p_value(lr: f64) -> Result<f64> {
    if lr <= 0.0 {
        Ok(1.0)
    } else {
        Ok(0.5 * chi2_sf(lr, 1.0)?)
    }
}

fn nested_lr(method: &str, lr: f64) -> Result<TestResult> {
    let mut r = TestResult::new(method, lr, 1.0, mixture_p_value(lr)?);
    r.p_value_chi2 = Some(chi2_sf(lr.max(0.0), 1.0)?);
    Ok(r)
}

fn require_converged(fit: &FitResult) -> Result<()> {
    if fit.converged {
        Ok(())
    } else {
        Err(Error::Inference(format!(
            "{} fit did not converge after {} iterations",
            fit.family(),
            fit.iterations
        )))
    }
}

/// `LR = 2(ℓ_t − ℓ_Normal)` for `H₀: ν = ∞`.
///
/// The Normal model is the closure of the t family at `ν → ∞`, so the t
/// supremum is taken as `max(ℓ_t, ℓ_Normal)`.
pub fn lr_tail_test(data: &[f64], config: &OptimizerConfig) -> Result<TestResult> {
    let normal = fit_mle(data, Family::Normal, config)?;
    let t = fit_mle(data, Family::StudentT, config)?;
    require_converged(&normal)?;
    require_converged(&t)?;
    let raw = 2.0 * (t.loglik - normal.loglik);
    let r = nested_lr("lr-tail", raw.max(0.0))?;
    Ok(if raw < 0.0 {
        r.with_caveat(format!(
            "t optimum {raw:.3e} below the normal limit; supremum taken at nu = infinity"
        ))
    } else {
        r
    })
}

/// `LR = 2(ℓ_behavioral − ℓ_t)` for `H₀: α = 1`.
pub fn lr_alpha_test(data: &[f64], config: &OptimizerConfig) -> Result<TestResult> {
    let t = fit_mle(data, Family::StudentT, config)?;
    let bt = fit_mle(data, Family::BehavioralT, config)?;
    require_converged(&t)?;
    require_converged(&bt)?;
    let lr = (2.0 * (bt.loglik - t.loglik)).max(0.0);
    let r = nested_lr("lr-alpha", lr)?
        .with_caveat("alpha = 1 lies on the parameter boundary; decision uses the chi2 mixture");
    Ok(if bt.boundary {
        r.with_caveat("behavioral fit at the boundary alpha = 1")
    } else {
        r
    })
}

/// `W = ((α̂ − 1)/se(α̂))²` against χ²(1).
pub fn wald_alpha_test(fit: &FitResult) -> Result<TestResult> {
    let ModelParams::BehavioralT(p) = fit.params else {
        return Err(Error::domain(format!(
            "Wald test on alpha needs a behavioral-t fit, got {}",
            fit.family()
        )));
    };
    if fit.boundary {
        let mut r = TestResult::new("wald-alpha", 0.0, 1.0, 1.0)
            .with_caveat("alpha estimate on the boundary 1; Wald test not informative");
        r.inconclusive = true;
        r.reject_at_5pct = false;
        return Ok(r);
    }
    let alpha = p.weighting.alpha;
    let se = fit.se[3];
    if !(se.is_finite() && se > 0.0) {
        return Err(Error::Inference(format!("standard error of alpha is {se}")));
    }
    let w = ((alpha - 1.0) / se).powi(2);
    let r = TestResult::new("wald-alpha", w, 1.0, chi2_sf(w, 1.0)?);
    Ok(if alpha > 1.0 - WALD_BOUNDARY_WARN {
        r.with_caveat("alpha estimate near the boundary 1; chi2 approximation unreliable")
    } else {
        r
    })
}

/// Diebold-Mariano test on `d = loss_a − loss_b` with a Bartlett-weighted
/// long-run variance over `horizon − 1` lags. A positive statistic means
/// `b` has the lower expected loss.
pub fn diebold_mariano(loss_a: &[f64], loss_b: &[f64], horizon: usize) -> Result<TestResult> {
    if loss_a.len() != loss_b.len() {
        return Err(Error::domain(format!(
            "loss series differ in length: {} vs {}",
            loss_a.len(),
            loss_b.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    check_finite(loss_a, 30, "Diebold-Mariano")?;
    check_finite(loss_b, 30, "Diebold-Mariano")?;
    let d: Vec<f64> = loss_a.iter().zip(loss_b).map(|(a, b)| a - b).collect();
    let n = d.len();
    let mean = sample_stats::mean(&d);
    let autocov = |k: usize| (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n as f64;
    let mut lrv = autocov(0);
    for k in 1..horizon.min(n) {
        lrv += 2.0 * (1.0 - k as f64 / horizon as f64) * autocov(k);
    }
    if d.iter().all(|&v| v == 0.0) {
        return Ok(TestResult::new("diebold-mariano", 0.0, f64::NAN, 1.0));
    }
    if !(lrv > 0.0) {
        return Err(Error::Inference(
            "loss differential has zero long-run variance".into(),
        ));
    }
    let stat = mean / (lrv / n as f64).sqrt();
    let p = 2.0 * normal_sf(stat.abs());
    Ok(TestResult::new("diebold-mariano", stat, f64::NAN, p))
}

#[derive(Debug, Clone, Serialize)]
pub struct FitFailure {
    pub family: Family,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelComparison {
    /// Successful fits, best AIC first.
    pub fits: Vec<FitResult>,
    pub ranking: Vec<Family>,
    pub best_family: Family,
    pub failures: Vec<FitFailure>,
}

impl ModelComparison {
    pub fn fit(&self, family: Family) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.family() == family)
    }
}

/// Fit Normal, Laplace and Student's t and rank them by AIC.
pub fn compare_models(data: &[f64], config: &OptimizerConfig) -> Result<ModelComparison> {
    compare_families(data, &[Family::Normal, Family::Laplace, Family::StudentT], config)
}

/// Rank the given families by AIC. Ties go to fewer parameters, then to the
/// canonical family order, so the outcome does not depend on the order of
/// `families`.
pub fn compare_families(data: &[f64], families: &[Family], config: &OptimizerConfig) -> Result<ModelComparison> {
    if families.is_empty() {
        return Err(Error::domain("no families to compare"));
    }
    let mut families = families.to_vec();
    families.sort();
    families.dedup();

    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for &family in &families {
        match fit_mle(data, family, config) {
            Ok(f) => fits.push(f),
            Err(e) => failures.push(FitFailure {
                family,
                message: e.to_string(),
            }),
        }
    }
    if fits.is_empty() {
        let detail: Vec<String> = failures.iter().map(|f| format!("{}: {}", f.family, f.message)).collect();
        return Err(Error::Inference(format!("every fit failed ({})", detail.join("; "))));
    }
    fits.sort_by(|a, b| {
        a.aic
            .total_cmp(&b.aic)
            .then(a.n_free().cmp(&b.n_free()))
            .then(a.family().cmp(&b.family()))
    });
    let ranking: Vec<Family> = fits.iter().map(FitResult::family).collect();
    Ok(ModelComparison {
        best_family: ranking[0],
        ranking,
        fits,
        failures,
    })
}
