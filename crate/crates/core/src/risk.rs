//! Value-at-Risk under a fitted model and Kupiec / Christoffersen
//! backtests. VaR is reported as a positive loss: `VaR = −q(1 − level)`.

use serde::Serialize;

use crate::distributions::{Family, ModelParams};
use crate::error::{Error, Result};
use crate::inference::TestResult;
use crate::special::chi2_sf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarEstimate {
    pub level: f64,
    pub value: f64,
    pub model: Family,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("VaR level must lie in (0, 1), got {level}")))
    }
}

pub fn value_at_risk(params: &ModelParams, level: f64) -> Result<VarEstimate> {
    check_level(level)?;
    let q = params.quantile(1.0 - level)?;
    Ok(VarEstimate {
        level,
        value: -q,
        model: params.family(),
    })
}

/// `(candidate − reference) / reference`; negative values mean the
/// candidate understates the risk.
pub fn var_relative_error(candidate: &VarEstimate, reference: &VarEstimate) -> Result<f64> {
    if candidate.level != reference.level {
        return Err(Error::domain(format!(
            "VaR levels differ: {} vs {}",
            candidate.level, reference.level
        )));
    }
    if reference.value == 0.0 {
        return Err(Error::domain("reference VaR is zero"));
    }
    Ok((candidate.value - reference.value) / reference.value)
}

/// `x ln y` with the convention `0 ln 0 = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Kupiec proportion-of-failures likelihood ratio against χ²(1).
pub fn kupiec_pof(violations: usize, n_obs: usize, level: f64) -> Result<TestResult> {
    check_level(level)?;
    if n_obs == 0 {
        return Err(Error::domain("Kupiec test needs at least one observation"));
    }
    if violations > n_obs {
        return Err(Error::domain(format!(
            "violations ({violations}) exceed observations ({n_obs})"
        )));
    }
    let p = 1.0 - level;
    let (x, n) = (violations as f64, n_obs as f64);
    let phat = x / n;
    let null = xlny(n - x, 1.0 - p) + xlny(x, p);
    let alt = xlny(n - x, 1.0 - phat) + xlny(x, phat);
    let stat = (-2.0 * (null - alt)).max(0.0);
    Ok(test("kupiec-pof", stat, 1.0)?)
}

fn test(method: &str, stat: f64, df: f64) -> Result<TestResult> {
    let p = chi2_sf(stat, df)?;
    Ok(TestResult {
        method: method.into(),
        statistic: stat,
        df,
        p_value: p,
        reject_at_5pct: p < 0.05,
        p_value_chi2: None,
        caveat: None,
        inconclusive: false,
    })
}

/// Transition counts `[n00, n01, n10, n11]` of a violation series.
pub fn transition_counts(violations: &[bool]) -> [usize; 4] {
    let mut c = [0usize; 4];
    for w in violations.windows(2) {
        c[(w[0] as usize) * 2 + w[1] as usize] += 1;
    }
    c
}

/// Christoffersen first-order Markov independence test and the conditional
/// coverage test (`cc = pof + independence`, χ²(2)).
pub fn christoffersen_tests(violations: &[bool], level: f64) -> Result<(TestResult, TestResult)> {
    check_level(level)?;
    if violations.len() < 2 {
        return Err(Error::domain("Christoffersen tests need a series of length at least 2"));
    }
    let [n00, n01, n10, n11] = transition_counts(violations).map(|v| v as f64);
    let pi0 = if n00 + n01 > 0.0 { n01 / (n00 + n01) } else { 0.0 };
    let pi1 = if n10 + n11 > 0.0 { n11 / (n10 + n11) } else { 0.0 };
    let pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    let restricted = xlny(n00 + n10, 1.0 - pi) + xlny(n01 + n11, pi);
    let unrestricted = xlny(n00, 1.0 - pi0) + xlny(n01, pi0) + xlny(n10, 1.0 - pi1) + xlny(n11, pi1);
    let ind_stat = (-2.0 * (restricted - unrestricted)).max(0.0);
    let independence = test("christoffersen-independence", ind_stat, 1.0)?;

    let x = violations.iter().filter(|&&v| v).count();
    let pof = kupiec_pof(x, violations.len(), level)?;
    let cc = test("christoffersen-cc", pof.statistic + ind_stat, 2.0)?;
    Ok((independence, cc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub level: f64,
    pub n_obs: usize,
    pub violations: usize,
    pub violation_rate: f64,
    pub kupiec: TestResult,
    pub independence: TestResult,
    pub conditional_coverage: TestResult,
    pub violation_series: Vec<bool>,
}

/// Assemble a backtest from a precomputed violation series.
pub fn backtest_violations(violations: Vec<bool>, level: f64) -> Result<BacktestReport> {
    if violations.is_empty() {
        return Err(Error::domain("backtest needs at least one observation"));
    }
    let n = violations.len();
    let x = violations.iter().filter(|&&v| v).count();
    let kupiec = kupiec_pof(x, n, level)?;
    let (independence, conditional_coverage) = if n >= 2 {
        christoffersen_tests(&violations, level)?
    } else {
        let ind = test("christoffersen-independence", 0.0, 1.0)?;
        let cc = test("christoffersen-cc", kupiec.statistic, 2.0)?;
        (ind, cc)
    };
    Ok(BacktestReport {
        level,
        n_obs: n,
        violations: x,
        violation_rate: x as f64 / n as f64,
        kupiec,
        independence,
        conditional_coverage,
        violation_series: violations,
    })
}

/// In-sample backtest: a violation is `r_t < −VaR`.
pub fn backtest(data: &[f64], params: &ModelParams, level: f64) -> Result<BacktestReport> {
    if data.is_empty() {
        return Err(Error::domain("backtest needs at least one observation"));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("observation {i} is not finite")));
    }
    let var = value_at_risk(params, level)?;
    backtest_violations(data.iter().map(|&r| r < -var.value).collect(), level)
}
