//! Rolling-window out-of-sample forecasting.
//!
//! At every step `t` each family is fitted on `[t − window, t)` (refitted
//! every `stride` steps, otherwise the latest fit is reused), and the
//! one-step VaR and predictive log-loss `−ln f(r_t)` are recorded.

use chrono::NaiveDate;
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::series::ReturnSeries;
use crate::distributions::{Family, ModelParams};
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, OptimizerConfig};
use crate::inference::{diebold_mariano, TestResult};
use crate::risk::{backtest_violations, value_at_risk, BacktestReport};

/// Steps required beyond the window so that the Diebold-Mariano tests have
/// enough observations.
pub const MIN_FORECAST_STEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window: usize,
    /// Refit every `stride` steps.
    pub stride: usize,
    pub level: f64,
    pub families: Vec<Family>,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig {
            window: 1_000,
            stride: 1,
            level: 0.99,
            families: vec![Family::Normal, Family::StudentT],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelForecast {
    pub family: Family,
    /// Loss-positive VaR for step `t`.
    pub var: f64,
    pub violation: bool,
    /// `−ln f(r_t)` under the fitted model.
    pub log_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub index: usize,
    pub date: NaiveDate,
    pub realized: f64,
    /// One entry per family, in the order of `RollingReport::families`.
    pub forecasts: Vec<ModelForecast>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyBacktest {
    pub family: Family,
    pub mean_log_loss: f64,
    pub backtest: BacktestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmComparison {
    /// `d = loss(a) − loss(b)`; a positive statistic favors `b`.
    pub a: Family,
    pub b: Family,
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingReport {
    pub asset_id: String,
    pub window_length: usize,
    pub stride: usize,
    pub level: f64,
    pub families: Vec<Family>,
    pub n_refits: usize,
    pub steps: Vec<StepRecord>,
    pub backtests: Vec<FamilyBacktest>,
    pub comparisons: Vec<DmComparison>,
}

impl RollingReport {
    pub fn comparison(&self, a: Family, b: Family) -> Option<&DmComparison> {
        self.comparisons.iter().find(|c| c.a == a && c.b == b)
    }

    pub fn backtest(&self, family: Family) -> Option<&FamilyBacktest> {
        self.backtests.iter().find(|c| c.family == family)
    }
}

fn validate(config: &RollingConfig, n: usize) -> Result<Vec<Family>> {
    if config.window == 0 {
        return Err(Error::domain("window must be at least 1"));
    }
    if config.stride == 0 {
        return Err(Error::domain("stride must be at least 1"));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::domain(format!("level must lie in (0, 1), got {}", config.level)));
    }
    let mut families = config.families.clone();
    families.sort();
    families.dedup();
    if families.is_empty() {
        return Err(Error::domain("no families selected"));
    }
    let required = config.window + MIN_FORECAST_STEPS;
    if n < required {
        return Err(Error::domain(format!(
            "rolling forecast with window {} needs at least {required} returns, got {n}",
            config.window
        )));
    }
    Ok(families)
}

pub fn rolling_forecast(returns: &ReturnSeries, config: &RollingConfig, opt: &OptimizerConfig) -> Result<RollingReport> {
    let data = returns.returns();
    let n = data.len();
    let families = validate(config, n)?;

    let mut steps: Vec<StepRecord> = Vec::with_capacity(n - config.window);
    let mut current: Vec<(ModelParams, f64)> = Vec::new();
    let mut n_refits = 0;
    for (k, t) in (config.window..n).enumerate() {
        if k % config.stride == 0 {
            let train = &data[t - config.window..t];
            current = families
                .iter()
                .map(|&family| {
                    let fit = fit_mle(train, family, opt)?;
                    if !fit.converged {
                        warn!("{} fit for step {t} did not converge", family);
                    }
                    let var = value_at_risk(&fit.params, config.level)?.value;
                    Ok((fit.params, var))
                })
                .collect::<Result<_>>()?;
            n_refits += 1;
            debug!("refit {n_refits} at step {t}");
        }
        let realized = data[t];
        let forecasts = families
            .iter()
            .zip(&current)
            .map(|(&family, (params, var))| {
                Ok(ModelForecast {
                    family,
                    var: *var,
                    violation: realized < -var,
                    log_loss: -params.log_pdf(realized)?,
                })
            })
            .collect::<Result<_>>()?;
        steps.push(StepRecord {
            index: t,
            date: returns.dates()[t],
            realized,
            forecasts,
        });
    }

    let column = |j: usize| -> Vec<&ModelForecast> { steps.iter().map(|s| &s.forecasts[j]).collect() };
    let mut backtests = Vec::with_capacity(families.len());
    let mut losses = Vec::with_capacity(families.len());
    for (j, &family) in families.iter().enumerate() {
        let col = column(j);
        let loss: Vec<f64> = col.iter().map(|f| f.log_loss).collect();
        let backtest = backtest_violations(col.iter().map(|f| f.violation).collect(), config.level)?;
        backtests.push(FamilyBacktest {
            family,
            mean_log_loss: loss.iter().sum::<f64>() / loss.len() as f64,
            backtest,
        });
        losses.push(loss);
    }
    let mut comparisons = Vec::new();
    for i in 0..families.len() {
        for j in (i + 1)..families.len() {
            comparisons.push(DmComparison {
                a: families[i],
                b: families[j],
                test: diebold_mariano(&losses[i], &losses[j], 1)?,
            });
        }
    }

    Ok(RollingReport {
        asset_id: returns.asset_id().to_string(),
        window_length: config.window,
        stride: config.stride,
        level: config.level,
        families,
        n_refits,
        steps,
        backtests,
        comparisons,
    })
}
