//! Serialization of results as delimited tables or structured JSON.
//! Numbers are written with 10 significant digits.

use serde::Serialize;
use serde_json::Value;

use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::inference::{ModelComparison, TestResult};
use crate::pipeline::{BatchReport, RollingReport, SummaryStats};
use crate::risk::BacktestReport;

pub const SIGNIFICANT_DIGITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Structured,
}

/// Round to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Shortest decimal text of `round_sig(x)`; `NaN`, `inf` and `-inf` for
/// non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        let r = round_sig(x);
        // avoid "-0"
        if r == 0.0 {
            "0".into()
        } else {
            r.to_string()
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Data(format!("csv serialization failed: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Data(format!("csv serialization failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (None, None, Some(f)) => serde_json::Number::from_f64(round_sig(f))
                .map(Value::Number)
                .unwrap_or(Value::Null),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float rounded to 10 significant digits. Object
/// keys are sorted, so the output is stable.
pub fn to_structured<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Data(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&round_value(v))
        .map_err(|e| Error::Data(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn stats_table(rows: &[(String, SummaryStats, Option<[TestResult; 3]>)]) -> Table {
    let mut t = Table::new([
        "asset", "n_obs", "mean", "std_dev", "skewness", "kurtosis", "min", "max", "jb_stat", "jb_p", "ks_stat",
        "ks_p", "ad_stat", "ad_p",
    ]);
    for (asset, s, tests) in rows {
        let mut row = vec![
            asset.clone(),
            s.n_obs.to_string(),
            fmt_num(s.mean),
            fmt_num(s.std_dev),
            fmt_opt(s.skewness),
            fmt_opt(s.kurtosis),
            fmt_num(s.min),
            fmt_num(s.max),
        ];
        match tests {
            Some(ts) => {
                for r in ts {
                    row.push(fmt_num(r.statistic));
                    row.push(fmt_num(r.p_value));
                }
            }
            None => row.extend(std::iter::repeat(String::new()).take(6)),
        }
        t.push(row);
    }
    t
}

/// Column order: asset, family, n_obs, mu, scale, nu, alpha, the matching
/// standard errors, loglik, aic, bic, converged, iterations, boundary.
/// `scale` is σ, or `b` for the Laplace family; absent parameters are empty.
pub fn fit_table(rows: &[(String, FitResult)]) -> Table {
    let mut t = Table::new([
        "asset", "family", "n_obs", "mu", "scale", "nu", "alpha", "se_mu", "se_scale", "se_nu", "se_alpha", "loglik",
        "aic", "bic", "converged", "iterations", "boundary",
    ]);
    for (asset, f) in rows {
        let pad = |v: &[f64]| -> Vec<String> { (0..4).map(|i| v.get(i).map(|x| fmt_num(*x)).unwrap_or_default()).collect() };
        let mut row = vec![asset.clone(), f.family().to_string(), f.n_obs.to_string()];
        row.extend(pad(&f.params.to_vec()));
        row.extend(pad(&f.se));
        row.extend([
            fmt_num(f.loglik),
            fmt_num(f.aic),
            fmt_num(f.bic),
            f.converged.to_string(),
            f.iterations.to_string(),
            f.boundary.to_string(),
        ]);
        t.push(row);
    }
    t
}

pub fn comparison_table(rows: &[(String, &ModelComparison)]) -> Table {
    let mut t = Table::new(["asset", "rank", "family", "n_params", "loglik", "aic", "bic", "delta_aic"]);
    for (asset, c) in rows {
        let best = c.fits[0].aic;
        for (i, f) in c.fits.iter().enumerate() {
            t.push(vec![
                asset.clone(),
                (i + 1).to_string(),
                f.family().to_string(),
                f.n_free().to_string(),
                fmt_num(f.loglik),
                fmt_num(f.aic),
                fmt_num(f.bic),
                fmt_num(f.aic - best),
            ]);
        }
    }
    t
}

pub fn batch_summary_table(report: &BatchReport) -> Table {
    let mut t = Table::new(["family", "best_count", "best_pct", "avg_aic", "n_fitted"]);
    for s in &report.summary {
        t.push(vec![
            s.family.to_string(),
            s.best_count.to_string(),
            fmt_num(s.best_pct),
            fmt_num(s.avg_aic),
            s.n_fitted.to_string(),
        ]);
    }
    t
}

pub fn backtest_table(rows: &[(String, Family, &BacktestReport)]) -> Table {
    let mut t = Table::new([
        "asset",
        "family",
        "level",
        "n_obs",
        "violations",
        "violation_rate",
        "kupiec_stat",
        "kupiec_p",
        "independence_stat",
        "independence_p",
        "cc_stat",
        "cc_p",
    ]);
    for (asset, family, b) in rows {
        t.push(vec![
            asset.clone(),
            family.to_string(),
            fmt_num(b.level),
            b.n_obs.to_string(),
            b.violations.to_string(),
            fmt_num(b.violation_rate),
            fmt_num(b.kupiec.statistic),
            fmt_num(b.kupiec.p_value),
            fmt_num(b.independence.statistic),
            fmt_num(b.independence.p_value),
            fmt_num(b.conditional_coverage.statistic),
            fmt_num(b.conditional_coverage.p_value),
        ]);
    }
    t
}

/// One row per forecast step; per family the VaR, violation flag and
/// log-loss columns, suffixed with the family name.
pub fn rolling_table(reports: &[RollingReport]) -> Table {
    let families = reports.first().map(|r| r.families.clone()).unwrap_or_default();
    let mut header = vec!["asset".to_string(), "date".into(), "realized".into()];
    for f in &families {
        header.push(format!("var_{f}"));
        header.push(format!("violation_{f}"));
        header.push(format!("logloss_{f}"));
    }
    let mut t = Table::new(header);
    for r in reports {
        for s in &r.steps {
            let mut row = vec![r.asset_id.clone(), s.date.to_string(), fmt_num(s.realized)];
            for fc in &s.forecasts {
                row.push(fmt_num(fc.var));
                row.push(u8::from(fc.violation).to_string());
                row.push(fmt_num(fc.log_loss));
            }
            t.push(row);
        }
    }
    t
}

/// Long-format summary of rolling runs: `asset, metric, subject, value`.
pub fn rolling_summary_table(reports: &[RollingReport]) -> Table {
    let mut t = Table::new(["asset", "metric", "subject", "value"]);
    for r in reports {
        let mut put = |metric: &str, subject: String, value: String| {
            t.push(vec![r.asset_id.clone(), metric.into(), subject, value]);
        };
        put("steps", String::new(), r.steps.len().to_string());
        put("refits", String::new(), r.n_refits.to_string());
        for b in &r.backtests {
            let f = b.family.to_string();
            put("violations", f.clone(), b.backtest.violations.to_string());
            put("violation_rate", f.clone(), fmt_num(b.backtest.violation_rate));
            put("kupiec_stat", f.clone(), fmt_num(b.backtest.kupiec.statistic));
            put("kupiec_p", f.clone(), fmt_num(b.backtest.kupiec.p_value));
            put("cc_stat", f.clone(), fmt_num(b.backtest.conditional_coverage.statistic));
            put("cc_p", f.clone(), fmt_num(b.backtest.conditional_coverage.p_value));
            put("mean_log_loss", f, fmt_num(b.mean_log_loss));
        }
        for c in &r.comparisons {
            let pair = format!("{}|{}", c.a, c.b);
            put("dm_stat", pair.clone(), fmt_num(c.test.statistic));
            put("dm_p", pair, fmt_num(c.test.p_value));
        }
    }
    t
}
