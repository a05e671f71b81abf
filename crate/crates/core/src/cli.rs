//! Command-line front end: argument parsing, the serializable run
//! configuration, and dispatch to the library.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, ModelParams};
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, OptimizerConfig, DEFAULT_SEED};
use crate::inference::{anderson_darling, jarque_bera, ks_test};
use crate::pipeline::{
    batch_compare, load_prices, prices_from_returns, rolling_forecast, summary_stats, to_log_returns, CsvSchema,
    ReturnSeries, RollingConfig,
};
use crate::report::{self, fmt_num, Format, Table};
use crate::risk::{backtest, value_at_risk, var_relative_error, VarEstimate};
use crate::{BehavioralTParams, LaplaceParams, NormalParams, StudentTParams};

/// Environment variable holding the log filter (e.g. `info`, `debug`).
pub const LOG_ENV: &str = "HEAVYTAIL_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "heavytail",
    version,
    about = "Heavy-tailed return models: fitting, tests, VaR backtests and rolling forecasts",
    after_help = "Set HEAVYTAIL_LOG=info (or debug) for progress logging. \
                  The default seed is 2024."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptive statistics and the normality battery (JB, KS, AD)
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Maximum-likelihood fits with standard errors (default: all families)
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// AIC ranking per asset plus a best-model tally (default: normal, laplace, student-t)
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Value-at-Risk from fitted models against the empirical quantile (default: student-t)
    Var {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        risk: LevelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// In-sample VaR backtest with Kupiec and Christoffersen tests (default: student-t)
    Backtest {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        risk: LevelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rolling out-of-sample VaR and log-loss forecasts (default: normal, student-t)
    Roll {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        risk: LevelArgs,
        /// Estimation window length
        #[arg(long, default_value_t = 1000)]
        window: usize,
        /// Refit every STRIDE steps
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate a price path from a model (columns: date, close, log_return)
    Simulate {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        /// Scale σ (Normal, Student's t, behavioral t)
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 5.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Laplace scale
        #[arg(long, default_value_t = 0.01)]
        b: f64,
        /// Number of returns
        #[arg(long, default_value_t = 2500)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Price file(s); each file is one asset named by its file stem
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value = "date")]
    pub date_col: String,
    #[arg(long, default_value = "close")]
    pub price_col: String,
    #[arg(long, default_value = "%Y-%m-%d")]
    pub date_format: String,
    /// Field delimiter (single byte)
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// normal | laplace | student-t | behavioral-t (repeatable)
    #[arg(long, value_parser = parse_family)]
    pub family: Vec<Family>,
    /// Seed for the optimizer's multistart jitter
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of optimizer starts
    #[arg(long, default_value_t = 5)]
    pub starts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LevelArgs {
    /// VaR confidence level
    #[arg(long, default_value_t = 0.99)]
    pub level: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse::<Family>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Stats,
    Fit,
    Compare,
    Var,
    Backtest,
    Roll,
    Simulate,
}

/// Everything needed to reproduce a run; written next to the report as
/// `<out>.config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Verb,
    pub inputs: Vec<PathBuf>,
    pub schema: CsvSchema,
    pub families: Vec<Family>,
    pub level: f64,
    pub window: usize,
    pub stride: usize,
    pub seed: u64,
    pub multistart: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub simulate: Option<SimulationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub params: ModelParams,
    pub n: usize,
    pub start_price: f64,
}

const SIM_START_PRICE: f64 = 100.0;

impl RunConfig {
    fn base(command: Verb, output: OutputArgs) -> RunConfig {
        RunConfig {
            command,
            inputs: Vec::new(),
            schema: CsvSchema::default(),
            families: Vec::new(),
            level: 0.99,
            window: 1000,
            stride: 1,
            seed: DEFAULT_SEED,
            multistart: OptimizerConfig::default().multistart_count,
            out: output.out,
            format: output.format,
            simulate: None,
        }
    }

    fn with_input(mut self, input: InputArgs) -> Result<RunConfig> {
        if !input.delimiter.is_ascii() {
            return Err(Error::domain(format!("delimiter must be a single ASCII character, got '{}'", input.delimiter)));
        }
        self.inputs = input.input;
        self.schema = CsvSchema {
            date_col: input.date_col,
            price_col: input.price_col,
            date_format: input.date_format,
            delimiter: input.delimiter as u8,
        };
        Ok(self)
    }

    fn with_model(mut self, model: ModelArgs, default: &[Family]) -> RunConfig {
        self.families = if model.family.is_empty() {
            default.to_vec()
        } else {
            model.family
        };
        self.seed = model.seed;
        self.multistart = model.starts;
        self
    }

    pub fn from_command(command: Command) -> Result<RunConfig> {
        use Family::*;
        let cfg = match command {
            Command::Stats { input, output } => RunConfig::base(Verb::Stats, output).with_input(input)?,
            Command::Fit { input, model, output } => RunConfig::base(Verb::Fit, output)
                .with_input(input)?
                .with_model(model, &Family::ALL),
            Command::Compare { input, model, output } => RunConfig::base(Verb::Compare, output)
                .with_input(input)?
                .with_model(model, &[Normal, Laplace, StudentT]),
            Command::Var { input, model, risk, output } => RunConfig {
                level: risk.level,
                ..RunConfig::base(Verb::Var, output)
                    .with_input(input)?
                    .with_model(model, &[StudentT])
            },
            Command::Backtest { input, model, risk, output } => RunConfig {
                level: risk.level,
                ..RunConfig::base(Verb::Backtest, output)
                    .with_input(input)?
                    .with_model(model, &[StudentT])
            },
            Command::Roll {
                input,
                model,
                risk,
                window,
                stride,
                output,
            } => RunConfig {
                level: risk.level,
                window,
                stride,
                ..RunConfig::base(Verb::Roll, output)
                    .with_input(input)?
                    .with_model(model, &[Normal, StudentT])
            },
            Command::Simulate {
                family,
                mu,
                sigma,
                nu,
                alpha,
                b,
                n,
                seed,
                output,
            } => {
                let params: ModelParams = match family {
                    Normal => NormalParams::new(mu, sigma)?.into(),
                    Laplace => LaplaceParams::new(mu, b)?.into(),
                    StudentT => StudentTParams::new(mu, sigma, nu)?.into(),
                    BehavioralT => BehavioralTParams::new(mu, sigma, nu, alpha)?.into(),
                };
                RunConfig {
                    families: vec![family],
                    seed,
                    simulate: Some(SimulationSpec {
                        params,
                        n,
                        start_price: SIM_START_PRICE,
                    }),
                    ..RunConfig::base(Verb::Simulate, output)
                }
            }
        };
        Ok(cfg)
    }

    fn optimizer(&self) -> Result<OptimizerConfig> {
        let c = OptimizerConfig::default()
            .with_seed(self.seed)
            .with_multistart(self.multistart);
        c.validate()?;
        Ok(c)
    }
}

/// A rendered artifact: the main document and an optional summary table.
struct Rendered {
    main: String,
    summary: Option<String>,
}

fn render<T: Serialize>(format: Format, structured: &T, table: Table, summary: Option<Table>) -> Result<Rendered> {
    Ok(match format {
        Format::Structured => Rendered {
            main: report::to_structured(structured)?,
            summary: None,
        },
        Format::Csv => Rendered {
            main: table.to_csv()?,
            summary: summary.map(|t| t.to_csv()).transpose()?,
        },
    })
}

fn load_universe(cfg: &RunConfig) -> Result<Vec<ReturnSeries>> {
    cfg.inputs
        .iter()
        .map(|p| {
            let prices = load_prices(p, &cfg.schema)?;
            info!("loaded {} prices from {}", prices.len(), p.display());
            to_log_returns(&prices)
        })
        .collect()
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(cfg: &RunConfig, rendered: Rendered) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            write_file(path, &rendered.main)?;
            if let Some(summary) = &rendered.summary {
                write_file(&with_suffix(path, ".summary.csv"), summary)?;
            }
            write_file(&with_suffix(path, ".config.json"), &report::to_structured(cfg)?)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            let stdout_err = |source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            };
            out.write_all(rendered.main.as_bytes()).map_err(stdout_err)?;
            if let Some(summary) = &rendered.summary {
                out.write_all(b"\n").map_err(stdout_err)?;
                out.write_all(summary.as_bytes()).map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsEntry {
    asset: String,
    stats: crate::pipeline::SummaryStats,
    normality: Option<[crate::inference::TestResult; 3]>,
}

fn run_stats(cfg: &RunConfig) -> Result<Rendered> {
    let universe = load_universe(cfg)?;
    let mut rows = Vec::new();
    for s in &universe {
        let stats = summary_stats(s.returns())?;
        let normality = if stats.n_obs >= 10 && stats.std_dev > 0.0 {
            // normal MLE: sample mean and the 1/n standard deviation
            let n = stats.n_obs as f64;
            let sigma = stats.std_dev * ((n - 1.0) / n).sqrt();
            let p: ModelParams = NormalParams::new(stats.mean, sigma)?.into();
            Some([
                jarque_bera(s.returns())?,
                ks_test(s.returns(), &p)?,
                anderson_darling(s.returns(), &p)?,
            ])
        } else {
            None
        };
        rows.push(StatsEntry {
            asset: s.asset_id().to_string(),
            stats,
            normality,
        });
    }
    let table_rows: Vec<_> = rows
        .iter()
        .map(|r| (r.asset.clone(), r.stats.clone(), r.normality.clone()))
        .collect();
    render(cfg.format, &rows, report::stats_table(&table_rows), None)
}

#[derive(Serialize)]
struct FitEntry {
    asset: String,
    fit: crate::estimation::FitResult,
}

fn run_fit(cfg: &RunConfig) -> Result<Rendered> {
    let opt = cfg.optimizer()?;
    let mut rows = Vec::new();
    for s in &load_universe(cfg)? {
        for &family in &cfg.families {
            info!("fitting {family} to {}", s.asset_id());
            rows.push(FitEntry {
                asset: s.asset_id().to_string(),
                fit: fit_mle(s.returns(), family, &opt)?,
            });
        }
    }
    let table_rows: Vec<_> = rows.iter().map(|r| (r.asset.clone(), r.fit.clone())).collect();
    render(cfg.format, &rows, report::fit_table(&table_rows), None)
}

fn run_compare(cfg: &RunConfig) -> Result<Rendered> {
    let opt = cfg.optimizer()?;
    let universe = load_universe(cfg)?;
    let batch = batch_compare(&universe, &cfg.families, &opt)?;
    for a in &batch.assets {
        if let Some(e) = &a.error {
            log::warn!("{}: {e}", a.asset_id);
        }
    }
    let rows: Vec<_> = batch
        .assets
        .iter()
        .filter_map(|a| a.comparison.as_ref().map(|c| (a.asset_id.clone(), c)))
        .collect();
    let table = report::comparison_table(&rows);
    let summary = report::batch_summary_table(&batch);
    render(cfg.format, &batch, table, Some(summary))
}

#[derive(Serialize)]
struct VarEntry {
    asset: String,
    estimate: VarEstimate,
    /// Loss-positive empirical quantile of the sample.
    empirical_var: f64,
    relative_error: f64,
}

fn run_var(cfg: &RunConfig) -> Result<Rendered> {
    let opt = cfg.optimizer()?;
    let mut rows = Vec::new();
    for s in &load_universe(cfg)? {
        let empirical = -crate::sample_stats::empirical_quantile(s.returns(), 1.0 - cfg.level);
        for &family in &cfg.families {
            let fit = fit_mle(s.returns(), family, &opt)?;
            let estimate = value_at_risk(&fit.params, cfg.level)?;
            let reference = VarEstimate {
                value: empirical,
                ..estimate
            };
            rows.push(VarEntry {
                asset: s.asset_id().to_string(),
                relative_error: var_relative_error(&estimate, &reference).unwrap_or(f64::NAN),
                estimate,
                empirical_var: empirical,
            });
        }
    }
    let mut t = Table::new(["asset", "family", "level", "var", "empirical_var", "relative_error"]);
    for r in &rows {
        t.push(vec![
            r.asset.clone(),
            r.estimate.model.to_string(),
            fmt_num(r.estimate.level),
            fmt_num(r.estimate.value),
            fmt_num(r.empirical_var),
            fmt_num(r.relative_error),
        ]);
    }
    render(cfg.format, &rows, t, None)
}

#[derive(Serialize)]
struct BacktestEntry {
    asset: String,
    family: Family,
    params: ModelParams,
    report: crate::risk::BacktestReport,
}

fn run_backtest(cfg: &RunConfig) -> Result<Rendered> {
    let opt = cfg.optimizer()?;
    let mut rows = Vec::new();
    for s in &load_universe(cfg)? {
        for &family in &cfg.families {
            let fit = fit_mle(s.returns(), family, &opt)?;
            rows.push(BacktestEntry {
                asset: s.asset_id().to_string(),
                family,
                report: backtest(s.returns(), &fit.params, cfg.level)?,
                params: fit.params,
            });
        }
    }
    let table_rows: Vec<_> = rows.iter().map(|r| (r.asset.clone(), r.family, &r.report)).collect();
    render(cfg.format, &rows, report::backtest_table(&table_rows), None)
}

fn run_roll(cfg: &RunConfig) -> Result<Rendered> {
    let opt = cfg.optimizer()?;
    let roll = RollingConfig {
        window: cfg.window,
        stride: cfg.stride,
        level: cfg.level,
        families: cfg.families.clone(),
    };
    let reports = load_universe(cfg)?
        .iter()
        .map(|s| {
            info!("rolling {} over {} returns", s.asset_id(), s.len());
            rolling_forecast(s, &roll, &opt)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = report::rolling_table(&reports);
    let summary = report::rolling_summary_table(&reports);
    render(cfg.format, &reports, table, Some(summary))
}

#[derive(Serialize)]
struct SimRow {
    date: chrono::NaiveDate,
    close: f64,
    log_return: Option<f64>,
}

fn run_simulate(cfg: &RunConfig) -> Result<Rendered> {
    let spec = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Error::domain("simulate run without a model"))?;
    let draws = spec.params.sample(spec.n, cfg.seed)?;
    let returns = ReturnSeries::synthetic("simulated", draws)?;
    let prices = prices_from_returns(&returns, spec.start_price)?;
    let rows: Vec<SimRow> = prices
        .dates()
        .iter()
        .zip(prices.prices())
        .enumerate()
        .map(|(i, (d, p))| SimRow {
            date: *d,
            close: *p,
            log_return: (i > 0).then(|| returns.returns()[i - 1]),
        })
        .collect();
    let mut t = Table::new(["date", "close", "log_return"]);
    for r in &rows {
        t.push(vec![
            r.date.to_string(),
            fmt_num(r.close),
            r.log_return.map(fmt_num).unwrap_or_default(),
        ]);
    }
    render(cfg.format, &rows, t, None)
}

/// Execute a run and write its artifacts.
pub fn run(cfg: &RunConfig) -> Result<()> {
    if cfg.command != Verb::Stats {
        eprintln!("seed: {}", cfg.seed);
    }
    let rendered = match cfg.command {
        Verb::Stats => run_stats(cfg)?,
        Verb::Fit => run_fit(cfg)?,
        Verb::Compare => run_compare(cfg)?,
        Verb::Var => run_var(cfg)?,
        Verb::Backtest => run_backtest(cfg)?,
        Verb::Roll => run_roll(cfg)?,
        Verb::Simulate => run_simulate(cfg)?,
    };
    emit(cfg, rendered)
}

/// Parse `args`, run, and map the outcome to an exit status: 0 on success,
/// 1 on data, domain or I/O errors, 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let outcome = RunConfig::from_command(cli.command).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
