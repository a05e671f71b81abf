//! Data ingestion, descriptive statistics, rolling out-of-sample
//! forecasting and multi-asset studies.

mod batch;
mod rolling;
mod series;
mod stats;

pub use batch::{batch_compare, AssetComparison, BatchReport, FamilySummary};
pub use rolling::{
    rolling_forecast, DmComparison, FamilyBacktest, ModelForecast, RollingConfig, RollingReport, StepRecord,
    MIN_FORECAST_STEPS,
};
pub use series::{
    load_prices, load_prices_from_reader, prices_from_returns, synthetic_start_date, to_log_returns, CsvSchema,
    PriceSeries, ReturnSeries,
};
pub use stats::{summary_stats, SummaryStats};
