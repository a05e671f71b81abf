//! Heavy-tailed return modelling: Normal, Laplace, Student's t and
//! Prelec-weighted Student's t distributions, maximum-likelihood fitting
//! with Fisher-information standard errors, distributional and nested-model
//! tests, Value-at-Risk backtesting and rolling out-of-sample evaluation.

pub mod behavioral;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod inference;
mod optimize;
pub mod pipeline;
pub mod report;
pub mod risk;
mod sample_stats;
pub mod special;

pub use behavioral::{AdjustmentParams, BehavioralTParams, WeightingParams};
pub use distributions::{Family, LaplaceParams, ModelParams, NormalParams, StudentTParams};
pub use error::{Error, Result};
pub use estimation::{fit_mle, FitResult, OptimizerConfig, DEFAULT_SEED};
