//! Multi-asset model comparison with a best-model tally per family.

use serde::Serialize;

use super::series::ReturnSeries;
use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::estimation::OptimizerConfig;
use crate::inference::{compare_families, ModelComparison};

#[derive(Debug, Clone, Serialize)]
pub struct AssetComparison {
    pub asset_id: String,
    pub n_obs: usize,
    pub comparison: Option<ModelComparison>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySummary {
    pub family: Family,
    /// Assets on which this family has the lowest AIC.
    pub best_count: usize,
    /// `best_count` as a percentage of successfully compared assets.
    pub best_pct: f64,
    /// Mean AIC over the assets where this family was fitted.
    pub avg_aic: f64,
    pub n_fitted: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub families: Vec<Family>,
    pub n_assets: usize,
    pub n_compared: usize,
    pub summary: Vec<FamilySummary>,
    /// Sorted by asset id.
    pub assets: Vec<AssetComparison>,
}

impl BatchReport {
    pub fn summary_for(&self, family: Family) -> Option<&FamilySummary> {
        self.summary.iter().find(|s| s.family == family)
    }
}

/// Compare `families` on every series. Per-asset failures are recorded and
/// the aggregate covers the successful comparisons only.
pub fn batch_compare(universe: &[ReturnSeries], families: &[Family], config: &OptimizerConfig) -> Result<BatchReport> {
    if universe.is_empty() {
        return Err(Error::domain("empty universe"));
    }
    let mut families = families.to_vec();
    families.sort();
    families.dedup();

    let mut order: Vec<&ReturnSeries> = universe.iter().collect();
    order.sort_by(|a, b| a.asset_id().cmp(b.asset_id()));
    let assets: Vec<AssetComparison> = order
        .into_iter()
        .map(|s| match compare_families(s.returns(), &families, config) {
            Ok(c) => AssetComparison {
                asset_id: s.asset_id().to_string(),
                n_obs: s.len(),
                comparison: Some(c),
                error: None,
            },
            Err(e) => AssetComparison {
                asset_id: s.asset_id().to_string(),
                n_obs: s.len(),
                comparison: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let compared: Vec<&ModelComparison> = assets.iter().filter_map(|a| a.comparison.as_ref()).collect();
    let n_compared = compared.len();
    let summary = families
        .iter()
        .map(|&family| {
            let best_count = compared.iter().filter(|c| c.best_family == family).count();
            let aics: Vec<f64> = compared.iter().filter_map(|c| c.fit(family)).map(|f| f.aic).collect();
            FamilySummary {
                family,
                best_count,
                best_pct: if n_compared > 0 {
                    100.0 * best_count as f64 / n_compared as f64
                } else {
                    0.0
                },
                avg_aic: if aics.is_empty() {
                    f64::NAN
                } else {
                    aics.iter().sum::<f64>() / aics.len() as f64
                },
                n_fitted: aics.len(),
            }
        })
        .collect();

    Ok(BatchReport {
        families,
        n_assets: assets.len(),
        n_compared,
        summary,
        assets,
    })
}
