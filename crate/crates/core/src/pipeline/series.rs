//! Price and return series, and CSV ingestion.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column mapping for delimited price files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_col: String,
    pub price_col: String,
    /// `chrono` format string.
    pub date_format: String,
    pub delimiter: u8,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            date_col: "date".into(),
            price_col: "close".into(),
            date_format: "%Y-%m-%d".into(),
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    asset_id: String,
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Build from date-sorted observations; dates must be strictly increasing
    /// and prices finite and positive.
    pub fn new(asset_id: impl Into<String>, dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::domain(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!("dates not strictly increasing at {}", w[1])));
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Data(format!(
                "nonpositive price {} on {}",
                prices[i], dates[i]
            )));
        }
        Ok(PriceSeries {
            asset_id: asset_id.into(),
            dates,
            prices,
        })
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    asset_id: String,
    dates: Vec<NaiveDate>,
    returns: Vec<f64>,
}

/// First date assigned to synthetic series.
pub fn synthetic_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date")
}

impl ReturnSeries {
    pub fn new(asset_id: impl Into<String>, dates: Vec<NaiveDate>, returns: Vec<f64>) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::domain("return series is empty"));
        }
        if dates.len() != returns.len() {
            return Err(Error::domain(format!(
                "{} dates but {} returns",
                dates.len(),
                returns.len()
            )));
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::Data(format!("return on {} is not finite", dates[i])));
        }
        Ok(ReturnSeries {
            asset_id: asset_id.into(),
            dates,
            returns,
        })
    }

    /// Returns dated on consecutive calendar days from 2000-01-01.
    pub fn synthetic(asset_id: impl Into<String>, returns: Vec<f64>) -> Result<Self> {
        let start = synthetic_start_date();
        let dates = (0..returns.len()).map(|i| start + Duration::days(i as i64)).collect();
        ReturnSeries::new(asset_id, dates, returns)
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Load a price series from a delimited file with a header row. The asset
/// id is the file stem.
pub fn load_prices(path: &Path, schema: &CsvSchema) -> Result<PriceSeries> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let asset_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "asset".into());
    load_prices_from_reader(file, schema, asset_id).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parse, validate and date-sort a price table. Every unparseable row is
/// reported by line number; duplicate dates and nonpositive prices are
/// rejected.
pub fn load_prices_from_reader<R: Read>(reader: R, schema: &CsvSchema, asset_id: impl Into<String>) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("missing column '{name}' (found: {})", headers.iter().collect::<Vec<_>>().join(", "))))
    };
    let date_idx = column(&schema.date_col)?;
    let price_idx = column(&schema.price_col)?;

    let mut rows: Vec<(NaiveDate, f64, u64)> = Vec::new();
    let mut bad = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // header is line 1
        let fallback_line = i as u64 + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(fallback_line, |p| p.line());
                bad.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = record.position().map_or(fallback_line, |p| p.line());
        let date_s = record.get(date_idx).unwrap_or("");
        let price_s = record.get(price_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_s, &schema.date_format);
        let price = price_s.parse::<f64>();
        match (date, price) {
            (Ok(d), Ok(p)) if p.is_finite() => rows.push((d, p, line)),
            (Err(_), _) => bad.push(format!("line {line}: unparseable date '{date_s}'")),
            _ => bad.push(format!("line {line}: unparseable price '{price_s}'")),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Data(format!("{} bad row(s): {}", bad.len(), bad.join("; "))));
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    if let Some((d, p, line)) = rows.iter().find(|r| r.1 <= 0.0) {
        return Err(Error::Data(format!("line {line}: nonpositive price {p} on {d}")));
    }
    let mut seen: HashMap<NaiveDate, u64> = HashMap::new();
    for (d, _, line) in &rows {
        if let Some(first) = seen.insert(*d, *line) {
            return Err(Error::Data(format!("duplicate date {d} on lines {first} and {line}")));
        }
    }
    rows.sort_by_key(|r| r.0);
    let (dates, prices) = rows.into_iter().map(|(d, p, _)| (d, p)).unzip();
    PriceSeries::new(asset_id, dates, prices)
}

/// `r_t = ln(P_t / P_{t−1})`, dated at `t`.
pub fn to_log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::domain(format!(
            "need at least 2 prices for returns, got {}",
            prices.len()
        )));
    }
    let returns = prices.prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    ReturnSeries::new(prices.asset_id.clone(), prices.dates[1..].to_vec(), returns)
}

/// Price path `P_0 · exp(cumsum r)` with `P_0` dated the day before the
/// first return.
pub fn prices_from_returns(returns: &ReturnSeries, start_price: f64) -> Result<PriceSeries> {
    if !(start_price.is_finite() && start_price > 0.0) {
        return Err(Error::domain(format!("start price must be positive, got {start_price}")));
    }
    let mut dates = Vec::with_capacity(returns.len() + 1);
    dates.push(returns.dates[0] - Duration::days(1));
    dates.extend_from_slice(&returns.dates);
    let mut prices = Vec::with_capacity(returns.len() + 1);
    let mut log_p = start_price.ln();
    prices.push(start_price);
    for r in &returns.returns {
        log_p += r;
        prices.push(log_p.exp());
    }
    PriceSeries::new(returns.asset_id.clone(), dates, prices)
}
