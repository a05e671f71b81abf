mod common;

use std::io::Write;

use chrono::NaiveDate;
use common::t;
use heavytail::pipeline::{
    batch_compare, load_prices, load_prices_from_reader, prices_from_returns, rolling_forecast, summary_stats,
    to_log_returns, CsvSchema, PriceSeries, ReturnSeries, RollingConfig,
};
use heavytail::report::{rolling_table, to_structured};
use heavytail::{Error, Family, ModelParams, NormalParams, OptimizerConfig};

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn parse(text: &str) -> heavytail::Result<PriceSeries> {
    load_prices_from_reader(text.as_bytes(), &CsvSchema::default(), "x")
}

fn fast() -> OptimizerConfig {
    OptimizerConfig::default().with_multistart(1)
}

#[test]
fn loads_two_rows() {
    let p = parse("date,close\n2024-01-02,100\n2024-01-03,101.5\n").unwrap();
    assert_eq!(p.len(), 2);
    assert_eq!(p.prices(), &[100.0, 101.5]);
    assert_eq!(p.dates()[1], d(2024, 1, 3));
}

#[test]
fn shuffled_rows_are_sorted() {
    let p = parse("close,date,volume\n3,2024-01-05,1\n1,2024-01-02,1\n2,2024-01-03,1\n").unwrap();
    assert_eq!(p.prices(), &[1.0, 2.0, 3.0]);
    assert!(p.dates().windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn rejects_bad_input() {
    let err = parse("date,close\n2024-01-02,100\n2024-01-02,101\n").unwrap_err();
    assert!(matches!(&err, Error::Data(m) if m.contains("2024-01-02")), "{err}");

    let err = parse("date,close\n2024-01-02,100\nnot-a-date,1\n2024-01-04,abc\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 3") && msg.contains("line 4"), "{msg}");

    let err = parse("date,close\n2024-01-02,100\n2024-01-03,0\n").unwrap_err();
    assert!(err.to_string().contains("nonpositive"), "{err}");
    assert!(parse("date,price\n2024-01-02,100\n").unwrap_err().to_string().contains("close"));
    assert!(parse("date,close\n").is_err());
}

#[test]
fn custom_schema_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("SPY.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "Day;Adj Close\n02/01/2024;10\n03/01/2024;11").unwrap();
    let schema = CsvSchema {
        date_col: "Day".into(),
        price_col: "Adj Close".into(),
        date_format: "%d/%m/%Y".into(),
        delimiter: b';',
    };
    let p = load_prices(&path, &schema).unwrap();
    assert_eq!(p.asset_id(), "SPY");
    assert_eq!(p.dates()[0], d(2024, 1, 2));
    let missing = dir.path().join("nope.csv");
    let err = load_prices(&missing, &schema).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("nope.csv"));
}

#[test]
fn log_returns() {
    let p = PriceSeries::new("a", vec![d(2024, 1, 1), d(2024, 1, 2)], vec![100.0, 110.0]).unwrap();
    let r = to_log_returns(&p).unwrap();
    assert_eq!(r.returns(), &[1.1f64.ln()]);
    assert_eq!(r.dates(), &[d(2024, 1, 2)]);
    assert!((r.returns()[0] - 0.09531).abs() < 1e-5);

    let dates: Vec<NaiveDate> = (1..=5).map(|k| d(2024, 2, k)).collect();
    let flat = PriceSeries::new("a", dates.clone(), vec![7.0; 5]).unwrap();
    let r = to_log_returns(&flat).unwrap();
    assert_eq!(r.len(), 4);
    assert!(r.returns().iter().all(|&v| v == 0.0));
    let one = PriceSeries::new("a", vec![d(2024, 1, 1)], vec![1.0]).unwrap();
    assert!(matches!(to_log_returns(&one), Err(Error::Domain(_))));
    assert!(PriceSeries::new("a", vec![dates[1], dates[0]], vec![1.0, 2.0]).is_err());
    assert!(PriceSeries::new("a", dates[..2].to_vec(), vec![1.0, -2.0]).is_err());
}

#[test]
fn returns_roundtrip_through_prices() {
    let x = t(0.0, 0.01, 4.0).sample(300, 1).unwrap();
    let r = ReturnSeries::synthetic("sim", x.clone()).unwrap();
    let back = to_log_returns(&prices_from_returns(&r, 100.0).unwrap()).unwrap();
    assert_eq!(back.dates(), r.dates());
    for (a, b) in back.returns().iter().zip(&x) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn summary_stats_against_brute_force() {
    let s = summary_stats(&[0.01, -0.01]).unwrap();
    assert_eq!(s.mean, 0.0);
    let sym: Vec<f64> = (1..=50).flat_map(|k| [k as f64 * 1e-3, -(k as f64) * 1e-3]).collect();
    assert!(summary_stats(&sym).unwrap().skewness.unwrap().abs() < 1e-12);

    let x = t(0.0005, 0.012, 6.0).sample(5_000, 3).unwrap();
    let s = summary_stats(&x).unwrap();
    let n = x.len() as f64;
    let mut mean = 0.0;
    for v in &x {
        mean += v;
    }
    mean /= n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &x {
        let e = v - mean;
        m2 += e * e;
        m3 += e * e * e;
        m4 += e * e * e * e;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    assert!((s.mean - mean).abs() < 1e-12);
    assert!((s.std_dev - (m2 * n / (n - 1.0)).sqrt()).abs() < 1e-12);
    assert!((s.skewness.unwrap() - m3 / m2.powf(1.5)).abs() < 1e-12);
    assert!((s.kurtosis.unwrap() - m4 / (m2 * m2)).abs() < 1e-12);
    assert!(s.min <= s.mean && s.mean <= s.max);

    let c = summary_stats(&[0.02; 10]).unwrap();
    assert_eq!(c.std_dev, 0.0);
    assert!(c.skewness.is_none() && c.kurtosis.is_none());
    assert!(summary_stats(&[]).is_err());
}

#[test]
fn rolling_count_and_no_leakage() {
    let x = t(0.0, 0.01, 4.0).sample(1_100, 5).unwrap();
    let config = RollingConfig::default();
    assert_eq!(config.window, 1_000);
    let series = ReturnSeries::synthetic("a", x.clone()).unwrap();
    let report = rolling_forecast(&series, &config, &fast()).unwrap();
    assert_eq!(report.steps.len(), 100);
    assert_eq!(report.steps[0].index, 1_000);
    assert_eq!(report.n_refits, 100);
    for s in &report.steps {
        for f in &s.forecasts {
            assert_eq!(f.violation, s.realized < -f.var);
        }
    }

    // a sentinel at step 1050 changes nothing forecast at or before it
    let mut y = x.clone();
    y[1_050] = -0.5;
    let perturbed = rolling_forecast(&ReturnSeries::synthetic("a", y).unwrap(), &config, &fast()).unwrap();
    for (a, b) in report.steps.iter().zip(&perturbed.steps) {
        let same: Vec<bool> = a.forecasts.iter().zip(&b.forecasts).map(|(p, q)| p.var == q.var).collect();
        if a.index <= 1_050 {
            assert!(same.iter().all(|&s| s), "step {}", a.index);
        } else {
            assert!(same.iter().all(|&s| !s), "step {}", a.index);
        }
    }
    assert!(perturbed.steps[50].forecasts.iter().all(|f| f.violation));
}

#[test]
fn rolling_requires_enough_data() {
    let x = t(0.0, 0.01, 4.0).sample(1_020, 5).unwrap();
    let err = rolling_forecast(&ReturnSeries::synthetic("a", x).unwrap(), &RollingConfig::default(), &fast()).unwrap_err();
    assert!(matches!(&err, Error::Domain(m) if m.contains("1030")), "{err}");
}

#[test]
fn rolling_t_calibration_and_determinism() {
    let x = t(0.0, 0.01, 5.0).sample(2_500, 7).unwrap();
    let series = ReturnSeries::synthetic("a", x).unwrap();
    let config = RollingConfig {
        window: 500,
        stride: 10,
        ..RollingConfig::default()
    };
    let report = rolling_forecast(&series, &config, &fast()).unwrap();
    assert_eq!(report.steps.len(), 2_000);
    assert_eq!(report.n_refits, 200);
    let rate = report.backtest(Family::StudentT).unwrap().backtest.violation_rate;
    let band = 1.96 * (0.01f64 * 0.99 / 2_000.0).sqrt();
    assert!((rate - 0.01).abs() <= band, "{rate}");
    let dm = report.comparison(Family::Normal, Family::StudentT).unwrap();
    assert!(dm.test.p_value >= 0.0);

    let again = rolling_forecast(&series, &config, &fast()).unwrap();
    assert_eq!(to_structured(&report).unwrap(), to_structured(&again).unwrap());
    assert_eq!(rolling_table(&[report]).to_csv().unwrap(), rolling_table(&[again]).to_csv().unwrap());
}

#[test]
fn batch_aggregates() {
    assert!(batch_compare(&[], &[Family::Normal], &fast()).is_err());
    let normal: ModelParams = NormalParams::new(0.0, 0.01).unwrap().into();
    let universe = vec![
        ReturnSeries::synthetic("b", t(0.0, 0.01, 4.0).sample(2_000, 1).unwrap()).unwrap(),
        ReturnSeries::synthetic("a", normal.sample(2_000, 2).unwrap()).unwrap(),
        ReturnSeries::synthetic("c", vec![0.001; 100]).unwrap(),
    ];
    let fams = [Family::StudentT, Family::Normal, Family::Laplace];
    let report = batch_compare(&universe, &fams, &fast()).unwrap();
    assert_eq!(report.n_assets, 3);
    assert_eq!(report.n_compared, 2);
    let ids: Vec<&str> = report.assets.iter().map(|a| a.asset_id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert!(report.assets[2].error.is_some());
    let total: f64 = report.summary.iter().map(|s| s.best_pct).sum();
    assert!((total - 100.0).abs() < 1e-9);
    assert_eq!(report.families, vec![Family::Normal, Family::Laplace, Family::StudentT]);
}

#[test]
fn single_normal_asset_nesting() {
    let normal: ModelParams = NormalParams::new(0.0, 0.01).unwrap().into();
    let series = ReturnSeries::synthetic("n", normal.sample(10_000, 4).unwrap()).unwrap();
    let report = batch_compare(&[series], &[Family::Normal, Family::Laplace, Family::StudentT], &fast()).unwrap();
    let c = report.assets[0].comparison.as_ref().unwrap();
    assert!(matches!(c.best_family, Family::Normal | Family::StudentT));
    let gap = (c.fit(Family::Normal).unwrap().aic - c.fit(Family::StudentT).unwrap().aic).abs();
    assert!(gap < 4.0, "{gap}");
}
