use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heavytail::cli::{run, RunConfig};

fn heavytail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heavytail"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn suffixed(p: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{suffix}", p.display()))
}

/// Simulated price file with `n` returns.
fn simulate(dir: &Path, name: &str, family: &str, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    let n = n.to_string();
    let seed = seed.to_string();
    let o = heavytail(&["simulate", "--family", family, "--nu", "4", "--n", &n, "--seed", &seed, "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--family".into(),
            "behavioral-t".into(),
            "--nu".into(),
            "5".into(),
            "--alpha".into(),
            "0.8".into(),
            "--n".into(),
            "10000".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let argv = args(p);
        let o = heavytail(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).contains("seed: 7"));
    }
    let text = read(&a);
    assert_eq!(text, read(&b));
    assert_eq!(text.lines().count(), 10_002);
    assert_eq!(text.lines().next().unwrap(), "date,close,log_return");
}

#[test]
fn fit_reports_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "asset.csv", "student-t", 2_000, 3);
    let out = dir.path().join("fit.csv");
    let o = heavytail(&["fit", "--input", s(&input), "--family", "student-t", "--starts", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in ["asset", "family", "mu", "scale", "nu", "se_mu", "se_scale", "se_nu", "loglik", "aic", "bic"] {
        assert!(header.contains(&col), "{col}");
    }
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "asset");
    assert_eq!(row[1], "student-t");
    let nu: f64 = row[header.iter().position(|h| *h == "nu").unwrap()].parse().unwrap();
    assert!(nu > 2.5 && nu < 8.0, "{nu}");
    assert!(lines.next().is_none());
}

#[test]
fn structured_output_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "x.csv", "normal", 500, 4);
    let o = heavytail(&["backtest", "--input", s(&input), "--family", "normal", "--format", "structured"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("kupiec") && text.contains("conditional_coverage"), "{text}");
}

#[test]
fn backtest_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "x.csv", "student-t", 800, 5);
    let o = heavytail(&["backtest", "--input", s(&input), "--starts", "1"]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    let header = stdout.lines().next().unwrap();
    for col in ["kupiec_stat", "kupiec_p", "cc_stat", "cc_p"] {
        assert!(header.contains(col), "{header}");
    }
}

#[test]
fn roll_writes_one_row_per_step_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "r.csv", "student-t", 1_100, 6);
    let out = dir.path().join("roll.csv");
    let o = heavytail(&["roll", "--input", s(&input), "--stride", "10", "--starts", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&out).lines().count(), 101);
    let summary = read(&suffixed(&out, ".summary.csv"));
    assert!(summary.starts_with("asset,metric,subject,value"));
    assert!(summary.contains("dm_stat") && summary.contains("refits"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = heavytail(&["fit", "--input", s(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,close\n2024-01-01,1\n2024-01-01,2\n").unwrap();
    let o = heavytail(&["stats", "--input", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate date"));

    assert_eq!(heavytail(&["fit", "--bogus"]).status.code(), Some(2));
    assert_eq!(heavytail(&["fit"]).status.code(), Some(2));
    assert_eq!(heavytail(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(heavytail(&["simulate", "--family", "gamma"]).status.code(), Some(2));
    let o = heavytail(&["simulate", "--family", "student-t", "--sigma=-1"]);
    assert_eq!(o.status.code(), Some(1));

    let input = simulate(dir.path(), "ok.csv", "normal", 100, 1);
    let unwritable = dir.path().join("no_such_dir").join("out.csv");
    let o = heavytail(&["stats", "--input", s(&input), "--out", s(&unwritable)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_dir"));
}

#[test]
fn help_lists_flags() {
    let o = heavytail(&["roll", "--help"]);
    assert!(o.status.success());
    let help = String::from_utf8(o.stdout).unwrap();
    for flag in ["--input", "--date-col", "--price-col", "--family", "--level", "--window", "--seed", "--out", "--format"] {
        assert!(help.contains(flag), "{flag}");
    }
}

#[test]
fn config_echo_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "c.csv", "laplace", 600, 2);
    let out = dir.path().join("cmp.csv");
    let o = heavytail(&["compare", "--input", s(&input), "--seed", "11", "--starts", "2", "--out", s(&out)]);
    assert!(o.status.success());
    let echo = read(&suffixed(&out, ".config.json"));
    let mut cfg: RunConfig = serde_json::from_str(&echo).unwrap();
    assert_eq!(cfg.seed, 11);
    let replay = dir.path().join("replay.csv");
    cfg.out = Some(replay.clone());
    run(&cfg).unwrap();
    assert_eq!(read(&out), read(&replay));
    assert_eq!(read(&suffixed(&out, ".summary.csv")), read(&suffixed(&replay, ".summary.csv")));
}
