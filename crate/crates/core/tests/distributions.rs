mod common;

use common::{bisect, integrate_below, integrate_real_line, t};
use heavytail::distributions::uniforms;
use heavytail::inference::ks_test;
use heavytail::special::reg_inc_beta;
use heavytail::{Error, LaplaceParams, ModelParams, NormalParams};
use std::f64::consts::PI;

const NU_GRID: [f64; 4] = [2.5, 4.0, 8.0, 30.0];

fn families() -> Vec<ModelParams> {
    let mut v: Vec<ModelParams> = vec![
        NormalParams::new(0.001, 0.02).unwrap().into(),
        LaplaceParams::new(-0.002, 0.015).unwrap().into(),
    ];
    v.extend(NU_GRID.iter().map(|&nu| t(0.0005, 0.012, nu)));
    v
}

fn p_grid() -> Vec<f64> {
    let mut p = vec![1e-6, 1e-5, 1e-4, 1e-3, 0.01, 0.05, 0.2, 0.5, 0.8, 0.95, 0.99, 0.999, 0.9999];
    p.push(1.0 - 1e-5);
    p.push(1.0 - 1e-6);
    p
}

#[test]
fn pdf_closed_forms() {
    let n: ModelParams = NormalParams::new(0.0, 1.0).unwrap().into();
    assert!((n.pdf(0.0).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    assert!((t(0.0, 1.0, 1.0).pdf(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
    // ν = 4: f(x) = 3/8 (1 + x²/4)^(-5/2)
    let want = 0.375 * (1.0 + 2.25 / 4.0f64).powf(-2.5);
    assert!((t(0.0, 1.0, 4.0).pdf(1.5).unwrap() - want).abs() < 1e-15);
    let l: ModelParams = LaplaceParams::new(1.0, 2.0).unwrap().into();
    assert!((l.pdf(3.0).unwrap() - (-1.0f64).exp() / 4.0).abs() < 1e-16);
}

#[test]
fn log_pdf_finite_far_in_tail() {
    for p in families() {
        for &x in &[-1e6, -1e3, 1e3, 1e6] {
            let lp = p.log_pdf(x).unwrap();
            assert!(lp.is_finite(), "{p:?} {x} {lp}");
        }
    }
}

#[test]
fn t_cdf_closed_forms() {
    for &x in &[-30.0, -2.0, -0.3, 0.0, 0.7, 4.0, 100.0] {
        let cauchy = 0.5 + f64::atan(x) / PI;
        let c = t(0.0, 1.0, 1.0).cdf(x).unwrap();
        assert!((c - cauchy).abs() <= 1e-13 * cauchy, "nu=1 x={x}");
        let two = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
        let c = t(0.0, 1.0, 2.0).cdf(x).unwrap();
        assert!((c - two).abs() <= 1e-13 * two, "nu=2 x={x}");
    }
    assert!((t(0.0, 1.0, 1.0).cdf(1.0).unwrap() - 0.75).abs() < 1e-15);
    assert_eq!(t(0.0, 1.0, 1.0).quantile(0.75).unwrap(), 1.0);
}

#[test]
fn t_cdf_matches_quadrature_oracle() {
    for &nu in &NU_GRID {
        let p = t(0.0, 1.0, nu);
        for &x in &[-6.0, -2.0, -0.5, 0.0, 0.7, 2.0, 5.0] {
            let oracle = integrate_below(|y| p.pdf(y).unwrap(), x, 0.0, 1.0, 1e-15);
            let got = p.cdf(x).unwrap();
            assert!((got - oracle).abs() <= 1e-11 * oracle.max(1e-3), "nu={nu} x={x}: {got} vs {oracle}");
        }
    }
    // 40-digit reference for F(2; ν = 5)
    let got = t(0.0, 1.0, 5.0).cdf(2.0).unwrap();
    assert!((got - 0.949_030_260_585_070_821_9).abs() < 1e-14);
}

#[test]
fn symmetric_families_center_at_half() {
    for p in families() {
        let mu = p.to_vec()[0];
        assert!((p.cdf(mu).unwrap() - 0.5).abs() < 1e-15, "{p:?}");
        assert!((p.quantile(0.5).unwrap() - mu).abs() < 1e-15, "{p:?}");
    }
    assert_eq!(t(0.0, 1.0, 3.0).cdf(f64::INFINITY).unwrap(), 1.0);
    assert_eq!(t(0.0, 1.0, 3.0).cdf(f64::NEG_INFINITY).unwrap(), 0.0);
}

#[test]
fn quantile_cdf_identities() {
    for p in families() {
        let mut prev = f64::NEG_INFINITY;
        for &u in &p_grid() {
            let x = p.quantile(u).unwrap();
            assert!(x > prev, "quantile not increasing for {p:?}");
            prev = x;
            let back = p.cdf(x).unwrap();
            assert!((back - u).abs() <= 1e-9, "{p:?} p={u} back={back}");
            let again = p.quantile(back).unwrap();
            assert!((again - x).abs() <= 1e-9 * x.abs().max(1e-3), "{p:?} x={x}");
        }
    }
}

#[test]
fn t_quantile_matches_bisection_oracle() {
    let p = t(0.0, 1.0, 4.0);
    let oracle = bisect(|x| integrate_below(|y| p.pdf(y).unwrap(), x, 0.0, 1.0, 1e-15), 0.99, 0.0, 20.0);
    let got = p.quantile(0.99).unwrap();
    assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    assert!((got - 3.746_947_387_979_196_8).abs() < 1e-12);
}

#[test]
fn densities_integrate_to_one() {
    for p in families() {
        let v = p.to_vec();
        let total = integrate_real_line(|x| p.pdf(x).unwrap(), v[0], v[1], 1e-12);
        assert!((total - 1.0).abs() < 1e-6, "{p:?}: {total}");
    }
}

#[test]
fn cdf_derivative_is_pdf() {
    for p in families() {
        let v = p.to_vec();
        // skip the Laplace kink at μ
        for k in (-8..=8).filter(|&k| k != 0) {
            let x = v[0] + 0.5 * k as f64 * v[1];
            let h = 1e-5 * v[1];
            let fd = (p.cdf(x + h).unwrap() - p.cdf(x - h).unwrap()) / (2.0 * h);
            // compare in standardized units
            let diff = (fd - p.pdf(x).unwrap()) * v[1];
            assert!(diff.abs() < 1e-6, "{p:?} x={x} diff={diff}");
        }
    }
}

#[test]
fn large_nu_approaches_normal() {
    let n: ModelParams = NormalParams::new(0.3, 2.0).unwrap().into();
    for &nu in &[200.0, 1e4] {
        let tp = t(0.3, 2.0, nu);
        let mut sup_pdf: f64 = 0.0;
        let mut sup_cdf: f64 = 0.0;
        for k in -600..=600 {
            let x = 0.3 + 2.0 * k as f64 / 100.0;
            sup_pdf = sup_pdf.max((tp.pdf(x).unwrap() - n.pdf(x).unwrap()).abs());
            sup_cdf = sup_cdf.max((tp.cdf(x).unwrap() - n.cdf(x).unwrap()).abs());
        }
        assert!(sup_pdf < 1e-3 && sup_cdf < 1e-3, "nu={nu}: {sup_pdf} {sup_cdf}");
    }
}

#[test]
fn samples_pass_ks_against_own_cdf() {
    for (i, p) in families().into_iter().enumerate() {
        let x = p.sample(100_000, 11 + i as u64).unwrap();
        let r = ks_test(&x, &p).unwrap();
        assert!(r.p_value > 0.01, "{p:?}: D={} p={}", r.statistic, r.p_value);
    }
}

#[test]
fn sampler_determinism_and_errors() {
    let p = t(0.0, 1.0, 5.0);
    assert_eq!(p.sample(1000, 5).unwrap(), p.sample(1000, 5).unwrap());
    assert_ne!(p.sample(1000, 5).unwrap(), p.sample(1000, 6).unwrap());
    assert!(matches!(p.sample(0, 1), Err(Error::Domain(_))));
    assert_eq!(uniforms(10, 3), uniforms(10, 3));
    assert!(uniforms(1000, 3).iter().all(|&u| u > 0.0 && u < 1.0));
}

#[test]
fn t5_sample_mean_within_three_standard_errors() {
    let n = 1_000_000;
    let x = t(0.0, 1.0, 5.0).sample(n, 2024).unwrap();
    let mean = x.iter().sum::<f64>() / n as f64;
    // Var = ν/(ν − 2)
    let se = (5.0f64 / 3.0 / n as f64).sqrt();
    assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn t_sample_excess_kurtosis() {
    // finite eighth moment needs ν > 8
    let nu = 12.0;
    let n = 1_000_000;
    let x = t(0.0, 1.0, nu).sample(n, 99).unwrap();
    let m = x.iter().sum::<f64>() / n as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n as f64;
    let excess = m4 / (m2 * m2) - 3.0;
    let want = 6.0 / (nu - 4.0);
    assert!((excess - want).abs() < 0.1 * want, "{excess} vs {want}");
}

#[test]
fn domain_errors() {
    let p = t(0.0, 1.0, 4.0);
    assert!(p.pdf(f64::NAN).is_err());
    assert!(p.pdf(f64::INFINITY).is_err());
    assert!(p.cdf(f64::NAN).is_err());
    for &q in &[0.0, 1.0, -0.1, 1.5, f64::NAN] {
        assert!(p.quantile(q).is_err(), "{q}");
    }
    assert!(heavytail::StudentTParams::new(0.0, 0.0, 4.0).is_err());
    assert!(heavytail::StudentTParams::new(0.0, 1.0, -1.0).is_err());
    assert!(NormalParams::new(0.0, -1.0).is_err());
    assert!(LaplaceParams::new(f64::NAN, 1.0).is_err());
}

#[test]
fn incomplete_beta_identities() {
    assert!((reg_inc_beta(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
    assert!((reg_inc_beta(2.5, 2.5, 0.5).unwrap() - 0.5).abs() < 1e-14);
    for &(a, b) in &[(0.5, 0.5), (2.0, 7.5), (30.0, 0.5), (150.0, 220.0)] {
        assert_eq!(reg_inc_beta(a, b, 0.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(a, b, 1.0).unwrap(), 1.0);
        for k in 1..20 {
            let x = k as f64 / 20.0;
            let lhs = reg_inc_beta(a, b, x).unwrap();
            let rhs = 1.0 - reg_inc_beta(b, a, 1.0 - x).unwrap();
            assert!((lhs - rhs).abs() < 1e-13, "a={a} b={b} x={x}");
        }
    }
    assert!(reg_inc_beta(-1.0, 1.0, 0.5).is_err());
    assert!(reg_inc_beta(1.0, 1.0, 1.5).is_err());
}
