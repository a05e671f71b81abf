//! Special functions backing the distribution kernels and test p-values.
//!
//! Everything here works in `f64`. The incomplete beta function takes the
//! complementary argument `1 - x` explicitly where callers have it, because
//! the Student's t CDF needs `I_x(a, b)` for `x` extremely close to one.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// ln(√(2π))
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const CF_MAX_ITER: usize = 20_000;
const CF_TINY: f64 = 1e-300;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Γ(x + 1/2) - ln Γ(x)` without cancellation for large `x`.
///
/// The Student's t normalizing constant needs this at `x = ν/2`, and `ν`
/// can run into the millions when a fit approaches the Gaussian limit.
pub fn ln_gamma_half_ratio(x: f64) -> f64 {
    if x < 20.0 {
        return ln_gamma(x + 0.5) - ln_gamma(x);
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    0.5 * x.ln()
        - inv / 8.0
        + inv * inv2 / 192.0
        - inv * inv2 * inv2 / 640.0
        + 17.0 * inv * inv2 * inv2 * inv2 / 14_336.0
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    const HALF_LN_PI: f64 = 0.572_364_942_924_700_1;
    if b == 0.5 {
        return HALF_LN_PI - ln_gamma_half_ratio(a);
    }
    if a == 0.5 {
        return HALF_LN_PI - ln_gamma_half_ratio(b);
    }
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain(format!(
            "incomplete beta needs a > 0 and b > 0, got a = {a}, b = {b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "incomplete beta argument must lie in [0, 1], got {x}"
        )));
    }
    reg_inc_beta_pair(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with `y = 1 - x` supplied by the caller at full precision.
pub(crate) fn reg_inc_beta_pair(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    reg_inc_beta_pair_with(a, b, x, y, ln_beta(a, b))
}

/// As [`reg_inc_beta_pair`] with `ln B(a, b)` precomputed; likelihood loops
/// call this once per observation with fixed shape parameters.
pub(crate) fn reg_inc_beta_pair_with(a: f64, b: f64, x: f64, y: f64, ln_b: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if y <= 0.0 {
        return Ok(1.0);
    }
    // The continued fraction converges quickly only left of the mode-ish point.
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - inc_beta_cf(b, a, y, x, ln_b)?)
    } else {
        inc_beta_cf(a, b, x, y, ln_b)
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn inc_beta_cf(a: f64, b: f64, x: f64, y: f64, ln_b: f64) -> Result<f64> {
    let ln_x = if x > 0.5 { (-y).ln_1p() } else { x.ln() };
    let ln_y = if y > 0.5 { (-x).ln_1p() } else { y.ln() };
    let ln_prefix = a * ln_x + b * ln_y - ln_b;
    let prefix = ln_prefix.exp() / a;
    if prefix == 0.0 {
        return Ok(0.0);
    }

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut f = d;

    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        f *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;

        if (delta - 1.0).abs() < 1e-16 {
            return Ok(prefix * f);
        }
    }
    Err(Error::Convergence(format!(
        "incomplete beta continued fraction (a = {a}, b = {b}, x = {x})"
    )))
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn reg_upper_inc_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(format!(
            "incomplete gamma needs a > 0 and x >= 0, got a = {a}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let ln_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..CF_MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                return Ok((1.0 - sum * ln_prefix.exp()).clamp(0.0, 1.0));
            }
        }
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / CF_TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..CF_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < CF_TINY {
                d = CF_TINY;
            }
            c = b + an / c;
            if c.abs() < CF_TINY {
                c = CF_TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                return Ok((ln_prefix.exp() * h).clamp(0.0, 1.0));
            }
        }
    }
    Err(Error::Convergence(format!(
        "incomplete gamma (a = {a}, x = {x})"
    )))
}

/// Upper tail probability of a chi-square variable with `df` degrees of freedom.
pub fn chi2_sf(stat: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) || stat.is_nan() {
        return Err(Error::domain(format!(
            "chi-square tail needs df > 0 and a statistic, got df = {df}, stat = {stat}"
        )));
    }
    if stat <= 0.0 {
        return Ok(1.0);
    }
    if df == 1.0 {
        return Ok(libm::erfc((0.5 * stat).sqrt()));
    }
    if df == 2.0 {
        return Ok((-0.5 * stat).exp());
    }
    reg_upper_inc_gamma(0.5 * df, 0.5 * stat)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 - Φ(z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p` in (0, 1).
///
/// Rational starting value refined by Newton steps on the log tail
/// probability, which keeps full relative accuracy deep in the tails.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let ln_q = q.ln();

    let t = (-2.0 * ln_q).sqrt();
    let mut z = t - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
        / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    for _ in 0..50 {
        let sf = normal_sf(z);
        let g = sf.ln() - ln_q;
        let step = g * sf / normal_pdf(z);
        z += step;
        if step.abs() <= 1e-15 * z.abs().max(1e-300) {
            break;
        }
    }
    sign * z
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small λ
        let y = -PI * PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=50 {
            let j = (2 * k - 1) as f64;
            let term = (j * j * y).exp();
            cdf += term;
            if term < 1e-17 {
                break;
            }
        }
        cdf *= (2.0 * PI).sqrt() / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sf = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sf += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sf).clamp(0.0, 1.0)
}
