//! Normal, Laplace and location-scale Student's t distributions.
//!
//! The t density is
//!
//! ```text
//! f(x) = Γ((ν+1)/2) / (Γ(ν/2) √(νπ) σ) · (1 + z²/ν)^(-(ν+1)/2),   z = (x - μ)/σ
//! ```
//!
//! and its CDF goes through the regularized incomplete beta function. All
//! likelihood-facing evaluation happens in log space.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::behavioral::{self, BehavioralTParams};
use crate::error::{Error, Result};
use crate::special::{self, LN_SQRT_2PI};

/// Location-scale Student's t parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentTParams {
    pub mu: f64,
    pub sigma: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    pub mu: f64,
    pub b: f64,
}

fn check_location(mu: f64) -> Result<()> {
    if mu.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("location must be finite, got {mu}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl StudentTParams {
    pub fn new(mu: f64, sigma: f64, nu: f64) -> Result<Self> {
        let p = StudentTParams { mu, sigma, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn standard(nu: f64) -> Result<Self> {
        Self::new(0.0, 1.0, nu)
    }

    pub fn validate(&self) -> Result<()> {
        check_location(self.mu)?;
        check_positive("sigma", self.sigma)?;
        if self.nu > 0.0 && !self.nu.is_nan() {
            Ok(())
        } else {
            Err(Error::domain(format!("nu must be positive, got {}", self.nu)))
        }
    }

    pub(crate) fn log_pdf_unchecked(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        t_log_norm_const(self.nu) - self.sigma.ln() - 0.5 * (self.nu + 1.0) * (z * z / self.nu).ln_1p()
    }

    /// Lower and upper tail probabilities `(F(x), 1 - F(x))`, each at full
    /// relative precision.
    pub(crate) fn tails(&self, x: f64) -> Result<(f64, f64)> {
        std_t_tails((x - self.mu) / self.sigma, self.nu)
    }

    pub(crate) fn quantile_from_tails(&self, lower: f64, upper: f64) -> Result<f64> {
        let z = if lower <= upper {
            -std_t_upper_quantile(lower, self.nu)?
        } else {
            std_t_upper_quantile(upper, self.nu)?
        };
        Ok(self.mu + self.sigma * z)
    }
}

impl NormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let p = NormalParams { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_location(self.mu)?;
        check_positive("sigma", self.sigma)
    }
}

impl LaplaceParams {
    pub fn new(mu: f64, b: f64) -> Result<Self> {
        let p = LaplaceParams { mu, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_location(self.mu)?;
        check_positive("b", self.b)
    }
}

/// Model family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Normal,
    Laplace,
    StudentT,
    BehavioralT,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Normal,
        Family::Laplace,
        Family::StudentT,
        Family::BehavioralT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Laplace => "laplace",
            Family::StudentT => "student-t",
            Family::BehavioralT => "behavioral-t",
        }
    }

    /// Names of the free parameters, in the order used by fit vectors.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Normal => &["mu", "sigma"],
            Family::Laplace => &["mu", "b"],
            Family::StudentT => &["mu", "sigma", "nu"],
            Family::BehavioralT => &["mu", "sigma", "nu", "alpha"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown family '{s}'")))
    }
}

/// Parameters of any supported model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelParams {
    Normal(NormalParams),
    Laplace(LaplaceParams),
    StudentT(StudentTParams),
    BehavioralT(BehavioralTParams),
}

impl From<NormalParams> for ModelParams {
    fn from(p: NormalParams) -> Self {
        ModelParams::Normal(p)
    }
}

impl From<LaplaceParams> for ModelParams {
    fn from(p: LaplaceParams) -> Self {
        ModelParams::Laplace(p)
    }
}

impl From<StudentTParams> for ModelParams {
    fn from(p: StudentTParams) -> Self {
        ModelParams::StudentT(p)
    }
}

impl From<BehavioralTParams> for ModelParams {
    fn from(p: BehavioralTParams) -> Self {
        ModelParams::BehavioralT(p)
    }
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Normal(_) => Family::Normal,
            ModelParams::Laplace(_) => Family::Laplace,
            ModelParams::StudentT(_) => Family::StudentT,
            ModelParams::BehavioralT(_) => Family::BehavioralT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Normal(p) => p.validate(),
            ModelParams::Laplace(p) => p.validate(),
            ModelParams::StudentT(p) => p.validate(),
            ModelParams::BehavioralT(p) => p.validate(),
        }
    }

    /// Free parameters in [`Family::param_names`] order.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            ModelParams::Normal(p) => vec![p.mu, p.sigma],
            ModelParams::Laplace(p) => vec![p.mu, p.b],
            ModelParams::StudentT(p) => vec![p.mu, p.sigma, p.nu],
            ModelParams::BehavioralT(p) => {
                vec![p.base.mu, p.base.sigma, p.base.nu, p.weighting.alpha]
            }
        }
    }

    /// Inverse of [`ModelParams::to_vec`]. No validation: the Hessian
    /// routines step slightly outside the admissible set.
    pub(crate) fn from_slice_unchecked(family: Family, v: &[f64]) -> ModelParams {
        match family {
            Family::Normal => ModelParams::Normal(NormalParams { mu: v[0], sigma: v[1] }),
            Family::Laplace => ModelParams::Laplace(LaplaceParams { mu: v[0], b: v[1] }),
            Family::StudentT => ModelParams::StudentT(StudentTParams {
                mu: v[0],
                sigma: v[1],
                nu: v[2],
            }),
            Family::BehavioralT => ModelParams::BehavioralT(BehavioralTParams {
                base: StudentTParams {
                    mu: v[0],
                    sigma: v[1],
                    nu: v[2],
                },
                weighting: behavioral::WeightingParams { alpha: v[3] },
            }),
        }
    }

    pub fn from_slice(family: Family, v: &[f64]) -> Result<ModelParams> {
        if v.len() != family.n_params() {
            return Err(Error::domain(format!(
                "{family} takes {} parameters, got {}",
                family.n_params(),
                v.len()
            )));
        }
        let p = Self::from_slice_unchecked(family, v);
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn log_pdf_unchecked(&self, x: f64) -> f64 {
        match self {
            ModelParams::Normal(p) => {
                let z = (x - p.mu) / p.sigma;
                -0.5 * z * z - LN_SQRT_2PI - p.sigma.ln()
            }
            ModelParams::Laplace(p) => -(x - p.mu).abs() / p.b - (2.0 * p.b).ln(),
            ModelParams::StudentT(p) => p.log_pdf_unchecked(x),
            ModelParams::BehavioralT(p) => p.log_pdf_unchecked(x),
        }
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if !x.is_finite() {
            return Err(Error::domain(format!("density argument must be finite, got {x}")));
        }
        Ok(self.log_pdf_unchecked(x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if x.is_nan() {
            return Err(Error::domain("CDF argument is NaN"));
        }
        match self {
            ModelParams::Normal(p) => Ok(special::normal_cdf((x - p.mu) / p.sigma)),
            ModelParams::Laplace(p) => {
                let z = (x - p.mu) / p.b;
                Ok(if z < 0.0 { 0.5 * z.exp() } else { 1.0 - 0.5 * (-z).exp() })
            }
            ModelParams::StudentT(p) => Ok(p.tails(x)?.0),
            ModelParams::BehavioralT(p) => behavioral::behavioral_cdf(x, p),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.validate()?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        match self {
            ModelParams::Normal(n) => Ok(n.mu + n.sigma * special::normal_quantile(p)),
            ModelParams::Laplace(l) => Ok(if p < 0.5 {
                l.mu + l.b * (2.0 * p).ln()
            } else {
                l.mu - l.b * (2.0 * (1.0 - p)).ln()
            }),
            ModelParams::StudentT(t) => t.quantile_from_tails(p, 1.0 - p),
            ModelParams::BehavioralT(b) => behavioral::behavioral_quantile(p, b),
        }
    }

    /// Draw `n` variates with a ChaCha20 stream seeded from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        match self {
            ModelParams::Normal(p) => Ok((0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    p.mu + p.sigma * z
                })
                .collect()),
            ModelParams::Laplace(p) => Ok((0..n)
                .map(|_| {
                    let u: f64 = rng.sample(Open01);
                    if u < 0.5 {
                        p.mu + p.b * (2.0 * u).ln()
                    } else {
                        p.mu - p.b * (2.0 * (1.0 - u)).ln()
                    }
                })
                .collect()),
            ModelParams::StudentT(p) => {
                let chi = ChiSquared::new(p.nu)
                    .map_err(|e| Error::domain(format!("chi-square sampler: {e}")))?;
                Ok((0..n)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        let v: f64 = chi.sample(&mut rng);
                        p.mu + p.sigma * z / (v / p.nu).sqrt()
                    })
                    .collect())
            }
            ModelParams::BehavioralT(p) => behavioral::behavioral_sample(p, n, seed),
        }
    }
}

/// Density of `params` at `x`.
pub fn pdf(x: f64, params: &ModelParams) -> Result<f64> {
    params.pdf(x)
}

pub fn log_pdf(x: f64, params: &ModelParams) -> Result<f64> {
    params.log_pdf(x)
}

pub fn cdf(x: f64, params: &ModelParams) -> Result<f64> {
    params.cdf(x)
}

pub fn quantile(p: f64, params: &ModelParams) -> Result<f64> {
    params.quantile(p)
}

pub fn sample(params: &ModelParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.sample(n, seed)
}

/// `n` uniforms on the open unit interval from the crate's seeded stream.
pub fn uniforms(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(Open01)).collect()
}

/// Standard-t evaluator with the shape-dependent constants computed once.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TKernel {
    nu: f64,
    log_norm: f64,
    ln_beta: f64,
}

impl TKernel {
    pub(crate) fn new(nu: f64) -> Self {
        TKernel {
            nu,
            log_norm: t_log_norm_const(nu),
            ln_beta: special::ln_beta(0.5 * nu, 0.5),
        }
    }

    pub(crate) fn log_pdf_std(&self, z: f64) -> f64 {
        self.log_norm - 0.5 * (self.nu + 1.0) * (z * z / self.nu).ln_1p()
    }

    pub(crate) fn tails(&self, z: f64) -> Result<(f64, f64)> {
        if z.is_nan() {
            return Err(Error::domain("t CDF argument is NaN"));
        }
        if z.is_infinite() {
            return Ok(if z > 0.0 { (1.0, 0.0) } else { (0.0, 1.0) });
        }
        let small = std_t_upper_tail_with(z.abs(), self.nu, self.ln_beta)?;
        let large = 0.5 + (0.5 - small);
        Ok(if z < 0.0 { (small, large) } else { (large, small) })
    }
}

/// `ln Γ((ν+1)/2) - ln Γ(ν/2) - ½ ln(νπ)`
pub(crate) fn t_log_norm_const(nu: f64) -> f64 {
    special::ln_gamma_half_ratio(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln()
}

/// Tail probabilities `(P(T ≤ z), P(T > z))` of the standard t.
pub(crate) fn std_t_tails(z: f64, nu: f64) -> Result<(f64, f64)> {
    TKernel::new(nu).tails(z)
}

/// `P(T > z)` for `z ≥ 0`.
fn std_t_upper_tail(z: f64, nu: f64) -> Result<f64> {
    std_t_upper_tail_with(z, nu, special::ln_beta(0.5 * nu, 0.5))
}

pub(crate) fn std_t_upper_tail_with(z: f64, nu: f64, ln_b: f64) -> Result<f64> {
    let z2 = z * z;
    let (x, y) = if z2.is_infinite() {
        (0.0, 1.0)
    } else if z2 < nu {
        let d = nu + z2;
        (nu / d, z2 / d)
    } else {
        let r = nu / z2;
        (r / (1.0 + r), 1.0 / (1.0 + r))
    };
    Ok(0.5 * special::reg_inc_beta_pair_with(0.5 * nu, 0.5, x, y, ln_b)?)
}

fn std_t_log_pdf(z: f64, nu: f64) -> f64 {
    t_log_norm_const(nu) - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
}

/// The `z ≥ 0` with `P(T > z) = q`, for `q ∈ (0, 1/2]`.
///
/// Newton iteration on `ln P(T > e^u) - ln q` in `u = ln z`, safeguarded
/// by a bracket and bisection. Working in logs keeps the iteration stable
/// for tail probabilities far below machine epsilon.
pub(crate) fn std_t_upper_quantile(q: f64, nu: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::domain(format!("tail probability must lie in (0, 0.5], got {q}")));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    let ln_q = q.ln();

    // Cornish-Fisher style start, and the power-law tail start; the larger
    // one is the better guess in each regime.
    let zn = -special::normal_quantile(q);
    let cf = zn + (zn.powi(3) + zn) / (4.0 * nu)
        + (5.0 * zn.powi(5) + 16.0 * zn.powi(3) + 3.0 * zn) / (96.0 * nu * nu);
    let ln_tail_start = (t_log_norm_const(nu) + 0.5 * (nu + 1.0) * nu.ln() - nu.ln() - ln_q) / nu;
    let mut z = cf.max(ln_tail_start.exp()).max(1e-300);
    if !z.is_finite() {
        z = 1e300;
    }

    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..300 {
        let s = std_t_upper_tail(z, nu)?;
        if s > q {
            lo = lo.max(z);
        } else {
            hi = hi.min(z);
        }
        let g = s.ln() - ln_q;
        // d/du ln S(e^u) = -f(z) z / S(z)
        let dg = -(std_t_log_pdf(z, nu) - s.ln()).exp() * z;
        let mut next = if dg.is_finite() && dg < 0.0 && s > 0.0 {
            z * (-g / dg).exp()
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_infinite() {
                z * 4.0
            } else if lo == 0.0 {
                hi / 4.0
            } else {
                (lo * hi).sqrt()
            };
        }
        if (next - z).abs() <= 1e-15 * z || (hi.is_finite() && (hi - lo) <= 1e-15 * hi) {
            return Ok(next);
        }
        z = next;
    }
    Err(Error::Convergence(format!("t quantile (q = {q}, nu = {nu})")))
}
