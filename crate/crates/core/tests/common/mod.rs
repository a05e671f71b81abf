//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use heavytail::{BehavioralTParams, ModelParams, StudentTParams};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive 7/15-point Gauss-Kronrod quadrature on `[a, b]`: the
/// interval with the largest error estimate is bisected until the summed
/// estimate is below `tol` or 4000 intervals are in use.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_pieces(f, &[a, b], tol)
}

/// As [`integrate`], starting from the partition given by `breaks`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> f64 {
    let mut parts: Vec<_> = breaks.windows(2).map(|w| (w[0], w[1], gk15(&f, w[0], w[1]))).collect();
    while parts.len() < 4000 + breaks.len() {
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            break;
        }
        let i = (0..parts.len())
            .max_by(|&x, &y| parts[x].2 .1.total_cmp(&parts[y].2 .1))
            .expect("non-empty");
        let (lo, hi, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    let mut vals: Vec<f64> = parts.iter().map(|p| p.2 .0).collect();
    vals.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    vals.iter().sum()
}

fn tail_breaks(from: f64) -> Vec<f64> {
    let mut b: Vec<f64> = (0..=160).map(|k| from + 0.25 * k as f64).collect();
    b.push(700.0f64.max(from + 41.0));
    b
}

/// `∫_{-∞}^{x} f`, with the part left of `center − scale` mapped through
/// `y = center − scale · e^s`.
pub fn integrate_below<F: Fn(f64) -> f64>(f: F, x: f64, center: f64, scale: f64, tol: f64) -> f64 {
    let tail = |s_from: f64| {
        integrate_pieces(
            |s: f64| {
                let w = scale * s.exp();
                f(center - w) * w
            },
            &tail_breaks(s_from),
            tol,
        )
    };
    let edge = center - scale;
    if x <= edge {
        tail(((center - x) / scale).ln())
    } else {
        tail(0.0) + integrate(&f, edge, x, tol)
    }
}

/// `∫_ℝ f`: a central piece on `center ± scale` and log-mapped tails.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, center: f64, scale: f64, tol: f64) -> f64 {
    let tail = |sign: f64| {
        integrate_pieces(
            |s: f64| {
                let w = scale * s.exp();
                f(center + sign * w) * w
            },
            &tail_breaks(0.0),
            tol,
        )
    };
    tail(-1.0) + integrate(&f, center - scale, center + scale, tol) + tail(1.0)
}

/// Bisection for `g(x) = target` with `g` nondecreasing on `[lo, hi]`.
pub fn bisect<G: Fn(f64) -> f64>(g: G, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn t(mu: f64, sigma: f64, nu: f64) -> ModelParams {
    StudentTParams::new(mu, sigma, nu).unwrap().into()
}

pub fn bt(mu: f64, sigma: f64, nu: f64, alpha: f64) -> BehavioralTParams {
    BehavioralTParams::new(mu, sigma, nu, alpha).unwrap()
}

/// Fraction of `flags` that are true.
pub fn rate(flags: &[bool]) -> f64 {
    flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64
}
