//! Derivative-free minimization and finite-difference curvature.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex search with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// Stops when `2|f_worst − f_best| ≤ ftol (|f_worst| + |f_best|)` or after
/// `max_iter` iterations. Non-finite objective values are treated as +∞.
pub(crate) fn nelder_mead<F>(f: &mut F, x0: &[f64], steps: &[f64], max_iter: usize, ftol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    while iterations < max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        let (fb, fw) = (values[best], values[worst]);
        if fb.is_finite() && 2.0 * (fw - fb).abs() <= ftol * (fw.abs() + fb.abs()) + 1e-300 {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-1.0);
        let fr = eval(&reflected);
        if fr < fb {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (contracted, fc) = if fr < fw {
            let c = along(-0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(0.5);
            let v = eval(&c);
            (c, v)
        };
        if fc < fw.min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            for (v, a) in simplex[i].iter_mut().zip(&anchor) {
                *v = a + 0.5 * (*v - a);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
    }
}

/// Central-difference Hessian of `f` at `x` with per-coordinate steps `h`.
/// The result is symmetric by construction.
pub(crate) fn hessian<F>(f: &mut F, x: &[f64], h: &[f64]) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x.len();
    let f0 = f(x);
    let mut out = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h[i];
        let fp = f(&p);
        p[i] = x[i] - h[i];
        let fm = f(&p);
        p[i] = x[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub(crate) fn gradient<F>(f: &mut F, x: &[f64], h: &[f64]) -> DVector<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = x.to_vec();
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            p[i] = x[i] + h[i];
            let fp = f(&p);
            p[i] = x[i] - h[i];
            let fm = f(&p);
            p[i] = x[i];
            (fp - fm) / (2.0 * h[i])
        }),
    )
}

/// A few damped Newton steps from a simplex optimum. Only steps that lower
/// the objective are accepted, so the result is never worse than the input.
pub(crate) fn newton_polish<F>(f: &mut F, start: Minimum, h: f64, max_steps: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = start;
    let steps = vec![h; best.x.len()];
    for _ in 0..max_steps {
        let g = gradient(f, &best.x, &steps);
        let hess = hessian(f, &best.x, &steps);
        let Some(chol) = hess.cholesky() else {
            break;
        };
        let dir = chol.solve(&(-g));
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let cand: Vec<f64> = best.x.iter().zip(dir.iter()).map(|(x, d)| x + t * d).collect();
            let fc = f(&cand);
            if fc.is_finite() && fc < best.f {
                let gain = best.f - fc;
                best.x = cand;
                best.f = fc;
                improved = gain > 1e-13 * fc.abs().max(1.0);
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    best
}
