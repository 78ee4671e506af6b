//! Derivative-free simplex search and a finite-difference quasi-Newton polish.
//! Both minimize; objectives return `f64::INFINITY` outside their feasible set.

#[derive(Debug, Clone)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadConfig {
    pub initial_step: f64,
    pub max_evaluations: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig { initial_step: 0.25, max_evaluations: 4000, f_tol: 1e-10, x_tol: 1e-8 }
    }
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], cfg: NelderMeadConfig) -> OptResult {
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += cfg.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();
    let mut iterations = 0;
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals < cfg.max_evaluations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[d] - values[0]).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if values[0].is_finite() && spread <= cfg.f_tol * (1.0 + values[0].abs()) && size <= cfg.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; d];
        for p in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[d]).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-alpha);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(-gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let (xc, fc) = if fr < values[d] {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < values[d].min(fr) {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=d {
                    for j in 0..d {
                        simplex[i][j] = best[j] + sigma * (simplex[i][j] - best[j]);
                    }
                    values[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    OptResult {
        x: simplex[best].clone(),
        value: values[best],
        grad_norm: f64::NAN,
        iterations,
        evaluations: evals,
        converged,
    }
}

/// Central-difference gradient with per-coordinate step `h·max(1, |x_i|)`.
pub fn gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        p[i] = x[i] + step;
        let fp = f(&p);
        p[i] = x[i] - step;
        let fm = f(&p);
        p[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    g
}

/// Central-difference Hessian.
pub fn hessian<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let steps: Vec<f64> = x.iter().map(|v| h * v.abs().max(1.0)).collect();
    let mut out = vec![vec![0.0; d]; d];
    let f0 = f(x);
    let mut p = x.to_vec();
    for i in 0..d {
        p[i] = x[i] + steps[i];
        let fp = f(&p);
        p[i] = x[i] - steps[i];
        let fm = f(&p);
        p[i] = x[i];
        out[i][i] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
        for j in 0..i {
            let mut q = x.to_vec();
            let mut corner = |si: f64, sj: f64, q: &mut Vec<f64>| {
                q[i] = x[i] + si * steps[i];
                q[j] = x[j] + sj * steps[j];
                f(q)
            };
            let v = corner(1.0, 1.0, &mut q) - corner(1.0, -1.0, &mut q) - corner(-1.0, 1.0, &mut q)
                + corner(-1.0, -1.0, &mut q);
            out[i][j] = v / (4.0 * steps[i] * steps[j]);
            out[j][i] = out[i][j];
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsConfig {
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig { grad_tol: 1e-5, max_iterations: 300, fd_step: 1e-6 }
    }
}

/// BFGS with finite-difference gradients and Armijo backtracking.
pub fn bfgs<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], cfg: BfgsConfig) -> OptResult {
    let d = x0.len();
    let mut evals = 0usize;
    let mut fx_eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut x = x0.to_vec();
    let mut fx = fx_eval(&x, &mut evals);
    let mut g = gradient(&mut |p: &[f64]| fx_eval(p, &mut evals), &x, cfg.fd_step);
    let mut inv_h: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut iterations = 0;
    let mut converged = norm(&g) < cfg.grad_tol;
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut dir: Vec<f64> = (0..d).map(|i| -(0..d).map(|j| inv_h[i][j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // reset to steepest descent
            for (i, row) in inv_h.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
            dir = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let ft = fx_eval(&trial, &mut evals);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };
        let g_new = gradient(&mut |p: &[f64]| fx_eval(p, &mut evals), &x_new, cfg.fd_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let hy: Vec<f64> = (0..d).map(|i| (0..d).map(|j| inv_h[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..d {
                for j in 0..d {
                    inv_h[i][j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let progress = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        g = g_new;
        if norm(&g) < cfg.grad_tol {
            converged = true;
        } else if progress < 1e-15 * (1.0 + fx.abs()) && step < 1e-10 {
            break;
        }
    }
    OptResult { grad_norm: norm(&g), x, value: fx, iterations, evaluations: evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_then_bfgs_find_rosenbrock_minimum() {
        let nm = nelder_mead(rosenbrock, &[-1.2, 1.0], NelderMeadConfig::default());
        assert!(nm.value < 1e-6);
        let polished = bfgs(rosenbrock, &nm.x, BfgsConfig::default());
        assert!(polished.converged, "{polished:?}");
        assert!((polished.x[0] - 1.0).abs() < 1e-5 && (polished.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn hessian_of_quadratic() {
        let mut f = |x: &[f64]| 3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 5.0 * x[1] * x[1];
        let h = hessian(&mut f, &[0.3, -0.7], 1e-4);
        assert!((h[0][0] - 6.0).abs() < 1e-5);
        assert!((h[0][1] - 2.0).abs() < 1e-5);
        assert!((h[1][1] - 10.0).abs() < 1e-5);
    }
}
