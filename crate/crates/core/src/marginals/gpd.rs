//! Generalized Pareto law and its maximum-likelihood fit.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoriskError, Result};
use crate::numeric::optimize::{bfgs, hessian, nelder_mead, BfgsConfig, NelderMeadConfig};

/// `ln(1 + t)/t`, continuous at `t = 0`.
pub(crate) fn log1p_ratio(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 - 0.5 * t + t * t / 3.0
    } else {
        t.ln_1p() / t
    }
}

/// `−ln P(Y > y)` for `Y ~ GPD(ξ, β)`, `y ≥ 0`; infinite beyond the upper endpoint.
pub(crate) fn cum_hazard(xi: f64, beta: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let z = y / beta;
    let t = xi * z;
    if t <= -1.0 {
        return f64::INFINITY;
    }
    z * log1p_ratio(t)
}

pub(crate) fn survival(xi: f64, beta: f64, y: f64) -> f64 {
    (-cum_hazard(xi, beta, y)).exp()
}

/// `y` with `P(Y > y) = w`.
pub(crate) fn upper_quantile(xi: f64, beta: f64, w: f64) -> f64 {
    let l = -w.ln();
    if (xi * l).abs() < 1e-10 {
        beta * l * (1.0 + 0.5 * xi * l)
    } else {
        beta * (xi * l).exp_m1() / xi
    }
}

/// `E[(Y − y)_+]`; requires `ξ < 1`.
pub(crate) fn stop_loss(xi: f64, beta: f64, y: f64) -> Result<f64> {
    if xi >= 1.0 {
        return Err(CoriskError::NonintegrableTail(format!("GPD shape {xi} >= 1 has infinite mean")));
    }
    if y <= 0.0 {
        return Ok(beta / (1.0 - xi) - y);
    }
    let s = survival(xi, beta, y);
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(((beta + xi * y) / (1.0 - xi) * s).max(0.0))
}

pub(crate) fn upper_endpoint(xi: f64, beta: f64) -> f64 {
    if xi < 0.0 {
        beta / -xi
    } else {
        f64::INFINITY
    }
}

/// Negative log-likelihood of excesses `y` at `(ξ, β)`.
pub fn neg_log_likelihood(xi: f64, beta: f64, y: &[f64]) -> f64 {
    if !(beta > 0.0) || !xi.is_finite() {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    for &v in y {
        let z = v / beta;
        let t = xi * z;
        if t <= -1.0 {
            return f64::INFINITY;
        }
        // ln β + (1 + 1/ξ) ln(1 + ξz)
        total += beta.ln() + t.ln_1p() + z * log1p_ratio(t);
    }
    total
}

/// Maximum-likelihood GPD fit with standard errors from the observed information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub xi: f64,
    pub beta: f64,
    pub se_xi: f64,
    pub se_beta: f64,
    pub log_likelihood: f64,
    pub n_excesses: usize,
    /// True when `ξ̂ ± 1.96·SE(ξ̂)` contains zero; downstream the exponential tail is used.
    pub xi_is_zero: bool,
}

impl GpdFit {
    /// Shape used for tail evaluation after the significance rule.
    pub fn effective_xi(&self) -> f64 {
        if self.xi_is_zero {
            0.0
        } else {
            self.xi
        }
    }
}

fn pwm_start(y: &[f64]) -> (f64, f64) {
    let mut s = y.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let b0 = s.iter().sum::<f64>() / n;
    let b1 = s.iter().enumerate().map(|(i, v)| v * (n - 1.0 - i as f64) / (n - 1.0)).sum::<f64>() / n;
    let denom = b0 - 2.0 * b1;
    if denom <= 0.0 {
        return (0.0, b0.max(1e-8));
    }
    let xi = 2.0 - b0 / denom;
    let beta = 2.0 * b0 * b1 / denom;
    (xi.clamp(-0.45, 0.9), beta.max(1e-8))
}

/// MLE over `(ln β, ξ)` with support violations treated as infinite loss.
pub fn fit_gpd(excesses: &[f64]) -> Result<GpdFit> {
    if excesses.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("GPD excesses must be finite and nonnegative"));
    }
    if excesses.len() < 2 {
        return Err(CoriskError::InsufficientExcesses { got: excesses.len(), need: 2 });
    }
    let n = excesses.len() as f64;
    let objective = |p: &[f64]| neg_log_likelihood(p[1], p[0].exp(), excesses) / n;
    let (xi0, beta0) = pwm_start(excesses);
    let mean = excesses.iter().sum::<f64>() / n;
    let starts = [[beta0.ln(), xi0], [mean.ln(), 0.0], [mean.ln(), 0.3], [(0.8 * mean).ln(), -0.2]];
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut best_converged: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        if !objective(&s).is_finite() {
            continue;
        }
        let nm = nelder_mead(objective, &s, NelderMeadConfig::default());
        let bf = bfgs(objective, &nm.x, BfgsConfig { grad_tol: 1e-7, ..BfgsConfig::default() });
        if bf.converged && best_converged.as_ref().is_none_or(|b| bf.value < b.1) {
            best_converged = Some((bf.x.clone(), bf.value));
        }
        let (x, v, ok) = if bf.value <= nm.value { (bf.x, bf.value, bf.converged) } else { (nm.x, nm.value, false) };
        if best.as_ref().is_none_or(|b| v < b.1 - 1e-12) {
            best = Some((x, v, ok));
        }
    }
    let (mut x, mut v, mut converged) = best.ok_or_else(|| CoriskError::NonConvergence("no feasible GPD start".into()))?;
    // a converged start that ties the best value within roundoff certifies the same optimum
    if let Some((cx, cv)) = best_converged {
        if !converged && cv <= v + 1e-9 * (1.0 + v.abs()) {
            (x, v, converged) = (cx, cv, true);
        }
    }
    let (beta, xi) = (x[0].exp(), x[1]);
    if !converged && xi > -0.5 {
        return Err(CoriskError::NonConvergence(format!("GPD MLE stalled at xi = {xi}, beta = {beta}")));
    }
    let mut nll = |p: &[f64]| neg_log_likelihood(p[1], p[0], excesses);
    let h = hessian(&mut nll, &[beta, xi], 1e-4 * beta.max(1e-3));
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let (se_beta, se_xi) = if det > 0.0 && h[0][0] > 0.0 {
        ((h[1][1] / det).sqrt(), (h[0][0] / det).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    let xi_is_zero = se_xi.is_finite() && (xi - 1.96 * se_xi) <= 0.0 && 0.0 <= (xi + 1.96 * se_xi);
    Ok(GpdFit { xi, beta, se_xi, se_beta, log_likelihood: -v * n, n_excesses: excesses.len(), xi_is_zero })
}
