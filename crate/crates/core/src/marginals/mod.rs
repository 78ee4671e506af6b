//! Univariate marginal laws: parametric families and the semiparametric
//! empirical-body/GPD-tail model.

pub mod gpd;
mod semiparametric;

pub use gpd::{fit_gpd, GpdFit};
pub use semiparametric::{SemiparametricGpdTail, MIN_EXCESSES};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::error::{domain, invalid, CoriskError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalModel {
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    /// `F(x) = 1 − (scale/x)^shape` for `x ≥ scale`.
    ParetoI { scale: f64, shape: f64 },
    /// Location-zero generalized Pareto.
    Gpd { xi: f64, beta: f64 },
    Semiparametric(SemiparametricGpdTail),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Solves `F(x) = p` (when `p ≤ ½`) or `S(x) = w` on `[0, ∞)` by bisection, where
/// `p + w = 1` and whichever is smaller is given exactly.
fn invert_on_half_line<S: Fn(f64) -> f64, F: Fn(f64) -> f64>(surv: S, cdf: F, p: f64, w: f64, scale: f64) -> f64 {
    let use_cdf = p <= 0.5;
    let above = |x: f64| if use_cdf { cdf(x) >= p } else { surv(x) <= w };
    let mut hi = scale;
    while !above(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

impl MarginalModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarginalModel::Exponential { rate } => positive("rate", rate),
            MarginalModel::Gamma { shape, scale } | MarginalModel::Weibull { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            MarginalModel::ParetoI { scale, shape } => {
                positive("scale", scale)?;
                positive("shape", shape)
            }
            MarginalModel::Gpd { xi, beta } => {
                positive("beta", beta)?;
                if xi.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("GPD shape must be finite"))
                }
            }
            MarginalModel::Semiparametric(_) => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MarginalModel::Exponential { .. } => "exponential",
            MarginalModel::Gamma { .. } => "gamma",
            MarginalModel::Weibull { .. } => "weibull",
            MarginalModel::ParetoI { .. } => "pareto_i",
            MarginalModel::Gpd { .. } => "gpd",
            MarginalModel::Semiparametric(_) => "semiparametric",
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginalModel::Semiparametric(s) => s.cdf(x),
            MarginalModel::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape, x / scale)
                }
            }
            _ => {
                if x < self.lower_endpoint() {
                    0.0
                } else {
                    1.0 - self.survival(x)
                }
            }
        }
    }

    /// `P(X > x)`, evaluated directly so that small tail probabilities keep full precision.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            MarginalModel::Exponential { rate } => (-rate * x.max(0.0)).exp(),
            MarginalModel::Gamma { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, x / scale)
                }
            }
            MarginalModel::Weibull { shape, scale } => (-(x.max(0.0) / scale).powf(shape)).exp(),
            MarginalModel::ParetoI { scale, shape } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
            MarginalModel::Gpd { xi, beta } => gpd::survival(xi, beta, x),
            MarginalModel::Semiparametric(ref s) => s.survival(x),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        SemiparametricGpdTail::check_level(p)?;
        match self {
            MarginalModel::Semiparametric(s) => Ok(s.quantile(p)),
            MarginalModel::Gamma { shape, scale } if p <= 0.5 => {
                Ok(scale * invert_on_half_line(|x| gamma_ur(*shape, x), |x| gamma_lr(*shape, x), p, 1.0 - p, shape.max(1.0)))
            }
            MarginalModel::Exponential { rate } => Ok(-(-p).ln_1p() / rate),
            MarginalModel::Weibull { shape, scale } => Ok(scale * (-(-p).ln_1p()).powf(1.0 / shape)),
            _ => self.upper_quantile(1.0 - p),
        }
    }

    /// Quantile at level `1 − w` computed on the complementary scale.
    pub fn upper_quantile(&self, w: f64) -> Result<f64> {
        if !(w > 0.0 && w < 1.0) {
            return Err(domain(format!("tail probability {w} outside (0, 1)")));
        }
        Ok(match *self {
            MarginalModel::Exponential { rate } => -w.ln() / rate,
            MarginalModel::Weibull { shape, scale } => scale * (-w.ln()).powf(1.0 / shape),
            MarginalModel::ParetoI { scale, shape } => scale * w.powf(-1.0 / shape),
            MarginalModel::Gpd { xi, beta } => gpd::upper_quantile(xi, beta, w),
            MarginalModel::Gamma { shape, scale } => {
                let z = invert_on_half_line(|x| gamma_ur(shape, x), |x| gamma_lr(shape, x), 1.0 - w, w, shape.max(1.0));
                z * scale
            }
            MarginalModel::Semiparametric(ref s) => s.upper_quantile(w),
        })
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(match *self {
            MarginalModel::Exponential { rate } => 1.0 / rate,
            MarginalModel::Gamma { shape, scale } => shape * scale,
            MarginalModel::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            MarginalModel::ParetoI { scale, shape } => {
                if shape <= 1.0 {
                    return Err(CoriskError::NonintegrableTail(format!("Pareto shape {shape} <= 1 has infinite mean")));
                }
                shape * scale / (shape - 1.0)
            }
            MarginalModel::Gpd { .. } | MarginalModel::Semiparametric(_) => {
                let lo = self.lower_endpoint();
                lo + self.stop_loss(lo)?
            }
        })
    }

    /// `E[(X − a)_+]`.
    pub fn stop_loss(&self, a: f64) -> Result<f64> {
        if a.is_nan() {
            return Err(domain("stop-loss retention is NaN"));
        }
        if let MarginalModel::Semiparametric(ref s) = *self {
            return s.stop_loss(a);
        }
        if let MarginalModel::Gpd { xi, beta } = *self {
            return gpd::stop_loss(xi, beta, a);
        }
        let lo = self.lower_endpoint();
        if a <= lo {
            return Ok(self.mean()? - a);
        }
        Ok(match *self {
            MarginalModel::Exponential { rate } => (-rate * a).exp() / rate,
            MarginalModel::Gamma { shape, scale } => {
                let z = a / scale;
                (shape * scale * gamma_ur(shape + 1.0, z) - a * gamma_ur(shape, z)).max(0.0)
            }
            MarginalModel::Weibull { shape, scale } => {
                let z = (a / scale).powf(shape);
                scale * gamma(1.0 + 1.0 / shape) * gamma_ur(1.0 / shape, z)
            }
            MarginalModel::ParetoI { scale, shape } => {
                self.mean()?;
                scale.powf(shape) * a.powf(1.0 - shape) / (shape - 1.0)
            }
            _ => unreachable!(),
        })
    }

    pub fn lower_endpoint(&self) -> f64 {
        match self {
            MarginalModel::ParetoI { scale, .. } => *scale,
            MarginalModel::Semiparametric(s) => s.lower_endpoint(),
            _ => 0.0,
        }
    }

    pub fn upper_endpoint(&self) -> f64 {
        match self {
            MarginalModel::Gpd { xi, beta } => gpd::upper_endpoint(*xi, *beta),
            MarginalModel::Semiparametric(s) => s.upper_endpoint(),
            _ => f64::INFINITY,
        }
    }

    /// Points in `(lo, hi)` where the CDF jumps; quadrature splits there.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            MarginalModel::Semiparametric(s) => s.body_breakpoints(lo, hi),
            _ => Vec::new(),
        }
    }

    /// Fits the semiparametric model with threshold level `alpha`.
    pub fn fit_gpd_excesses(sample: &[f64], alpha: f64) -> Result<Self> {
        Ok(MarginalModel::Semiparametric(SemiparametricGpdTail::fit(sample, alpha)?))
    }
}

/// `Û_{i,k} = F̂_i(x_{i,k})` column by column.
pub fn pseudo_samples(models: &[MarginalModel], data: &Matrix) -> Result<Matrix> {
    if models.len() != data.ncols() {
        return Err(CoriskError::DimensionMismatch { expected: data.ncols(), got: models.len() });
    }
    let mut out = Matrix::zeros(data.nrows(), data.ncols());
    for i in 0..data.nrows() {
        for (j, m) in models.iter().enumerate() {
            out.set(i, j, m.cdf(data.get(i, j)));
        }
    }
    Ok(out)
}
