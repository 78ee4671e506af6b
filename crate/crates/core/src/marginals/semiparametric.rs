use serde::{Deserialize, Serialize};

use super::gpd::{self, fit_gpd, GpdFit};
use crate::error::{domain, invalid, CoriskError, Result};

/// Minimum number of strict excesses over the threshold order statistic.
pub const MIN_EXCESSES: usize = 30;

/// Empirical body up to the `α`-quantile order statistic, fitted GPD tail above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiparametricGpdTail {
    sorted_sample: Vec<f64>,
    threshold_level: f64,
    threshold_value: f64,
    fit: GpdFit,
}

/// `⌈αT⌉` guarded against representation error in `αT`.
pub(crate) fn ceil_index(alpha: f64, t: usize) -> usize {
    let x = alpha * t as f64;
    let r = x.round();
    let k = if (x - r).abs() < 1e-9 * x.max(1.0) { r } else { x.ceil() };
    (k as usize).clamp(1, t)
}

impl SemiparametricGpdTail {
    pub fn fit(sample: &[f64], threshold_level: f64) -> Result<Self> {
        if !(threshold_level > 0.0 && threshold_level < 1.0) {
            return Err(invalid(format!("threshold level {threshold_level} outside (0, 1)")));
        }
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sample contains non-finite values"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let t = sorted.len();
        if t == 0 {
            return Err(CoriskError::InsufficientExcesses { got: 0, need: MIN_EXCESSES });
        }
        let k = ceil_index(threshold_level, t);
        let u = sorted[k - 1];
        let excesses: Vec<f64> = sorted.iter().filter(|&&v| v > u).map(|v| v - u).collect();
        if excesses.len() < MIN_EXCESSES {
            return Err(CoriskError::InsufficientExcesses { got: excesses.len(), need: MIN_EXCESSES });
        }
        let fit = fit_gpd(&excesses)?;
        Ok(Self { sorted_sample: sorted, threshold_level, threshold_value: u, fit })
    }

    pub fn threshold_level(&self) -> f64 {
        self.threshold_level
    }

    pub fn threshold_value(&self) -> f64 {
        self.threshold_value
    }

    pub fn gpd(&self) -> &GpdFit {
        &self.fit
    }

    pub fn sample_size(&self) -> usize {
        self.sorted_sample.len()
    }

    pub fn sorted_sample(&self) -> &[f64] {
        &self.sorted_sample
    }

    fn xi(&self) -> f64 {
        self.fit.effective_xi()
    }

    fn count_le(&self, x: f64) -> usize {
        self.sorted_sample.partition_point(|&v| v <= x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let u = self.threshold_value;
        if x < u {
            self.count_le(x) as f64 / self.sorted_sample.len() as f64
        } else if x == u {
            self.threshold_level
        } else {
            1.0 - self.survival(x)
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        let u = self.threshold_value;
        if x <= u {
            return 1.0 - self.cdf(x);
        }
        (1.0 - self.threshold_level) * gpd::survival(self.xi(), self.fit.beta, x - u)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= self.threshold_level {
            let t = self.sorted_sample.len();
            self.sorted_sample[ceil_index(p, t) - 1]
        } else {
            self.upper_quantile(1.0 - p)
        }
    }

    /// Quantile at level `1 − w`, evaluated on the complementary scale in the tail.
    pub fn upper_quantile(&self, w: f64) -> f64 {
        let tail = 1.0 - self.threshold_level;
        if w >= tail {
            return self.quantile(1.0 - w);
        }
        self.threshold_value + gpd::upper_quantile(self.xi(), self.fit.beta, w / tail)
    }

    pub fn upper_endpoint(&self) -> f64 {
        self.threshold_value + gpd::upper_endpoint(self.xi(), self.fit.beta)
    }

    pub fn lower_endpoint(&self) -> f64 {
        self.sorted_sample[0]
    }

    pub fn stop_loss(&self, a: f64) -> Result<f64> {
        let u = self.threshold_value;
        let tail = 1.0 - self.threshold_level;
        let (xi, beta) = (self.xi(), self.fit.beta);
        if a >= u {
            return Ok(tail * gpd::stop_loss(xi, beta, a - u)?);
        }
        // exact integral of the step survival over [a, u)
        let t = self.sorted_sample.len() as f64;
        let mut body = 0.0;
        let mut left = a;
        let start = self.count_le(a);
        for &x in &self.sorted_sample[start..] {
            if x >= u {
                break;
            }
            body += (x - left) * (1.0 - self.count_le(left) as f64 / t);
            left = x;
        }
        body += (u - left) * (1.0 - self.count_le(left) as f64 / t);
        Ok(body + tail * gpd::stop_loss(xi, beta, 0.0)?)
    }

    /// Breakpoints of the step body inside `[lo, hi]`.
    pub fn body_breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .sorted_sample
            .iter()
            .cloned()
            .filter(|&v| v > lo && v < hi && v <= self.threshold_value)
            .collect();
        pts.dedup();
        pts
    }

    pub(crate) fn check_level(p: f64) -> Result<()> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("probability {p} outside (0, 1)")));
        }
        Ok(())
    }
}
