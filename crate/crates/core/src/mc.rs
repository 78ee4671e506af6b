//! Monte Carlo oracles for the conditional measures: rejection sampling of the
//! exceedance event through (copula, marginals).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{Copula, CopulaModel};
use crate::error::{invalid, CoriskError, Result};
use crate::marginals::MarginalModel;
use crate::models::JointModel;
use crate::rng::BLOCK_ROWS;

/// Minimum number of samples that must survive the conditioning event.
pub const MIN_EFFECTIVE: usize = 1000;
/// Minimum total number of draws.
pub const MIN_DRAWS: usize = 100_000;
const BATCHES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_effective: usize,
    pub n_total: usize,
    pub seed: u64,
}

/// One conditioning event: target asset and the levels of the other assets.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub target: usize,
    pub p_tail: Vec<f64>,
}

/// Target losses of the draws that fell in `{U_j > p_j, j ≠ target}`, in draw order.
#[derive(Debug, Clone)]
pub struct ConditionalSample {
    pub values: Vec<f64>,
    pub n_total: usize,
    pub seed: u64,
}

fn copula_and_marginals(joint: &JointModel) -> Result<(&CopulaModel, &[MarginalModel])> {
    match joint {
        JointModel::Copula { copula, marginals } => Ok((copula, marginals)),
        _ => Err(CoriskError::Unsupported("Monte Carlo oracles need a copula-based joint model".into())),
    }
}

/// Draws `n` rows once and extracts the conditional target sample of every event.
pub fn conditional_samples(joint: &JointModel, events: &[EventSpec], n: usize, seed: u64) -> Result<Vec<ConditionalSample>> {
    let (copula, marginals) = copula_and_marginals(joint)?;
    if n < MIN_DRAWS {
        return Err(invalid(format!("Monte Carlo oracles need n >= {MIN_DRAWS}, got {n}")));
    }
    let d = copula.dim();
    for e in events {
        if e.target >= d || e.p_tail.len() + 1 != d {
            return Err(CoriskError::DimensionMismatch { expected: d - 1, got: e.p_tail.len() });
        }
    }
    let blocks = n.div_ceil(BLOCK_ROWS);
    let per_block: Vec<Vec<Vec<f64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let rows = BLOCK_ROWS.min(n - b * BLOCK_ROWS);
            let mut out = vec![Vec::new(); events.len()];
            let mut rng = crate::rng::block_rng(seed, b as u64);
            let mut u = vec![0.0; d];
            for _ in 0..rows {
                copula.sample_into(&mut rng, &mut u);
                for (k, e) in events.iter().enumerate() {
                    let others = (0..d).filter(|&j| j != e.target);
                    if others.zip(&e.p_tail).all(|(j, &p)| u[j] > p) {
                        out[k].push(u[e.target]);
                    }
                }
            }
            out
        })
        .collect();
    events
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let m = &marginals[e.target];
            let values = per_block
                .iter()
                .flat_map(|b| b[k].iter())
                .map(|&u| m.upper_quantile(1.0 - u).or_else(|_| m.quantile(u)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ConditionalSample { values, n_total: n, seed })
        })
        .collect()
}

fn batch_stats(batch: &[f64]) -> f64 {
    let k = batch.len() as f64;
    let m = batch.iter().sum::<f64>() / k;
    (batch.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1.0) / k).sqrt()
}

impl ConditionalSample {
    fn check(&self) -> Result<()> {
        if self.values.len() < MIN_EFFECTIVE {
            return Err(CoriskError::RareEvent { n_effective: self.values.len(), need: MIN_EFFECTIVE });
        }
        Ok(())
    }

    fn estimate(&self, value: f64, std_error: f64) -> McEstimate {
        McEstimate { value, std_error, n_effective: self.values.len(), n_total: self.n_total, seed: self.seed }
    }

    fn sorted(&self) -> Vec<f64> {
        let mut s = self.values.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    fn quantile_of(sorted: &[f64], p: f64) -> f64 {
        let m = sorted.len();
        let k = ((p * m as f64).ceil() as usize).clamp(1, m);
        sorted[k - 1]
    }

    /// Conditional empirical `p1`-quantile; standard error from the binomial
    /// order-statistic confidence bracket.
    pub fn mcovar(&self, p1: f64) -> Result<McEstimate> {
        self.check()?;
        let s = self.sorted();
        let m = s.len() as f64;
        let q = Self::quantile_of(&s, p1);
        let half = 1.96 * (m * p1 * (1.0 - p1)).sqrt();
        let lo = Self::quantile_of(&s, ((m * p1 - half) / m).max(0.0));
        let hi = Self::quantile_of(&s, ((m * p1 + half) / m).min(1.0));
        Ok(self.estimate(q, (hi - lo) / (2.0 * 1.96)))
    }

    fn batch_means<F: Fn(f64) -> f64>(&self, f: F) -> (f64, f64) {
        let m = self.values.len();
        let batches: Vec<f64> = (0..BATCHES)
            .map(|b| {
                let chunk = &self.values[b * m / BATCHES..(b + 1) * m / BATCHES];
                chunk.iter().map(|&x| f(x)).sum::<f64>() / chunk.len() as f64
            })
            .collect();
        let total = self.values.iter().map(|&x| f(x)).sum::<f64>() / m as f64;
        (total, batch_stats(&batches))
    }

    /// `q + E[(X − q)_+ | event]/(1 − p1)` with `q` the conditional empirical quantile.
    pub fn mcoes(&self, p1: f64) -> Result<McEstimate> {
        let q = self.mcovar(p1)?.value;
        let (v, se) = self.batch_means(|x| (x - q).max(0.0) / (1.0 - p1));
        Ok(self.estimate(q + v, se))
    }

    /// `E[(X − a)_+ | event]`.
    pub fn mmme(&self, a: f64) -> Result<McEstimate> {
        self.check()?;
        let (v, se) = self.batch_means(|x| (x - a).max(0.0));
        Ok(self.estimate(v, se))
    }
}

pub fn mc_mcovar(joint: &JointModel, target: usize, p1: f64, p_tail: &[f64], n: usize, seed: u64) -> Result<McEstimate> {
    let ev = EventSpec { target, p_tail: p_tail.to_vec() };
    conditional_samples(joint, &[ev], n, seed)?[0].mcovar(p1)
}

pub fn mc_mcoes(joint: &JointModel, target: usize, p1: f64, p_tail: &[f64], n: usize, seed: u64) -> Result<McEstimate> {
    let ev = EventSpec { target, p_tail: p_tail.to_vec() };
    conditional_samples(joint, &[ev], n, seed)?[0].mcoes(p1)
}

/// MMME oracle with `A = Σ w_j VaR_{p_j}(X_j)` over the non-target assets.
pub fn mc_mmme(
    joint: &JointModel,
    target: usize,
    p_tail: &[f64],
    weights: &[f64],
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let req = crate::measures::MeasureRequest::new(target, 0.5, p_tail.to_vec(), weights.to_vec())?;
    let a = crate::measures::mmme_threshold(joint, &req)?;
    let ev = EventSpec { target, p_tail: p_tail.to_vec() };
    conditional_samples(joint, &[ev], n, seed)?[0].mmme(a)
}
