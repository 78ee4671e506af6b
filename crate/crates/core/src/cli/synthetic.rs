//! Synthetic three-asset price history drawn from a known mixed copula with normal bodies
//! and generalized Pareto loss tails.

use std::path::Path;

use chrono::NaiveDate;

use crate::copulas::CopulaModel;
use crate::error::{CoriskError, Result};
use crate::marginals::MarginalModel;
use crate::numeric::normal;
use crate::tables::GPD_FITS;

pub const SYNTH_DAYS: usize = 1200;
pub const SYNTH_SEED: u64 = 20150901;
pub const SYNTH_START: (i32, u32, u32) = (2015, 9, 1);
/// Mixture truth: weights of the Gaussian and Gumbel parts, equicorrelation, Gumbel and Clayton θ.
pub const SYNTH_COPULA: ([f64; 2], f64, f64, f64) = ([0.3, 0.5], 0.08, 2.6, 9.4);
pub const SYNTH_THRESHOLD: f64 = 0.9;
pub const SYNTH_BODY_SCALE: [f64; 3] = [2.5, 3.5, 3.5];
pub const SYNTH_START_PRICE: [f64; 3] = [230.0, 100.0, 50.0];
/// Row (0-based, excluding the first day) whose second price is left blank.
pub const SYNTH_MISSING_ROW: usize = 600;

pub fn synthetic_copula() -> Result<CopulaModel> {
    let (w, rho, tg, tc) = SYNTH_COPULA;
    let corr = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { rho }).collect()).collect();
    CopulaModel::mixture(w, corr, tg, tc)
}

/// Loss quantile: `σ·Φ⁻¹(u)` up to the threshold, GPD excess above it.
pub fn synthetic_loss_quantile(asset: usize, u: f64) -> Result<f64> {
    let s = SYNTH_BODY_SCALE[asset];
    if u <= SYNTH_THRESHOLD {
        return Ok(s * normal::ppf(u));
    }
    let (xi, _, beta, _) = GPD_FITS[asset];
    let g = MarginalModel::Gpd { xi, beta };
    Ok(s * normal::ppf(SYNTH_THRESHOLD) + g.upper_quantile((1.0 - u) / (1.0 - SYNTH_THRESHOLD))?)
}

/// Writes the price CSV: a date column and one column per asset, prices with six decimals.
pub fn write_synthetic_prices(path: &Path, days: usize, seed: u64) -> Result<()> {
    let u = synthetic_copula()?.sample(days - 1, seed)?;
    let start = NaiveDate::from_ymd_opt(SYNTH_START.0, SYNTH_START.1, SYNTH_START.2).expect("valid date");
    let mut w = csv::Writer::from_path(path).map_err(|e| CoriskError::Input(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| CoriskError::Input(format!("{}: {e}", path.display()));
    w.write_record(["date", "BTC", "ETH", "XMR"]).map_err(io)?;
    let mut prices = SYNTH_START_PRICE;
    let fmt = |p: &[f64; 3]| p.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>();
    let mut rec = vec![start.to_string()];
    rec.extend(fmt(&prices));
    w.write_record(&rec).map_err(io)?;
    for t in 0..days - 1 {
        for (j, p) in prices.iter_mut().enumerate() {
            let x = synthetic_loss_quantile(j, u.get(t, j))?;
            *p *= (-x / 100.0).exp();
        }
        let date = start + chrono::Days::new(t as u64 + 1);
        let mut rec = vec![date.to_string()];
        rec.extend(fmt(&prices));
        if t == SYNTH_MISSING_ROW {
            rec[2].clear();
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CoriskError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_is_continuous_at_threshold() {
        for a in 0..3 {
            let lo = synthetic_loss_quantile(a, SYNTH_THRESHOLD).unwrap();
            let hi = synthetic_loss_quantile(a, SYNTH_THRESHOLD + 1e-12).unwrap();
            assert!((hi - lo).abs() < 1e-8);
        }
    }
}
