use serde::{Deserialize, Serialize};

use super::Copula;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Upper,
    Lower,
}

/// Numeric-limit estimate of a multivariate tail-dependence coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDependence {
    pub value: f64,
    /// The last two raw sequence values `u = 1 − 2^{-19}, 1 − 2^{-20}` (or their lower-tail mirrors).
    pub last_two: [f64; 2],
    /// False when the last two extrapolated values differ by more than `1e-3`.
    pub converged: bool,
}

const J_MIN: i32 = 4;
const J_MAX: i32 = 20;

fn aitken(x0: f64, x1: f64, x2: f64) -> f64 {
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let denom = d2 - d1;
    if denom.abs() < 1e-15 || d2.abs() < 1e-15 {
        return x2;
    }
    let v = x2 - d2 * d2 / denom;
    if v.is_finite() {
        v
    } else {
        x2
    }
}

/// Conditional probability that coordinates `k+1..n` are in the tail given that the
/// first `k` are, along `u = 1 − 2^{-j}` (upper) or `u = 2^{-j}` (lower), extrapolated.
pub fn tail_dependence<C: Copula + ?Sized>(c: &C, side: TailSide, k: usize) -> Result<TailDependence> {
    let n = c.dim();
    if !(1..n).contains(&k) {
        return Err(domain(format!("conditioning set size {k} must be in [1, {})", n)));
    }
    let mut seq = Vec::new();
    for j in J_MIN..=J_MAX {
        let eps = 2f64.powi(-j);
        let v = match side {
            TailSide::Upper => {
                let u = 1.0 - eps;
                let all = vec![u; n];
                let mut cond = vec![0.0; n];
                cond[..k].fill(u);
                c.survival(&all)? / c.survival(&cond)?
            }
            TailSide::Lower => {
                let all = vec![eps; n];
                let mut cond = vec![1.0; n];
                cond[..k].fill(eps);
                c.cdf(&all)? / c.cdf(&cond)?
            }
        };
        seq.push(v.clamp(0.0, 1.0));
    }
    let m = seq.len();
    let last = aitken(seq[m - 3], seq[m - 2], seq[m - 1]);
    let prev = aitken(seq[m - 4], seq[m - 3], seq[m - 2]);
    Ok(TailDependence {
        value: last.clamp(0.0, 1.0),
        last_two: [seq[m - 2], seq[m - 1]],
        converged: (last - prev).abs() <= 1e-3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::CopulaModel;

    #[test]
    fn gumbel_upper_matches_closed_form() {
        let c = CopulaModel::gumbel(2, 2.0).unwrap();
        let td = tail_dependence(&c, TailSide::Upper, 1).unwrap();
        assert!((td.value - (2.0 - 2f64.sqrt())).abs() < 1e-4, "{td:?}");
        assert!(td.converged);
    }

    #[test]
    fn clayton_lower_matches_closed_form() {
        let c = CopulaModel::clayton(2, 2.0).unwrap();
        let td = tail_dependence(&c, TailSide::Lower, 1).unwrap();
        assert!((td.value - 2f64.powf(-0.5)).abs() < 1e-4, "{td:?}");
    }

    #[test]
    fn gaussian_is_tail_independent() {
        let c = CopulaModel::gaussian(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let td = tail_dependence(&c, TailSide::Upper, 1).unwrap();
        assert!(td.value < 1e-2, "{td:?}");
    }

    #[test]
    fn independence_both_sides() {
        let c = CopulaModel::independence(3).unwrap();
        for side in [TailSide::Upper, TailSide::Lower] {
            let td = tail_dependence(&c, side, 2).unwrap();
            assert!(td.value < 1e-4);
        }
        assert!(tail_dependence(&c, TailSide::Upper, 3).is_err());
    }
}
