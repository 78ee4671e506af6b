use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoriskError, Result};
use crate::numeric::normal;

/// Gaussian copula with a validated correlation matrix. The Cholesky factor and
/// precision matrix are cached at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GaussianSpec", into = "GaussianSpec")]
pub struct GaussianCopula {
    corr: Vec<Vec<f64>>,
    chol: Vec<Vec<f64>>,
    precision_minus_identity: Vec<Vec<f64>>,
    log_det: f64,
}

#[derive(Serialize, Deserialize)]
struct GaussianSpec {
    corr: Vec<Vec<f64>>,
}

impl TryFrom<GaussianSpec> for GaussianCopula {
    type Error = CoriskError;
    fn try_from(s: GaussianSpec) -> Result<Self> {
        GaussianCopula::new(s.corr)
    }
}

impl From<GaussianCopula> for GaussianSpec {
    fn from(g: GaussianCopula) -> Self {
        GaussianSpec { corr: g.corr }
    }
}

impl PartialEq for GaussianCopula {
    fn eq(&self, other: &Self) -> bool {
        self.corr == other.corr
    }
}

fn cholesky(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let dm = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let l = dm.cholesky()?.l();
    Some((0..n).map(|i| (0..n).map(|j| l[(i, j)]).collect()).collect())
}

impl GaussianCopula {
    pub fn new(corr: Vec<Vec<f64>>) -> Result<Self> {
        let n = corr.len();
        if n < 2 {
            return Err(invalid(format!("Gaussian copula needs dimension >= 2, got {n}")));
        }
        for (i, row) in corr.iter().enumerate() {
            if row.len() != n {
                return Err(CoriskError::DimensionMismatch { expected: n, got: row.len() });
            }
            if (row[i] - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("correlation diagonal entry {i} is {}, expected 1", row[i])));
            }
            for j in 0..n {
                if !row[j].is_finite() || (row[j] - corr[j][i]).abs() > 1e-12 {
                    return Err(invalid("correlation matrix must be finite and symmetric"));
                }
            }
        }
        let chol = cholesky(&corr).ok_or_else(|| invalid("correlation matrix is not positive definite"))?;
        let log_det = 2.0 * (0..n).map(|i| chol[i][i].ln()).sum::<f64>();
        if !log_det.is_finite() || log_det < -40.0 {
            return Err(invalid("correlation matrix is numerically singular"));
        }
        let dm = DMatrix::from_fn(n, n, |i, j| corr[i][j]);
        let inv = dm.try_inverse().ok_or_else(|| invalid("correlation matrix is singular"))?;
        let precision_minus_identity =
            (0..n).map(|i| (0..n).map(|j| inv[(i, j)] - if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Ok(Self { corr, chol, precision_minus_identity, log_det })
    }

    /// Equicorrelated matrix of dimension `n`.
    pub fn equicorrelated(n: usize, rho: f64) -> Result<Self> {
        Self::new((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { rho }).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.corr.len()
    }

    pub fn corr(&self) -> &[Vec<f64>] {
        &self.corr
    }

    /// Upper-triangle correlations in row order `(ρ12, ρ13, …, ρ23, …)`.
    pub fn upper_correlations(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.corr[i][j]);
            }
        }
        out
    }

    pub fn from_upper_correlations(n: usize, r: &[f64]) -> Result<Self> {
        if r.len() != n * (n - 1) / 2 {
            return Err(CoriskError::DimensionMismatch { expected: n * (n - 1) / 2, got: r.len() });
        }
        let mut corr = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            corr[i][i] = 1.0;
            for j in i + 1..n {
                corr[i][j] = r[k];
                corr[j][i] = r[k];
                k += 1;
            }
        }
        Self::new(corr)
    }

    /// CDF on the reduced set of coordinates strictly below 1.
    pub(crate) fn cdf_reduced(&self, u: &[f64]) -> f64 {
        let idx: Vec<usize> = (0..u.len()).filter(|&i| u[i] < 1.0).collect();
        if idx.iter().any(|&i| u[i] <= 0.0) {
            return 0.0;
        }
        let z: Vec<f64> = idx.iter().map(|&i| normal::ppf(u[i])).collect();
        let r = |a: usize, b: usize| self.corr[idx[a]][idx[b]];
        let v = match idx.len() {
            0 => 1.0,
            1 => u[idx[0]],
            2 => normal::bvn_cdf(z[0], z[1], r(0, 1)),
            3 => normal::tvn_cdf([z[0], z[1], z[2]], r(0, 1), r(0, 2), r(1, 2)),
            m => {
                let sub: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|b| r(a, b)).collect()).collect();
                let chol = cholesky(&sub).expect("principal submatrix of a PD matrix is PD");
                normal::mvn_cdf_qmc(&z, &chol, 1e-6)
            }
        };
        v.clamp(0.0, 1.0)
    }

    pub(crate) fn log_density(&self, u: &[f64]) -> f64 {
        let z: Vec<f64> = u.iter().map(|&v| normal::ppf(v)).collect();
        let n = z.len();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += z[i] * self.precision_minus_identity[i][j] * z[j];
            }
        }
        -0.5 * self.log_det - 0.5 * q
    }

    pub(crate) fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.dim();
        let e: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for i in 0..n {
            let x: f64 = (0..=i).map(|j| self.chol[i][j] * e[j]).sum();
            out[i] = normal::cdf(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_matrices() {
        assert!(GaussianCopula::new(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(GaussianCopula::new(vec![vec![1.0, 1.5], vec![1.5, 1.0]]).is_err());
        assert!(GaussianCopula::new(vec![vec![0.9, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(GaussianCopula::equicorrelated(3, -0.6).is_err());
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let g = GaussianCopula::equicorrelated(3, 0.3).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GaussianCopula = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        assert!(serde_json::from_str::<GaussianCopula>(r#"{"corr":[[1,2],[2,1]]}"#).is_err());
    }

    #[test]
    fn density_is_one_at_zero_correlation() {
        let g = GaussianCopula::equicorrelated(2, 0.0).unwrap();
        assert!(g.log_density(&[0.3, 0.7]).abs() < 1e-14);
    }
}
