//! Copula families, inclusion–exclusion survival, distortion functions and tail dependence.

mod archimedean;
mod distortion;
mod gaussian;
mod tail;

pub use archimedean::Generator;
pub use distortion::DistortionContext;
pub use gaussian::GaussianCopula;
pub use tail::{tail_dependence, TailDependence, TailSide};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, CoriskError, Result};
use crate::matrix::Matrix;
use crate::rng::{block_rng, BLOCK_ROWS};

/// Anything with an evaluable joint distribution function on the unit cube.
pub trait Copula: Send + Sync {
    fn dim(&self) -> usize;

    fn cdf(&self, u: &[f64]) -> Result<f64>;

    /// `P(U_1 > p_1, …, U_n > p_n)`.
    fn survival(&self, p: &[f64]) -> Result<f64> {
        check_unit(p, self.dim())?;
        inclusion_exclusion(p, |u| self.cdf(u))
    }
}

pub(crate) fn check_unit(u: &[f64], dim: usize) -> Result<()> {
    if u.len() != dim {
        return Err(CoriskError::DimensionMismatch { expected: dim, got: u.len() });
    }
    if let Some(v) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(domain(format!("coordinate {v} outside [0, 1]")));
    }
    Ok(())
}

/// Signed subset sum `Σ_S (−1)^{|S|} C(u_S)` with `u_S` equal to `p` on `S` and 1 elsewhere.
pub(crate) fn inclusion_exclusion<F: FnMut(&[f64]) -> Result<f64>>(p: &[f64], mut cdf: F) -> Result<f64> {
    let n = p.len();
    let mut u = vec![1.0; n];
    let mut total = 0.0;
    'subsets: for mask in 0u32..(1 << n) {
        for (i, ui) in u.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                if p[i] <= 0.0 {
                    continue 'subsets;
                }
                *ui = p[i];
            } else {
                *ui = 1.0;
            }
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * cdf(&u)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Finite mixture `a1·Gaussian + a2·Gumbel + (1 − a1 − a2)·Clayton`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct MixtureCopula {
    weights: [f64; 2],
    gaussian: GaussianCopula,
    gumbel: Generator,
    clayton: Generator,
}

#[derive(Serialize, Deserialize)]
struct MixtureSpec {
    weights: [f64; 2],
    gaussian: GaussianCopula,
    gumbel_theta: f64,
    clayton_theta: f64,
}

impl TryFrom<MixtureSpec> for MixtureCopula {
    type Error = CoriskError;
    fn try_from(s: MixtureSpec) -> Result<Self> {
        MixtureCopula::new(s.weights, s.gaussian, s.gumbel_theta, s.clayton_theta)
    }
}

impl From<MixtureCopula> for MixtureSpec {
    fn from(m: MixtureCopula) -> Self {
        MixtureSpec {
            weights: m.weights,
            gumbel_theta: m.gumbel.theta(),
            clayton_theta: m.clayton.theta(),
            gaussian: m.gaussian,
        }
    }
}

impl MixtureCopula {
    pub fn new(weights: [f64; 2], gaussian: GaussianCopula, gumbel_theta: f64, clayton_theta: f64) -> Result<Self> {
        let [a1, a2] = weights;
        if !(a1 > 0.0 && a2 > 0.0 && a1 + a2 < 1.0) {
            return Err(invalid(format!("mixture weights ({a1}, {a2}) must satisfy a1, a2 > 0 and a1 + a2 < 1")));
        }
        let gumbel = Generator::Gumbel { theta: gumbel_theta };
        let clayton = Generator::Clayton { theta: clayton_theta };
        gumbel.validate()?;
        clayton.validate()?;
        Ok(Self { weights, gaussian, gumbel, clayton })
    }

    pub fn weights(&self) -> [f64; 3] {
        [self.weights[0], self.weights[1], 1.0 - self.weights[0] - self.weights[1]]
    }

    pub fn gaussian(&self) -> &GaussianCopula {
        &self.gaussian
    }

    pub fn gumbel_theta(&self) -> f64 {
        self.gumbel.theta()
    }

    pub fn clayton_theta(&self) -> f64 {
        self.clayton.theta()
    }

    pub fn components(&self) -> [CopulaModel; 3] {
        let n = self.gaussian.dim();
        [
            CopulaModel::Gaussian(self.gaussian.clone()),
            CopulaModel::Gumbel { dim: n, theta: self.gumbel.theta() },
            CopulaModel::Clayton { dim: n, theta: self.clayton.theta() },
        ]
    }
}

/// Parametric dependence structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CopulaRepr", into = "CopulaRepr")]
pub enum CopulaModel {
    Independence { dim: usize },
    Gaussian(GaussianCopula),
    Gumbel { dim: usize, theta: f64 },
    Clayton { dim: usize, theta: f64 },
    Mixture(MixtureCopula),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum CopulaRepr {
    Independence { dim: usize },
    Gaussian { corr: Vec<Vec<f64>> },
    Gumbel { dim: usize, theta: f64 },
    Clayton { dim: usize, theta: f64 },
    Mixture { weights: [f64; 2], corr: Vec<Vec<f64>>, gumbel_theta: f64, clayton_theta: f64 },
}

impl TryFrom<CopulaRepr> for CopulaModel {
    type Error = CoriskError;
    fn try_from(r: CopulaRepr) -> Result<Self> {
        match r {
            CopulaRepr::Independence { dim } => CopulaModel::independence(dim),
            CopulaRepr::Gaussian { corr } => Ok(CopulaModel::Gaussian(GaussianCopula::new(corr)?)),
            CopulaRepr::Gumbel { dim, theta } => CopulaModel::gumbel(dim, theta),
            CopulaRepr::Clayton { dim, theta } => CopulaModel::clayton(dim, theta),
            CopulaRepr::Mixture { weights, corr, gumbel_theta, clayton_theta } => Ok(CopulaModel::Mixture(
                MixtureCopula::new(weights, GaussianCopula::new(corr)?, gumbel_theta, clayton_theta)?,
            )),
        }
    }
}

impl From<CopulaModel> for CopulaRepr {
    fn from(c: CopulaModel) -> Self {
        match c {
            CopulaModel::Independence { dim } => CopulaRepr::Independence { dim },
            CopulaModel::Gaussian(g) => CopulaRepr::Gaussian { corr: g.corr().to_vec() },
            CopulaModel::Gumbel { dim, theta } => CopulaRepr::Gumbel { dim, theta },
            CopulaModel::Clayton { dim, theta } => CopulaRepr::Clayton { dim, theta },
            CopulaModel::Mixture(m) => CopulaRepr::Mixture {
                weights: m.weights,
                corr: m.gaussian.corr().to_vec(),
                gumbel_theta: m.gumbel.theta(),
                clayton_theta: m.clayton.theta(),
            },
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(invalid(format!("copula dimension must be >= 2, got {dim}")));
    }
    Ok(())
}

impl CopulaModel {
    pub fn independence(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(CopulaModel::Independence { dim })
    }

    pub fn gaussian(corr: Vec<Vec<f64>>) -> Result<Self> {
        Ok(CopulaModel::Gaussian(GaussianCopula::new(corr)?))
    }

    pub fn gumbel(dim: usize, theta: f64) -> Result<Self> {
        check_dim(dim)?;
        Generator::Gumbel { theta }.validate()?;
        Ok(CopulaModel::Gumbel { dim, theta })
    }

    pub fn clayton(dim: usize, theta: f64) -> Result<Self> {
        check_dim(dim)?;
        Generator::Clayton { theta }.validate()?;
        Ok(CopulaModel::Clayton { dim, theta })
    }

    pub fn mixture(weights: [f64; 2], corr: Vec<Vec<f64>>, gumbel_theta: f64, clayton_theta: f64) -> Result<Self> {
        Ok(CopulaModel::Mixture(MixtureCopula::new(weights, GaussianCopula::new(corr)?, gumbel_theta, clayton_theta)?))
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            CopulaModel::Independence { .. } => "independence",
            CopulaModel::Gaussian(_) => "gaussian",
            CopulaModel::Gumbel { .. } => "gumbel",
            CopulaModel::Clayton { .. } => "clayton",
            CopulaModel::Mixture(_) => "mixture",
        }
    }

    fn generator(&self) -> Option<Generator> {
        match *self {
            CopulaModel::Gumbel { theta, .. } => Some(Generator::Gumbel { theta }),
            CopulaModel::Clayton { theta, .. } => Some(Generator::Clayton { theta }),
            _ => None,
        }
    }

    fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            CopulaModel::Independence { .. } => u.iter().product(),
            CopulaModel::Gaussian(g) => g.cdf_reduced(u),
            CopulaModel::Gumbel { theta, .. } => Generator::Gumbel { theta: *theta }.cdf(u),
            CopulaModel::Clayton { theta, .. } => Generator::Clayton { theta: *theta }.cdf(u),
            CopulaModel::Mixture(m) => {
                let [w1, w2, w3] = m.weights();
                w1 * m.gaussian.cdf_reduced(u) + w2 * m.gumbel.cdf(u) + w3 * m.clayton.cdf(u)
            }
        }
        .clamp(0.0, 1.0)
    }

    /// Density at `u` in the open cube; coordinates are clipped to `[1e-12, 1 − 1e-12]`.
    pub fn density(&self, u: &[f64]) -> Result<f64> {
        Ok(self.log_density(u)?.exp())
    }

    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(CoriskError::DimensionMismatch { expected: self.dim(), got: u.len() });
        }
        if let Some(v) = u.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(domain(format!("density needs coordinates strictly inside (0, 1), got {v}")));
        }
        let clipped: Vec<f64> = u.iter().map(|v| v.clamp(1e-12, 1.0 - 1e-12)).collect();
        Ok(self.log_density_unchecked(&clipped))
    }

    pub(crate) fn log_density_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            CopulaModel::Independence { .. } => 0.0,
            CopulaModel::Gaussian(g) => g.log_density(u),
            CopulaModel::Gumbel { .. } | CopulaModel::Clayton { .. } => {
                self.generator().expect("archimedean").log_density(u)
            }
            CopulaModel::Mixture(m) => {
                let [w1, w2, w3] = m.weights();
                let parts = [
                    w1.ln() + m.gaussian.log_density(u),
                    w2.ln() + m.gumbel.log_density(u),
                    w3.ln() + m.clayton.log_density(u),
                ];
                let mx = parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if mx == f64::NEG_INFINITY {
                    return mx;
                }
                mx + parts.iter().map(|p| (p - mx).exp()).sum::<f64>().ln()
            }
        }
    }

    /// One draw written into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            CopulaModel::Independence { .. } => out.iter_mut().for_each(|o| *o = rng.random()),
            CopulaModel::Gaussian(g) => g.sample_row(rng, out),
            CopulaModel::Gumbel { .. } | CopulaModel::Clayton { .. } => {
                self.generator().expect("archimedean").sample_row(rng, out)
            }
            CopulaModel::Mixture(m) => {
                let [w1, w2, _] = m.weights();
                let pick: f64 = rng.random();
                if pick < w1 {
                    m.gaussian.sample_row(rng, out)
                } else if pick < w1 + w2 {
                    m.gumbel.sample_row(rng, out)
                } else {
                    m.clayton.sample_row(rng, out)
                }
            }
        }
        for o in out.iter_mut() {
            *o = o.clamp(1e-16, 1.0 - f64::EPSILON);
        }
    }

    /// `n_samples × dim` draws; identical for a given seed regardless of thread count.
    pub fn sample(&self, n_samples: usize, seed: u64) -> Result<Matrix> {
        if n_samples == 0 {
            return Err(invalid("n_samples must be >= 1"));
        }
        let d = self.dim();
        let mut data = vec![0.0; n_samples * d];
        data.par_chunks_mut(BLOCK_ROWS * d).enumerate().for_each(|(block, chunk)| {
            let mut rng = block_rng(seed, block as u64);
            for row in chunk.chunks_mut(d) {
                self.sample_into(&mut rng, row);
            }
        });
        Matrix::from_vec(n_samples, d, data)
    }

    /// Bivariate Kendall's tau of the family (mixtures: weighted average of components,
    /// which is a heuristic used only for optimizer starting values).
    pub fn kendall_tau(&self, i: usize, j: usize) -> f64 {
        match self {
            CopulaModel::Independence { .. } => 0.0,
            CopulaModel::Gaussian(g) => 2.0 / std::f64::consts::PI * g.corr()[i][j].asin(),
            CopulaModel::Gumbel { .. } | CopulaModel::Clayton { .. } => self.generator().unwrap().kendall_tau(),
            CopulaModel::Mixture(m) => {
                let w = m.weights();
                let comps = m.components();
                (0..3).map(|k| w[k] * comps[k].kendall_tau(i, j)).sum()
            }
        }
    }
}

impl Copula for CopulaModel {
    fn dim(&self) -> usize {
        match self {
            CopulaModel::Independence { dim } | CopulaModel::Gumbel { dim, .. } | CopulaModel::Clayton { dim, .. } => {
                *dim
            }
            CopulaModel::Gaussian(g) => g.dim(),
            CopulaModel::Mixture(m) => m.gaussian.dim(),
        }
    }

    fn cdf(&self, u: &[f64]) -> Result<f64> {
        check_unit(u, self.dim())?;
        Ok(self.cdf_unchecked(u))
    }

    fn survival(&self, p: &[f64]) -> Result<f64> {
        check_unit(p, self.dim())?;
        if let CopulaModel::Independence { .. } = self {
            return Ok(p.iter().map(|v| 1.0 - v).product());
        }
        inclusion_exclusion(p, |u| Ok(self.cdf_unchecked(u)))
    }
}

impl<C: Copula + ?Sized> Copula for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn cdf(&self, u: &[f64]) -> Result<f64> {
        (**self).cdf(u)
    }
    fn survival(&self, p: &[f64]) -> Result<f64> {
        (**self).survival(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stats::{kendall_tau, ks_uniform};

    fn gumbel3() -> CopulaModel {
        CopulaModel::gumbel(3, 2.0).unwrap()
    }

    fn mixture3() -> CopulaModel {
        let g = GaussianCopula::equicorrelated(3, 0.4).unwrap();
        CopulaModel::mixture([0.3, 0.5], g.corr().to_vec(), 1.8, 1.2).unwrap()
    }

    #[test]
    fn spec_cdf_examples() {
        let ind = CopulaModel::independence(3).unwrap();
        assert!((ind.cdf(&[0.5, 0.5, 0.5]).unwrap() - 0.125).abs() < 1e-15);
        assert!((gumbel3().cdf(&[0.5, 1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        let expected = (-(2f64.ln()) * 3f64.sqrt()).exp();
        assert!((gumbel3().cdf(&[0.5, 0.5, 0.5]).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.301_024).abs() < 1e-6);
    }

    #[test]
    fn cdf_rejects_bad_input() {
        assert!(matches!(gumbel3().cdf(&[0.5, 0.5]), Err(CoriskError::DimensionMismatch { .. })));
        assert!(matches!(gumbel3().cdf(&[0.5, 1.2, 0.5]), Err(CoriskError::OutOfDomain(_))));
    }

    #[test]
    fn survival_examples() {
        let ind = CopulaModel::independence(3).unwrap();
        assert!((ind.survival(&[0.95; 3]).unwrap() - 1.25e-4).abs() < 1e-16);
        let g2 = CopulaModel::gumbel(2, 2.0).unwrap();
        let (p1, p2) = (0.3, 0.8);
        let direct = 1.0 - p1 - p2 + g2.cdf(&[p1, p2]).unwrap();
        assert!((g2.survival(&[p1, p2]).unwrap() - direct).abs() < 1e-15);
        // brute-force signed sum for Gumbel θ=2 at (½,½,½)
        let c = |k: i32| (-(k as f64).sqrt() * 2f64.ln()).exp();
        let brute = 1.0 - 3.0 * c(1) + 3.0 * c(2) - c(3);
        let s = gumbel3().survival(&[0.5; 3]).unwrap();
        assert!((s - brute).abs() < 1e-14);
        assert!((s - 0.3246).abs() < 1e-4);
    }

    #[test]
    fn survival_matches_monte_carlo() {
        for c in [gumbel3(), CopulaModel::clayton(3, 2.0).unwrap(), mixture3()] {
            let n = 200_000;
            let m = c.sample(n, 11).unwrap();
            for p in [[0.5, 0.5, 0.5], [0.2, 0.7, 0.9], [0.9, 0.9, 0.9]] {
                let hits = m.rows().filter(|r| r.iter().zip(&p).all(|(u, q)| u > q)).count() as f64;
                let est = hits / n as f64;
                let se = (est * (1.0 - est) / n as f64).sqrt();
                let s = c.survival(&p).unwrap();
                assert!((s - est).abs() < 4.0 * se + 1e-5, "{} {p:?}: {s} vs {est}", c.family_name());
            }
        }
    }

    #[test]
    fn mixture_is_pointwise_convex_combination() {
        let m = mixture3();
        let CopulaModel::Mixture(mx) = &m else { unreachable!() };
        let w = mx.weights();
        let comps = mx.components();
        for u in [[0.2, 0.5, 0.9], [0.7, 0.7, 0.3]] {
            let cdf: f64 = (0..3).map(|k| w[k] * comps[k].cdf(&u).unwrap()).sum();
            let surv: f64 = (0..3).map(|k| w[k] * comps[k].survival(&u).unwrap()).sum();
            let dens: f64 = (0..3).map(|k| w[k] * comps[k].density(&u).unwrap()).sum();
            assert!((m.cdf(&u).unwrap() - cdf).abs() < 1e-12);
            assert!((m.survival(&u).unwrap() - surv).abs() < 1e-12);
            assert!((m.density(&u).unwrap() - dens).abs() < 1e-12 * dens.max(1.0));
        }
    }

    #[test]
    fn monotone_on_grid() {
        for c in [gumbel3(), CopulaModel::clayton(3, 2.0).unwrap(), mixture3()] {
            let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
            for &a in &grid {
                for &b in &grid {
                    let mut prev_c = -1.0;
                    let mut prev_s = 2.0;
                    for &x in &grid {
                        let u = [x, a, b];
                        let cv = c.cdf(&u).unwrap();
                        let sv = c.survival(&u).unwrap();
                        assert!(cv >= prev_c - 1e-12 && sv <= prev_s + 1e-12);
                        assert!((0.0..=1.0).contains(&cv) && (0.0..=1.0).contains(&sv));
                        prev_c = cv;
                        prev_s = sv;
                    }
                }
            }
        }
    }

    #[test]
    fn densities_match_cdf_cross_partials() {
        let h = 1e-3;
        for c in [gumbel3(), CopulaModel::clayton(3, 2.0).unwrap(), CopulaModel::gumbel(3, 3.7).unwrap()] {
            for u in [[0.3, 0.5, 0.7], [0.6, 0.6, 0.8]] {
                let mut fd = 0.0;
                for mask in 0..8u32 {
                    let mut v = u;
                    let mut sign = 1.0;
                    for (i, vi) in v.iter_mut().enumerate() {
                        if mask >> i & 1 == 1 {
                            *vi += h;
                        } else {
                            *vi -= h;
                            sign = -sign;
                        }
                    }
                    fd += sign * c.cdf(&v).unwrap();
                }
                fd /= 8.0 * h * h * h;
                let an = c.density(&u).unwrap();
                assert!((fd - an).abs() < 1e-4 * an.max(1.0) + 1e-3, "{}: {fd} vs {an}", c.family_name());
            }
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let ind = CopulaModel::independence(3).unwrap();
        let pts = ind.sample(200_000, 3).unwrap();
        for c in [gumbel3(), CopulaModel::clayton(3, 1.0).unwrap(), mixture3()] {
            let vals: Vec<f64> = pts.rows().map(|u| c.density(u).unwrap()).collect();
            let m = crate::numeric::stats::mean(&vals);
            let se = crate::numeric::stats::std_dev(&vals) / (vals.len() as f64).sqrt();
            assert!((m - 1.0).abs() < 5.0 * se, "{}: {m} ± {se}", c.family_name());
        }
        assert_eq!(ind.density(&[0.3, 0.2, 0.9]).unwrap(), 1.0);
        assert!(ind.density(&[0.0, 0.2, 0.9]).is_err());
    }

    #[test]
    fn sampler_kendall_tau_and_uniformity() {
        let n = 100_000;
        let cases = [
            (CopulaModel::independence(2).unwrap(), 0.0, 0.01),
            (CopulaModel::gumbel(2, 2.0).unwrap(), 0.5, 0.02),
            (CopulaModel::clayton(2, 2.0).unwrap(), 0.5, 0.02),
        ];
        for (c, tau, tol) in cases {
            let m = c.sample(n, 2024).unwrap();
            let t = kendall_tau(&m.column(0), &m.column(1));
            assert!((t - tau).abs() < tol, "{}: tau {t}", c.family_name());
            for j in 0..2 {
                // 1% critical value of the KS statistic
                assert!(ks_uniform(&m.column(j)) < 1.628 / (n as f64).sqrt());
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_across_thread_counts() {
        let c = mixture3();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| c.sample(150_000, 5).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn serde_validates() {
        let m = mixture3();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<CopulaModel>(&s).unwrap(), m);
        assert!(serde_json::from_str::<CopulaModel>(r#"{"family":"gumbel","dim":3,"theta":0.5}"#).is_err());
        assert!(CopulaModel::mixture([0.6, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2.0, 1.0).is_err());
    }
}
