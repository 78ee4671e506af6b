//! Copula estimation over pseudo-samples, the empirical copula and region fitting errors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{Copula, CopulaModel, GaussianCopula, MixtureCopula};
use crate::error::{invalid, CoriskError, Result};
use crate::matrix::Matrix;
use crate::numeric::optimize::{bfgs, hessian, nelder_mead, BfgsConfig, NelderMeadConfig, OptResult};
use crate::numeric::stats::{kendall_tau, pairwise_sum};
use crate::rng::block_rng;

pub const MIN_ROWS: usize = 100;
/// Lower bound on each mixture weight.
pub const WEIGHT_FLOOR: f64 = 1e-4;
const LOGLIK_CHUNK: usize = 256;
const THETA_GUMBEL_MAX: f64 = 100.0;
const THETA_CLAYTON_MAX: f64 = 200.0;

/// `C̃(u) = (1/N) Σ 1{Û_k ≤ u}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCopula {
    points: Matrix,
}

impl EmpiricalCopula {
    pub fn new(points: Matrix) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(invalid("empirical copula needs at least one point"));
        }
        if let Some(v) = points.as_slice().iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(invalid(format!("pseudo-observation {v} outside (0, 1)")));
        }
        Ok(Self { points })
    }

    /// Rank-based pseudo-observations `rank/(N + 1)`; ties share their average rank.
    pub fn from_ranks(data: &Matrix) -> Result<Self> {
        Self::new(rank_pseudo_observations(data)?)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        let d = self.points.ncols();
        if u.len() != d {
            return Err(CoriskError::DimensionMismatch { expected: d, got: u.len() });
        }
        let count = self
            .points
            .as_slice()
            .chunks(d)
            .filter(|row| row.iter().zip(u).all(|(a, b)| a <= b))
            .count();
        Ok(count as f64 / self.len() as f64)
    }
}

impl Copula for EmpiricalCopula {
    fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn cdf(&self, u: &[f64]) -> Result<f64> {
        self.eval(u)
    }
}

pub fn rank_pseudo_observations(data: &Matrix) -> Result<Matrix> {
    let (n, d) = (data.nrows(), data.ncols());
    if n == 0 {
        return Err(invalid("empty data"));
    }
    let mut out = Matrix::zeros(n, d);
    for j in 0..d {
        let col = data.column(j);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut k = 0;
        while k < n {
            let mut e = k;
            while e + 1 < n && col[idx[e + 1]] == col[idx[k]] {
                e += 1;
            }
            let rank = 0.5 * (k + e) as f64 + 1.0;
            for &i in &idx[k..=e] {
                out.set(i, j, rank / (n as f64 + 1.0));
            }
            k = e + 1;
        }
    }
    Ok(out)
}

/// Clips every entry into `[eps, 1 − eps]`.
pub fn clip_pseudo(m: &Matrix, eps: f64) -> Matrix {
    let data = m.as_slice().iter().map(|v| v.clamp(eps, 1.0 - eps)).collect();
    Matrix::from_vec(m.nrows(), m.ncols(), data).expect("same shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independence,
    Gaussian,
    Gumbel,
    Clayton,
    Mixture,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independence" => Ok(Family::Independence),
            "gaussian" => Ok(Family::Gaussian),
            "gumbel" => Ok(Family::Gumbel),
            "clayton" => Ok(Family::Clayton),
            "mixture" | "mixed" => Ok(Family::Mixture),
            other => Err(CoriskError::Input(format!("unknown copula family {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::Gumbel => "gumbel",
            Family::Clayton => "clayton",
            Family::Mixture => "mixture",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub starts: usize,
    /// Simplex evaluations spent on every start before the best ones are refined.
    pub screen_evaluations: usize,
    /// Number of screened starts carried into full refinement.
    pub refine: usize,
    pub simplex: NelderMeadConfig,
    pub polish: BfgsConfig,
    /// Step of the finite-difference Hessian in transformed coordinates.
    pub hessian_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            starts: 8,
            screen_evaluations: 300,
            refine: 3,
            simplex: NelderMeadConfig { initial_step: 0.3, max_evaluations: 3000, f_tol: 1e-12, x_tol: 1e-9 },
            polish: BfgsConfig { grad_tol: 1e-5, max_iterations: 200, fd_step: 1e-6 },
            hessian_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub model: CopulaModel,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub loglik: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Gradient norm of the mean negative log-likelihood in transformed coordinates.
    pub grad_norm: f64,
    /// Smallest eigenvalue of the observed information in transformed coordinates.
    pub min_information_eigenvalue: f64,
    /// Mixture components whose weight sits at the floor.
    pub vanishing_components: Vec<String>,
}

impl FitResult {
    pub fn aic(&self) -> f64 {
        2.0 * self.params.len() as f64 - 2.0 * self.loglik
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names.iter().position(|n| n == name).map(|i| self.params[i])
    }
}

/// Sum of log-densities; rows are split into fixed chunks so the summation order
/// does not depend on the thread count.
pub fn log_likelihood(model: &CopulaModel, pseudo: &Matrix) -> Result<f64> {
    if pseudo.ncols() != model.dim() {
        return Err(CoriskError::DimensionMismatch { expected: model.dim(), got: pseudo.ncols() });
    }
    if let Some(v) = pseudo.as_slice().iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(CoriskError::Input(format!("pseudo-observation {v} outside (0, 1)")));
    }
    Ok(loglik_unchecked(model, pseudo))
}

fn loglik_unchecked(model: &CopulaModel, pseudo: &Matrix) -> f64 {
    let d = pseudo.ncols();
    let parts: Vec<f64> = pseudo
        .as_slice()
        .par_chunks(LOGLIK_CHUNK * d)
        .map(|chunk| chunk.chunks(d).map(|row| model.log_density_unchecked(row)).sum())
        .collect();
    pairwise_sum(&parts)
}

fn fisher_z(r: f64) -> f64 {
    r.clamp(-0.99, 0.99).atanh()
}

/// Weights `floor + (1 − 3·floor)·softmax(z1, z2, 0)`.
fn weights_from(z1: f64, z2: f64) -> [f64; 3] {
    let m = z1.max(z2).max(0.0);
    let e = [(z1 - m).exp(), (z2 - m).exp(), (-m).exp()];
    let s = e[0] + e[1] + e[2];
    let span = 1.0 - 3.0 * WEIGHT_FLOOR;
    [WEIGHT_FLOOR + span * e[0] / s, WEIGHT_FLOOR + span * e[1] / s, WEIGHT_FLOOR + span * e[2] / s]
}

fn weights_to(w: [f64; 3]) -> (f64, f64) {
    let span = 1.0 - 3.0 * WEIGHT_FLOOR;
    let s: Vec<f64> = w.iter().map(|v| ((v - WEIGHT_FLOOR) / span).max(1e-6)).collect();
    ((s[0] / s[2]).ln(), (s[1] / s[2]).ln())
}

struct Parameterization {
    family: Family,
    dim: usize,
}

impl Parameterization {
    fn n_corr(&self) -> usize {
        self.dim * (self.dim - 1) / 2
    }

    fn names(&self) -> Vec<String> {
        let mut corr = Vec::new();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                corr.push(format!("rho_{}{}", i + 1, j + 1));
            }
        }
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        match self.family {
            Family::Independence => vec![],
            Family::Gaussian => corr,
            Family::Gumbel => s(&["theta_g"]),
            Family::Clayton => s(&["theta_c"]),
            Family::Mixture => corr.into_iter().chain(s(&["theta_g", "theta_c", "a1", "a2"])).collect(),
        }
    }

    /// Natural parameters from transformed coordinates.
    fn natural(&self, z: &[f64]) -> Vec<f64> {
        let k = self.n_corr();
        match self.family {
            Family::Independence => vec![],
            Family::Gaussian => z.iter().map(|v| v.tanh()).collect(),
            Family::Gumbel => vec![1.0 + z[0].exp()],
            Family::Clayton => vec![z[0].exp()],
            Family::Mixture => {
                let mut out: Vec<f64> = z[..k].iter().map(|v| v.tanh()).collect();
                out.push(1.0 + z[k].exp());
                out.push(z[k + 1].exp());
                let w = weights_from(z[k + 2], z[k + 3]);
                out.extend_from_slice(&w[..2]);
                out
            }
        }
    }

    fn model(&self, z: &[f64]) -> Result<CopulaModel> {
        let x = self.natural(z);
        let k = self.n_corr();
        match self.family {
            Family::Independence => CopulaModel::independence(self.dim),
            Family::Gaussian => Ok(CopulaModel::Gaussian(GaussianCopula::from_upper_correlations(self.dim, &x)?)),
            Family::Gumbel => {
                if x[0] > THETA_GUMBEL_MAX {
                    return Err(invalid("theta_g above search bound"));
                }
                CopulaModel::gumbel(self.dim, x[0])
            }
            Family::Clayton => {
                if x[0] > THETA_CLAYTON_MAX {
                    return Err(invalid("theta_c above search bound"));
                }
                CopulaModel::clayton(self.dim, x[0])
            }
            Family::Mixture => {
                if x[k] > THETA_GUMBEL_MAX || x[k + 1] > THETA_CLAYTON_MAX {
                    return Err(invalid("dependence parameter above search bound"));
                }
                let g = GaussianCopula::from_upper_correlations(self.dim, &x[..k])?;
                Ok(CopulaModel::Mixture(MixtureCopula::new([x[k + 2], x[k + 3]], g, x[k], x[k + 1])?))
            }
        }
    }

    /// Starting points built from the pairwise Kendall taus; mixtures also start from
    /// the single-family fits in `components` (transformed correlations, Gumbel, Clayton).
    fn starts(&self, taus: &[f64], components: Option<(Vec<f64>, f64, f64)>, count: usize) -> Vec<Vec<f64>> {
        let mean_tau = (taus.iter().sum::<f64>() / taus.len() as f64).clamp(0.02, 0.9);
        let corr: Vec<f64> = taus.iter().map(|t| fisher_z((std::f64::consts::FRAC_PI_2 * t).sin())).collect();
        let theta_g = 1.0 / (1.0 - mean_tau);
        let theta_c = 2.0 * mean_tau / (1.0 - mean_tau);
        let scales = [1.0, 2.0, 0.6, 3.0];
        let mut out = Vec::new();
        match self.family {
            Family::Independence => out.push(vec![]),
            Family::Gaussian => {
                out.push(corr.clone());
                out.push(vec![0.0; corr.len()]);
            }
            Family::Gumbel => out.extend(scales.iter().map(|s| vec![((theta_g - 1.0) * s).ln()])),
            Family::Clayton => out.extend(scales.iter().map(|s| vec![(theta_c * s).ln()])),
            Family::Mixture => {
                let weights = [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6], [1.0 / 3.0; 3]];
                let moment = (corr.clone(), (theta_g - 1.0).ln(), theta_c.ln());
                let fitted = components.unwrap_or_else(|| (corr.clone(), ((theta_g - 1.0) * 2.5).ln(), (theta_c * 2.5).ln()));
                for (c, zg, zc) in [fitted, moment] {
                    for w in weights {
                        let (z1, z2) = weights_to(w);
                        let mut z = c.clone();
                        z.extend_from_slice(&[zg, zc, z1, z2]);
                        out.push(z);
                    }
                }
            }
        }
        let take = count.max(1).min(out.len());
        out.truncate(take);
        out
    }
}

fn pairwise_taus(pseudo: &Matrix) -> Vec<f64> {
    let d = pseudo.ncols();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| pseudo.column(j)).collect();
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            out.push(kendall_tau(&cols[i], &cols[j]));
        }
    }
    out
}

fn check_pseudo(pseudo: &Matrix) -> Result<()> {
    if pseudo.nrows() < MIN_ROWS {
        return Err(CoriskError::Input(format!("copula fit needs at least {MIN_ROWS} rows, got {}", pseudo.nrows())));
    }
    if pseudo.ncols() < 2 {
        return Err(CoriskError::Input("copula fit needs at least two columns".into()));
    }
    if let Some(v) = pseudo.as_slice().iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(CoriskError::Input(format!("pseudo-observation {v} outside (0, 1)")));
    }
    for j in 0..pseudo.ncols() {
        let c = pseudo.column(j);
        if c.iter().all(|v| *v == c[0]) {
            return Err(CoriskError::Input(format!("pseudo-data column {} is constant", j + 1)));
        }
    }
    Ok(())
}

/// Inverse of a symmetric matrix with eigenvalues floored at `floor`; returns the
/// inverse and the smallest eigenvalue before flooring.
fn floored_inverse(h: &[Vec<f64>], floor: f64) -> (DMatrix<f64>, f64) {
    let d = h.len();
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (h[i][j] + h[j][i]));
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v.max(floor));
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    (inv, min)
}

/// Maximum-likelihood fit of one family over pseudo-observations.
pub fn fit_copula(pseudo: &Matrix, family: Family, cfg: &FitConfig) -> Result<FitResult> {
    check_pseudo(pseudo)?;
    let n = pseudo.nrows() as f64;
    let par = Parameterization { family, dim: pseudo.ncols() };
    if family == Family::Independence {
        let model = CopulaModel::independence(par.dim)?;
        return Ok(FitResult {
            family,
            model,
            param_names: vec![],
            params: vec![],
            std_errors: vec![],
            loglik: 0.0,
            n_obs: pseudo.nrows(),
            converged: true,
            iterations: 0,
            grad_norm: 0.0,
            min_information_eigenvalue: f64::INFINITY,
            vanishing_components: vec![],
        });
    }
    let objective = |z: &[f64]| -> f64 {
        match par.model(z) {
            Ok(m) => {
                let ll = loglik_unchecked(&m, pseudo);
                if ll.is_finite() {
                    -ll / n
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    };
    let taus = pairwise_taus(pseudo);
    let components = if family == Family::Mixture {
        let single = |f: Family| fit_copula(pseudo, f, cfg).ok().map(|r| r.params);
        match (single(Family::Gaussian), single(Family::Gumbel), single(Family::Clayton)) {
            (Some(r), Some(g), Some(c)) => Some((r.iter().map(|v| fisher_z(*v)).collect(), (g[0] - 1.0).ln(), c[0].ln())),
            _ => None,
        }
    } else {
        None
    };
    let screen = NelderMeadConfig { max_evaluations: cfg.screen_evaluations, ..cfg.simplex };
    let mut screened: Vec<OptResult> = par
        .starts(&taus, components, cfg.starts)
        .iter()
        .map(|z0| nelder_mead(objective, z0, screen))
        .filter(|r| r.value.is_finite())
        .collect();
    screened.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut best: Option<OptResult> = None;
    let mut total_iterations: usize = screened.iter().map(|r| r.iterations).sum();
    for start in screened.iter().take(cfg.refine.max(1)) {
        let coarse = nelder_mead(objective, &start.x, cfg.simplex);
        let mut fine = bfgs(objective, &coarse.x, cfg.polish);
        total_iterations += coarse.iterations + fine.iterations;
        for _ in 0..4 {
            if fine.converged {
                break;
            }
            let again = bfgs(objective, &fine.x, cfg.polish);
            total_iterations += again.iterations;
            fine = again;
        }
        let r = if fine.value <= coarse.value { fine } else { coarse };
        if !r.value.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => (r.converged && !b.converged) || (r.converged == b.converged && r.value < b.value),
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| CoriskError::NonConvergence(format!("{} fit: no start reached a finite likelihood", family.name())))?;
    if !best.converged {
        return Err(CoriskError::NonConvergence(format!(
            "{} fit: no start converged (best gradient norm {:.3e})",
            family.name(),
            best.grad_norm
        )));
    }
    let model = par.model(&best.x)?;
    let loglik = loglik_unchecked(&model, pseudo);

    // observed information of the summed log-likelihood in transformed coordinates
    let mut obj = objective;
    let h_mean = hessian(&mut obj, &best.x, cfg.hessian_step);
    let h: Vec<Vec<f64>> = h_mean.iter().map(|r| r.iter().map(|v| v * n).collect()).collect();
    let (cov_z, min_eig) = floored_inverse(&h, 1e-10);
    let d = best.x.len();
    let eps = 1e-7;
    let base = par.natural(&best.x);
    let mut jac = DMatrix::zeros(base.len(), d);
    for j in 0..d {
        let mut zp = best.x.clone();
        let mut zm = best.x.clone();
        zp[j] += eps;
        zm[j] -= eps;
        let (xp, xm) = (par.natural(&zp), par.natural(&zm));
        for i in 0..base.len() {
            jac[(i, j)] = (xp[i] - xm[i]) / (2.0 * eps);
        }
    }
    let cov = &jac * cov_z * jac.transpose();
    let std_errors = (0..base.len()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();

    let mut vanishing = Vec::new();
    if let CopulaModel::Mixture(m) = &model {
        for (w, name) in m.weights().iter().zip(["gaussian", "gumbel", "clayton"]) {
            if *w < 10.0 * WEIGHT_FLOOR {
                vanishing.push(name.to_string());
            }
        }
    }
    Ok(FitResult {
        family,
        model,
        param_names: par.names(),
        params: base,
        std_errors,
        loglik,
        n_obs: pseudo.nrows(),
        converged: best.converged,
        iterations: total_iterations,
        grad_norm: best.grad_norm,
        min_information_eigenvalue: min_eig,
        vanishing_components: vanishing,
    })
}

pub fn fit_mixed_copula(pseudo: &Matrix, cfg: &FitConfig) -> Result<FitResult> {
    fit_copula(pseudo, Family::Mixture, cfg)
}

/// Axis-aligned box `[lower, upper] ⊆ [0, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(invalid("region bounds must be non-empty and of equal length"));
        }
        for (a, b) in lower.iter().zip(&upper) {
            if !(0.0 <= *a && a < b && *b <= 1.0) {
                return Err(invalid(format!("region side [{a}, {b}] has no volume inside [0, 1]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    /// Parses `"[a,b]^n"` or a product `"[a,b]x[c,d]x..."`.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let s = s.replace(' ', "");
        let side = |t: &str| -> Result<(f64, f64)> {
            let inner = t
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| CoriskError::Input(format!("bad region side {t:?}")))?;
            let (a, b) = inner.split_once(',').ok_or_else(|| CoriskError::Input(format!("bad region side {t:?}")))?;
            let p = |v: &str| v.parse::<f64>().map_err(|_| CoriskError::Input(format!("bad number {v:?}")));
            Ok((p(a)?, p(b)?))
        };
        let sides: Vec<(f64, f64)> = if let Some((body, pow)) = s.rsplit_once('^') {
            let k: usize = pow.parse().map_err(|_| CoriskError::Input(format!("bad exponent in {s:?}")))?;
            vec![side(body)?; k]
        } else {
            s.split(['x', '×']).map(side).collect::<Result<_>>()?
        };
        if sides.len() != n {
            return Err(CoriskError::DimensionMismatch { expected: n, got: sides.len() });
        }
        Self::new(sides.iter().map(|s| s.0).collect(), sides.iter().map(|s| s.1).collect())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn label(&self) -> String {
        if self.lower.iter().all(|v| *v == self.lower[0]) && self.upper.iter().all(|v| *v == self.upper[0]) {
            format!("[{},{}]^{}", self.lower[0], self.upper[0], self.dim())
        } else {
            self.lower.iter().zip(&self.upper).map(|(a, b)| format!("[{a},{b}]")).collect::<Vec<_>>().join("x")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittingError {
    pub value: f64,
    /// Batch-means standard error, propagated through the square root.
    pub std_error: f64,
    pub n_mc: usize,
    pub seed: u64,
}

pub const DEFAULT_FIT_MC: usize = 1 << 16;
const FIT_BATCHES: usize = 32;

/// `sqrt(mean over uniform points in S of (C(u) − C̃(u))²)`.
pub fn fitting_error(
    c: &dyn Copula,
    emp: &EmpiricalCopula,
    region: &Region,
    n_mc: usize,
    seed: u64,
) -> Result<FittingError> {
    Ok(fitting_errors(&[c], emp, region, n_mc, seed)?.remove(0))
}

/// [`fitting_error`] for several copulas on one shared set of uniform points.
pub fn fitting_errors(
    copulas: &[&dyn Copula],
    emp: &EmpiricalCopula,
    region: &Region,
    n_mc: usize,
    seed: u64,
) -> Result<Vec<FittingError>> {
    let d = emp.dim();
    for c in copulas {
        if c.dim() != d {
            return Err(CoriskError::DimensionMismatch { expected: d, got: c.dim() });
        }
    }
    if region.dim() != d {
        return Err(CoriskError::DimensionMismatch { expected: d, got: region.dim() });
    }
    if n_mc < FIT_BATCHES {
        return Err(invalid(format!("n_mc must be at least {FIT_BATCHES}")));
    }
    let k = copulas.len();
    let per = n_mc.div_ceil(FIT_BATCHES);
    // per batch: (sum of squares per copula, count)
    let batches: Vec<(Vec<f64>, usize)> = (0..FIT_BATCHES)
        .into_par_iter()
        .map(|b| -> Result<(Vec<f64>, usize)> {
            let mut rng = block_rng(seed, b as u64);
            let count = per.min(n_mc.saturating_sub(b * per));
            let mut u = vec![0.0; d];
            let mut sq = vec![Vec::with_capacity(count); k];
            for _ in 0..count {
                for (j, v) in u.iter_mut().enumerate() {
                    let r: f64 = rng.random();
                    *v = region.lower[j] + r * (region.upper[j] - region.lower[j]);
                }
                let e = emp.eval(&u)?;
                for (c, s) in copulas.iter().zip(sq.iter_mut()) {
                    let diff = c.cdf(&u)? - e;
                    s.push(diff * diff);
                }
            }
            Ok((sq.iter().map(|s| pairwise_sum(s)).collect(), count))
        })
        .collect::<Result<_>>()?;
    let total: usize = batches.iter().map(|b| b.1).sum();
    Ok((0..k)
        .map(|c| {
            let ms = batches.iter().map(|b| b.0[c]).sum::<f64>() / total as f64;
            let means: Vec<f64> = batches.iter().filter(|b| b.1 > 0).map(|b| b.0[c] / b.1 as f64).collect();
            let m = means.len() as f64;
            let var = means.iter().map(|x| (x - ms).powi(2)).sum::<f64>() / (m - 1.0);
            let value = ms.sqrt();
            let std_error = if value > 0.0 { (var / m).sqrt() / (2.0 * value) } else { 0.0 };
            FittingError { value, std_error, n_mc: total, seed }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_copula_examples() {
        let pts = Matrix::from_rows(&[
            vec![0.1, 0.2, 0.3],
            vec![0.4, 0.5, 0.1],
            vec![0.3, 0.3, 0.3],
            vec![0.9, 0.8, 0.7],
        ])
        .unwrap();
        let e = EmpiricalCopula::new(pts).unwrap();
        assert_eq!(e.eval(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(e.eval(&[0.05, 0.05, 0.05]).unwrap(), 0.0);
        assert_eq!(e.eval(&[0.5, 0.5, 0.5]).unwrap(), 0.75);
        assert!(e.eval(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn ranks_handle_ties() {
        let m = Matrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 1.0]]).unwrap();
        let r = rank_pseudo_observations(&m).unwrap();
        assert_eq!(r.column(0), vec![0.25, 0.5, 0.75]);
        assert_eq!(r.column(1), vec![0.625, 0.625, 0.25]);
    }

    #[test]
    fn regions_parse() {
        let r = Region::parse("[0.8,1]^3", 3).unwrap();
        assert_eq!(r.lower, vec![0.8; 3]);
        let r = Region::parse("[0,0.5]x[0.5,1]x[0,1]", 3).unwrap();
        assert_eq!(r.upper, vec![0.5, 1.0, 1.0]);
        assert!(Region::parse("[0.5,0.5]^3", 3).is_err());
        assert!(Region::parse("[0,1]^2", 3).is_err());
    }

    #[test]
    fn weight_transform_round_trips() {
        let w = [0.3, 0.5, 0.2];
        let (a, b) = weights_to(w);
        let back = weights_from(a, b);
        for k in 0..3 {
            assert!((back[k] - w[k]).abs() < 1e-12);
        }
        let edge = weights_from(-800.0, 800.0);
        assert!(edge.iter().all(|v| *v >= WEIGHT_FLOOR));
    }

    #[test]
    fn preconditions() {
        let small = CopulaModel::gumbel(3, 2.0).unwrap().sample(10, 1).unwrap();
        assert!(matches!(fit_mixed_copula(&small, &FitConfig::default()), Err(CoriskError::Input(_))));
        let mut flat = CopulaModel::gumbel(3, 2.0).unwrap().sample(200, 1).unwrap();
        for i in 0..200 {
            flat.set(i, 1, 0.5);
        }
        assert!(fit_copula(&flat, Family::Gumbel, &FitConfig::default()).is_err());
    }

    #[test]
    fn single_family_recovery() {
        let data = CopulaModel::clayton(3, 2.0).unwrap().sample(2000, 7).unwrap();
        let f = fit_copula(&data, Family::Clayton, &FitConfig::default()).unwrap();
        assert!(f.converged);
        let theta = f.params[0];
        assert!((theta - 2.0).abs() < 4.0 * f.std_errors[0], "{theta} ± {}", f.std_errors[0]);
        assert!(f.std_errors[0] > 0.0 && f.std_errors[0] < 0.2);
        let recomputed = log_likelihood(&f.model, &data).unwrap();
        assert!((recomputed - f.loglik).abs() < 1e-8);
    }

    #[test]
    fn fitting_error_of_self_is_zero() {
        let data = CopulaModel::gumbel(3, 2.0).unwrap().sample(500, 3).unwrap();
        let e = EmpiricalCopula::new(data).unwrap();
        let r = fitting_error(&e, &e, &Region::cube(0.0, 1.0, 3).unwrap(), 4096, 1).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
