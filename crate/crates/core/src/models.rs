//! Analytic joint laws (multivariate Pareto, multivariate Gumbel-exponential) and the
//! `JointModel` wrapper that presents every joint law as copula + marginals.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::copulas::{check_unit, Copula, CopulaModel};
use crate::error::{domain, invalid, CoriskError, Result};
use crate::marginals::MarginalModel;
use crate::numeric::roots::{bracket_upper, solve_increasing};

/// `Pa(α_1, …, α_n, a)` with joint survival `(Σ x_i/α_i − (n − 1))^{−a}` on `x_i ≥ α_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariatePareto {
    pub scales: Vec<f64>,
    pub shape: f64,
}

impl MultivariatePareto {
    pub fn new(scales: Vec<f64>, shape: f64) -> Result<Self> {
        if scales.len() < 2 {
            return Err(invalid("multivariate Pareto needs at least two coordinates"));
        }
        if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) || !(shape > 0.0 && shape.is_finite()) {
            return Err(invalid("multivariate Pareto scales and shape must be positive"));
        }
        Ok(Self { scales, shape })
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn joint_survival(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(CoriskError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if let Some(i) = (0..x.len()).find(|&i| x[i] < self.scales[i]) {
            return Err(domain(format!("x_{} = {} below the support bound {}", i + 1, x[i], self.scales[i])));
        }
        let n = self.dim() as f64;
        let s: f64 = x.iter().zip(&self.scales).map(|(v, a)| v / a).sum::<f64>() - (n - 1.0);
        Ok(s.powf(-self.shape).clamp(0.0, 1.0))
    }

    pub fn marginal(&self, i: usize) -> MarginalModel {
        MarginalModel::ParetoI { scale: self.scales[i], shape: self.shape }
    }

    /// Closed form of the conditional quantile obtained from the joint survival ratio.
    pub fn mcovar_closed_form(&self, target: usize, p1: f64, p_tail: &[f64]) -> Result<f64> {
        let (v, others) = self.conditioning_values(target, p_tail)?;
        let n = self.dim() as f64;
        let s: f64 = others.iter().zip(&v).map(|(&j, x)| x / self.scales[j]).sum();
        let a1 = self.scales[target];
        Ok(a1 * ((1.0 - p1).powf(-1.0 / self.shape) * (1.0 + s - (n - 1.0)) - s + (n - 1.0)))
    }

    fn conditioning_values(&self, target: usize, p_tail: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
        let n = self.dim();
        if target >= n || p_tail.len() + 1 != n {
            return Err(CoriskError::DimensionMismatch { expected: n - 1, got: p_tail.len() });
        }
        let others: Vec<usize> = (0..n).filter(|&j| j != target).collect();
        let v = others
            .iter()
            .zip(p_tail)
            .map(|(&j, &p)| self.marginal(j).quantile(p))
            .collect::<Result<Vec<_>>>()?;
        Ok((v, others))
    }

    /// MCoVaR by inverting `P(X_t > x | X_j > VaR_{p_j}(X_j), j ≠ t)` built from joint survival ratios.
    pub fn mcovar_analytic(&self, target: usize, p1: f64, p_tail: &[f64]) -> Result<f64> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(domain(format!("level {p1} outside (0, 1)")));
        }
        let (v, others) = self.conditioning_values(target, p_tail)?;
        let mut x = vec![0.0; self.dim()];
        for (&j, &vj) in others.iter().zip(&v) {
            x[j] = vj;
        }
        let a1 = self.scales[target];
        x[target] = a1;
        let denom = self.joint_survival(&x)?;
        if !(denom > 0.0) {
            return Err(CoriskError::ZeroProbabilityEvent);
        }
        // conditional distribution function of the target, increasing in its argument
        let cond_cdf = |t: f64| {
            let mut y = x.clone();
            y[target] = t;
            1.0 - self.joint_survival(&y).map(|s| s / denom).unwrap_or(f64::NAN)
        };
        let hi = bracket_upper(cond_cdf, p1, a1, 2.0 * a1)?;
        solve_increasing(cond_cdf, p1, a1, hi, 1e-13 * hi, 1e-12)
    }
}

impl Copula for MultivariatePareto {
    fn dim(&self) -> usize {
        self.scales.len()
    }

    fn survival(&self, p: &[f64]) -> Result<f64> {
        check_unit(p, self.dim())?;
        if p.iter().any(|&v| v >= 1.0) {
            return Ok(0.0);
        }
        let n = self.dim() as f64;
        let s: f64 = p.iter().map(|&v| (1.0 - v).powf(-1.0 / self.shape)).sum::<f64>() - (n - 1.0);
        Ok(s.powf(-self.shape).clamp(0.0, 1.0))
    }

    fn cdf(&self, u: &[f64]) -> Result<f64> {
        check_unit(u, self.dim())?;
        dual_inclusion_exclusion(u, |p| self.survival(p))
    }
}

/// Multivariate Gumbel-exponential law with survival `exp(−Σ_I λ_I Π_{i∈I} x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GumbelExponential {
    dim: usize,
    /// Nonempty index subsets (zero-based) with their rates.
    pub lambda: Vec<(Vec<usize>, f64)>,
}

impl GumbelExponential {
    pub fn new(dim: usize, lambda: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if dim < 2 {
            return Err(invalid("Gumbel-exponential needs at least two coordinates"));
        }
        for (set, l) in &lambda {
            if set.is_empty() || set.iter().any(|&i| i >= dim) {
                return Err(invalid(format!("invalid index set {set:?}")));
            }
            if !(*l >= 0.0 && l.is_finite()) {
                return Err(invalid(format!("rate {l} for {set:?} must be nonnegative")));
            }
        }
        let m = Self { dim, lambda };
        for i in 0..dim {
            if !(m.single_rate(i) > 0.0) {
                return Err(invalid(format!("marginal rate of coordinate {} must be positive", i + 1)));
            }
        }
        Ok(m)
    }

    /// Trivariate construction with singles equal to `single`, every pair and the
    /// triple equal to `joint`.
    pub fn symmetric3(single: f64, joint: f64) -> Result<Self> {
        let sets: Vec<(Vec<usize>, f64)> = vec![
            (vec![0], single),
            (vec![1], single),
            (vec![2], single),
            (vec![0, 1], joint),
            (vec![0, 2], joint),
            (vec![1, 2], joint),
            (vec![0, 1, 2], joint),
        ];
        Self::new(3, sets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn single_rate(&self, i: usize) -> f64 {
        self.lambda.iter().filter(|(s, _)| s.len() == 1 && s[0] == i).map(|(_, l)| l).sum()
    }

    pub fn marginal(&self, i: usize) -> MarginalModel {
        MarginalModel::Exponential { rate: self.single_rate(i) }
    }

    pub fn joint_survival(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(CoriskError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if let Some(v) = x.iter().find(|v| !(**v >= 0.0)) {
            return Err(domain(format!("Gumbel-exponential support is x >= 0, got {v}")));
        }
        let expo: f64 = self.lambda.iter().map(|(s, l)| l * s.iter().map(|&i| x[i]).product::<f64>()).sum();
        Ok((-expo).exp())
    }
}

impl Copula for GumbelExponential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn survival(&self, p: &[f64]) -> Result<f64> {
        check_unit(p, self.dim)?;
        if p.iter().any(|&v| v >= 1.0) {
            return Ok(0.0);
        }
        let x: Vec<f64> = p.iter().enumerate().map(|(i, &v)| -(-v).ln_1p() / self.single_rate(i)).collect();
        self.joint_survival(&x)
    }

    fn cdf(&self, u: &[f64]) -> Result<f64> {
        check_unit(u, self.dim)?;
        dual_inclusion_exclusion(u, |p| self.survival(p))
    }
}

/// `C(u) = Σ_S (−1)^{|S|} Ĉ(u_S)` with `u_S` equal to `u` on `S` and 0 elsewhere.
fn dual_inclusion_exclusion<F: FnMut(&[f64]) -> Result<f64>>(u: &[f64], mut surv: F) -> Result<f64> {
    let n = u.len();
    let mut p = vec![0.0; n];
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        for (i, pi) in p.iter_mut().enumerate() {
            *pi = if mask >> i & 1 == 1 { u[i] } else { 0.0 };
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * surv(&p)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// A joint law presented as a copula plus marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JointModel {
    Copula { copula: CopulaModel, marginals: Vec<MarginalModel> },
    Pareto(MultivariatePareto),
    GumbelExponential(GumbelExponential),
}

impl JointModel {
    pub fn from_copula(copula: CopulaModel, marginals: Vec<MarginalModel>) -> Result<Self> {
        if copula.dim() != marginals.len() {
            return Err(CoriskError::DimensionMismatch { expected: copula.dim(), got: marginals.len() });
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(JointModel::Copula { copula, marginals })
    }

    pub fn dim(&self) -> usize {
        self.copula().dim()
    }

    /// Copula of the joint law (the implied copula for analytic models).
    pub fn copula(&self) -> &dyn Copula {
        match self {
            JointModel::Copula { copula, .. } => copula,
            JointModel::Pareto(m) => m,
            JointModel::GumbelExponential(m) => m,
        }
    }

    pub fn marginal(&self, i: usize) -> Result<Cow<'_, MarginalModel>> {
        if i >= self.dim() {
            return Err(domain(format!("asset index {i} outside dimension {}", self.dim())));
        }
        Ok(match self {
            JointModel::Copula { marginals, .. } => Cow::Borrowed(&marginals[i]),
            JointModel::Pareto(m) => Cow::Owned(m.marginal(i)),
            JointModel::GumbelExponential(m) => Cow::Owned(m.marginal(i)),
        })
    }

    /// `Ĉ(F_1(x_1), …, F_n(x_n))` i.e. the joint survival through copula and marginals.
    pub fn implied_survival(&self, x: &[f64]) -> Result<f64> {
        let p = (0..self.dim()).map(|i| Ok(self.marginal(i)?.cdf(x[i]))).collect::<Result<Vec<f64>>>()?;
        self.copula().survival(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pa(scales: &[f64]) -> MultivariatePareto {
        MultivariatePareto::new(scales.to_vec(), 5.0).unwrap()
    }

    #[test]
    fn joint_survival_examples() {
        let m = pa(&[1.0, 1.0, 1.0]);
        assert_eq!(m.joint_survival(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((m.joint_survival(&[2.0, 2.0, 2.0]).unwrap() - 4f64.powi(-5)).abs() < 1e-18);
        assert!(m.joint_survival(&[0.5, 1.0, 1.0]).is_err());
        let g = GumbelExponential::new(3, vec![(vec![0], 1.0), (vec![1], 1.0), (vec![2], 1.0)]).unwrap();
        assert!((g.joint_survival(&[1.0, 1.0, 1.0]).unwrap() - (-3.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn implied_copula_survival() {
        let g = GumbelExponential::new(3, vec![(vec![0], 2.0), (vec![1], 1.0), (vec![2], 0.5)]).unwrap();
        assert!((g.survival(&[0.95; 3]).unwrap() - 1.25e-4).abs() < 1e-15);
        let m = pa(&[1.0, 1.0, 1.0]);
        // VaR_½ = 2^{1/5}; survival (3·2^{1/5} − 2)^{−5}
        let v = 0.5f64.powf(-0.2);
        let expected = (3.0 * v - 2.0).powf(-5.0);
        assert!((m.survival(&[0.5; 3]).unwrap() - expected).abs() < 1e-15);
        assert!(m.survival(&[0.5, 1.0 - 1e-12, 0.5]).unwrap() < 1e-9);
    }

    #[test]
    fn implied_copula_has_uniform_margins() {
        for c in [
            Box::new(pa(&[1.0, 3.0, 2.0])) as Box<dyn Copula>,
            Box::new(GumbelExponential::symmetric3(10.0, 100.0).unwrap()),
        ] {
            for &u in &[0.1, 0.5, 0.93] {
                assert!((c.cdf(&[u, 1.0, 1.0]).unwrap() - u).abs() < 1e-12);
                assert!((c.cdf(&[1.0, 1.0, u]).unwrap() - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_mcovar_matches_closed_form() {
        let m = pa(&[1.0, 2.0, 3.0]);
        for t in 0..3 {
            for &p1 in &[0.1, 0.5, 0.95] {
                let a = m.mcovar_analytic(t, p1, &[0.95, 0.9]).unwrap();
                let c = m.mcovar_closed_form(t, p1, &[0.95, 0.9]).unwrap();
                assert!((a - c).abs() < 1e-9 * c, "{t} {p1}: {a} vs {c}");
            }
        }
        // P(X_1 > X* | X_2 > v, X_3 > v) = 0.05
        let m = pa(&[1.0, 1.0, 1.0]);
        let x = m.mcovar_analytic(0, 0.95, &[0.95, 0.95]).unwrap();
        let v = 20f64.powf(0.2);
        let ratio = m.joint_survival(&[x, v, v]).unwrap() / m.joint_survival(&[1.0, v, v]).unwrap();
        assert!((ratio - 0.05).abs() < 1e-12);
    }

    #[test]
    fn pareto_is_rti() {
        let m = pa(&[1.0, 1.0, 1.0]);
        let grid: Vec<f64> = (0..12).map(|k| 1.0 + 0.4 * k as f64).collect();
        for &x1 in &grid {
            for &x3 in &grid {
                let mut prev = 0.0;
                for &x2 in &grid {
                    let c = m.joint_survival(&[x1, x2, x3]).unwrap() / m.joint_survival(&[1.0, x2, x3]).unwrap();
                    assert!(c >= prev - 1e-14);
                    prev = c;
                }
            }
        }
    }

    #[test]
    fn gumbel_exponential_whr_ratio_nondecreasing() {
        let a = GumbelExponential::symmetric3(10.0, 100.0).unwrap();
        let b = GumbelExponential::symmetric3(10.0, 10.0).unwrap();
        let grid: Vec<f64> = (0..15).map(|k| 0.03 * k as f64).collect();
        for &y in &grid {
            for &z in &grid {
                let mut prev = 0.0;
                for &x in &grid {
                    let r = b.joint_survival(&[x, y, z]).unwrap() / a.joint_survival(&[x, y, z]).unwrap();
                    assert!(r >= prev * (1.0 - 1e-12));
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn joint_model_consistency() {
        let m = pa(&[1.0, 2.0, 3.0]);
        let j = JointModel::Pareto(m.clone());
        for x in [[1.5, 2.5, 3.5], [4.0, 2.0, 9.0]] {
            let direct = m.joint_survival(&x).unwrap();
            assert!((j.implied_survival(&x).unwrap() - direct).abs() < 1e-12);
        }
        assert!(JointModel::from_copula(CopulaModel::independence(3).unwrap(), vec![]).is_err());
    }
}
