//! Grid-based checkers for univariate and copula orders, MTP2/RTI dependence
//! conditions, and the comparison-theorem fixtures.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{Copula, CopulaModel, Generator};
use crate::error::{domain, invalid, CoriskError, Result};
use crate::marginals::MarginalModel;
use crate::measures::{self, MeasureRequest};
use crate::models::{GumbelExponential, JointModel, MultivariatePareto};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    St,
    Disp,
    Star,
    Ew,
    Ps,
    Concordance,
    Whr,
    Mtp2,
    Rti,
    Theorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheckReport {
    pub order_kind: OrderKind,
    pub grid_spec: String,
    pub passed: bool,
    /// Most negative margin found (positive or zero when the order holds everywhere).
    pub worst_violation: f64,
    pub witness: Vec<f64>,
    pub tolerance: f64,
}

/// Reduces `(margin, point)` pairs in order; ties keep the first point.
fn report(kind: OrderKind, grid_spec: String, margins: Vec<(f64, Vec<f64>)>, tolerance: f64) -> Result<OrderCheckReport> {
    let mut worst = f64::INFINITY;
    let mut witness = Vec::new();
    for (m, pt) in margins {
        if m.is_nan() {
            return Err(CoriskError::NumericFailure(format!("NaN margin at {pt:?}")));
        }
        if m < worst {
            worst = m;
            witness = pt;
        }
    }
    if worst == f64::INFINITY {
        return Err(invalid("empty evaluation grid"));
    }
    Ok(OrderCheckReport { order_kind: kind, grid_spec, passed: worst >= -tolerance, worst_violation: worst, witness, tolerance })
}

fn check_prob_grid(grid: &[f64], min_len: usize) -> Result<Vec<f64>> {
    if grid.len() < min_len {
        return Err(invalid(format!("grid needs at least {min_len} points, got {}", grid.len())));
    }
    if let Some(p) = grid.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(invalid(format!("grid point {p} outside (0, 1)")));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// `n` points spread over `(lo, hi)` with spacing shrinking geometrically toward `hi`.
pub fn tail_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = ((1.0 - lo).ln(), (1.0 - hi).ln());
    (0..n).map(|k| 1.0 - (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Expected proportional shortfall `E[(X − VaR_p)_+]/VaR_p`.
pub fn eps(m: &MarginalModel, p: f64) -> Result<f64> {
    let q = measures::var(m, p)?;
    if !(q > 0.0) {
        return Err(CoriskError::NonpositiveBenchmark { name: "VaR", value: q });
    }
    Ok(m.stop_loss(q)? / q)
}

/// Checks `F ≤_kind G` on the probability grid.
pub fn check_univariate_order(
    f: &MarginalModel,
    g: &MarginalModel,
    kind: OrderKind,
    grid: &[f64],
    tolerance: f64,
) -> Result<OrderCheckReport> {
    let grid = check_prob_grid(grid, 2)?;
    let spec = format!("{} probabilities in [{}, {}]", grid.len(), grid[0], grid[grid.len() - 1]);
    let qf = grid.iter().map(|&p| f.quantile(p)).collect::<Result<Vec<_>>>()?;
    let qg = grid.iter().map(|&p| g.quantile(p)).collect::<Result<Vec<_>>>()?;
    let pairs = |v: Vec<f64>| -> Vec<(f64, Vec<f64>)> {
        v.windows(2).zip(grid.windows(2)).map(|(w, p)| (w[1] - w[0], vec![p[0], p[1]])).collect()
    };
    let margins = match kind {
        OrderKind::St => {
            let mut xs: Vec<f64> = qf.iter().chain(&qg).cloned().collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            xs.into_iter().map(|x| (g.survival(x) - f.survival(x), vec![x])).collect()
        }
        OrderKind::Disp => pairs(qg.iter().zip(&qf).map(|(a, b)| a - b).collect()),
        OrderKind::Star => {
            if qf.iter().chain(&qg).any(|q| !(*q > 0.0)) {
                return Err(invalid("star order needs positive quantiles on the grid"));
            }
            pairs(qg.iter().zip(&qf).map(|(a, b)| a / b).collect())
        }
        OrderKind::Ew => grid
            .iter()
            .zip(qf.iter().zip(&qg))
            .map(|(&p, (&a, &b))| Ok((g.stop_loss(b)? - f.stop_loss(a)?, vec![p])))
            .collect::<Result<Vec<_>>>()?,
        OrderKind::Ps => grid
            .iter()
            .zip(qf.iter().zip(&qg))
            .filter(|(_, (a, b))| **a > 0.0 && **b > 0.0)
            .map(|(&p, _)| Ok((eps(g, p)? - eps(f, p)?, vec![p])))
            .collect::<Result<Vec<_>>>()?,
        other => return Err(invalid(format!("{other:?} is not a univariate order"))),
    };
    report(kind, spec, margins, tolerance)
}

fn tensor(axis: &[f64], n: usize) -> Vec<Vec<f64>> {
    let m = axis.len();
    (0..m.pow(n as u32))
        .map(|mut k| {
            let mut pt = vec![0.0; n];
            for v in pt.iter_mut() {
                *v = axis[k % m];
                k /= m;
            }
            pt
        })
        .collect()
}

/// Checks `C ≤ C'` in the concordance or weak multivariate hazard rate order on the
/// tensor grid `axis^n`.
pub fn check_copula_order(
    c: &dyn Copula,
    cp: &dyn Copula,
    kind: OrderKind,
    axis: &[f64],
    tolerance: f64,
) -> Result<OrderCheckReport> {
    let n = c.dim();
    if cp.dim() != n {
        return Err(CoriskError::DimensionMismatch { expected: n, got: cp.dim() });
    }
    let axis = check_prob_grid(axis, 2)?;
    let spec = format!("{}^{} tensor grid on [{}, {}]", axis.len(), n, axis[0], axis[axis.len() - 1]);
    let pts = tensor(&axis, n);
    let margins = match kind {
        OrderKind::Concordance => pts
            .par_iter()
            .map(|u| Ok((cp.cdf(u)? - c.cdf(u)?, u.clone())))
            .collect::<Result<Vec<_>>>()?,
        OrderKind::Whr => {
            let ratio = |u: &[f64]| -> Result<f64> {
                let d = c.survival(u)?;
                if !(d > 0.0) {
                    return Err(CoriskError::ZeroProbabilityEvent);
                }
                Ok(cp.survival(u)? / d)
            };
            let values = pts.par_iter().map(|u| ratio(u)).collect::<Result<Vec<f64>>>()?;
            let m = axis.len();
            let mut out = Vec::new();
            for (k, u) in pts.iter().enumerate() {
                let mut stride = 1;
                for i in 0..n {
                    let idx = (k / stride) % m;
                    if idx + 1 < m {
                        out.push((values[k + stride] - values[k], u.clone()));
                    }
                    stride *= m;
                    let _ = i;
                }
            }
            out
        }
        other => return Err(invalid(format!("{other:?} is not a copula order"))),
    };
    report(kind, spec, margins, tolerance)
}

/// Log-convexity of `(−1)^n ψ^{(n)}` on the grid, by divided second differences.
pub fn check_mtp2_archimedean(generator: Generator, n: usize, grid: &[f64]) -> Result<OrderCheckReport> {
    generator.validate()?;
    if !(1..=5).contains(&n) {
        return Err(CoriskError::Unsupported(format!("generator derivatives of order {n}")));
    }
    let grid = check_prob_grid(grid, 3)?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut psi = Vec::with_capacity(grid.len());
    let mut margins = Vec::new();
    for &u in &grid {
        let v = sign * generator.phi_derivative(n, u);
        if !(v > 0.0) {
            margins.push((v.min(-f64::MIN_POSITIVE), vec![u]));
            psi.push(f64::NAN);
        } else {
            psi.push(v.ln());
        }
    }
    for k in 1..grid.len() - 1 {
        let (u0, u1, u2) = (grid[k - 1], grid[k], grid[k + 1]);
        let d = 2.0 * ((psi[k + 1] - psi[k]) / (u2 - u1) - (psi[k] - psi[k - 1]) / (u1 - u0)) / (u2 - u0);
        if d.is_finite() {
            margins.push((d, vec![u1]));
        }
    }
    let spec = format!("{} points in [{}, {}], order {n}", grid.len(), grid[0], grid[grid.len() - 1]);
    report(OrderKind::Mtp2, spec, margins, 1e-9)
}

/// Right-tail increasing: `P(U_t > u_t | U_j > u_j, j ≠ t)` nondecreasing in every `u_j`.
pub fn check_rti(c: &dyn Copula, target: usize, axis: &[f64], tolerance: f64) -> Result<OrderCheckReport> {
    let n = c.dim();
    let axis = check_prob_grid(axis, 2)?;
    let pts = tensor(&axis, n);
    let cond = |u: &[f64]| -> Result<f64> {
        let mut base = u.to_vec();
        base[target] = 0.0;
        let d = c.survival(&base)?;
        if !(d > 0.0) {
            return Err(CoriskError::ZeroProbabilityEvent);
        }
        Ok(c.survival(u)? / d)
    };
    let values = pts.par_iter().map(|u| cond(u)).collect::<Result<Vec<f64>>>()?;
    let m = axis.len();
    let mut margins = Vec::new();
    for (k, u) in pts.iter().enumerate() {
        let mut stride = 1;
        for i in 0..n {
            if i != target && (k / stride) % m + 1 < m {
                margins.push((values[k + stride] - values[k], u.clone()));
            }
            stride *= m;
        }
    }
    let spec = format!("{}^{} tensor grid, target {}", axis.len(), n, target + 1);
    report(OrderKind::Rti, spec, margins, tolerance)
}

/// The comparison-theorem fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremFixture {
    Thm1Pareto,
    Thm2GumbelGamma,
    Thm3Weibull,
    Thm4Ps,
    Thm5Gumbelexp,
    Thm6StarMed,
    Thm7PsMed,
}

/// Which contribution measure a fixture compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionKind {
    MedMcovar,
    MedMcoes,
    RMcovar,
    RMcoes,
    RMmme,
    RMedMcovar,
    RMedMcoes,
}

impl ContributionKind {
    pub fn is_median(self) -> bool {
        matches!(self, Self::MedMcovar | Self::MedMcoes | Self::RMedMcovar | Self::RMedMcoes)
    }
}

impl TheoremFixture {
    pub const ALL: [TheoremFixture; 7] = [
        Self::Thm1Pareto,
        Self::Thm2GumbelGamma,
        Self::Thm3Weibull,
        Self::Thm4Ps,
        Self::Thm5Gumbelexp,
        Self::Thm6StarMed,
        Self::Thm7PsMed,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Thm1Pareto => "thm1_pareto",
            Self::Thm2GumbelGamma => "thm2_gumbel_gamma",
            Self::Thm3Weibull => "thm3_weibull",
            Self::Thm4Ps => "thm4_ps",
            Self::Thm5Gumbelexp => "thm5_gumbelexp",
            Self::Thm6StarMed => "thm6_star_med",
            Self::Thm7PsMed => "thm7_ps_med",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.id() == id).ok_or_else(|| invalid(format!("unknown theorem fixture {id:?}")))
    }

    /// True for fixtures built for this crate rather than taken from a published example.
    pub fn is_constructed(self) -> bool {
        self == Self::Thm4Ps
    }

    pub fn measure(self) -> ContributionKind {
        match self {
            Self::Thm1Pareto => ContributionKind::MedMcovar,
            Self::Thm2GumbelGamma => ContributionKind::MedMcoes,
            Self::Thm3Weibull => ContributionKind::RMcovar,
            Self::Thm4Ps => ContributionKind::RMcoes,
            Self::Thm5Gumbelexp => ContributionKind::RMmme,
            Self::Thm6StarMed => ContributionKind::RMedMcovar,
            Self::Thm7PsMed => ContributionKind::RMedMcoes,
        }
    }

    /// The `(X, Y)` pair; the theorem asserts `measure(X) ≤ measure(Y)` for target 0.
    pub fn models(self) -> Result<(JointModel, JointModel)> {
        let gumbel = || CopulaModel::gumbel(3, 2.0);
        let with = |m: MarginalModel| -> Result<JointModel> { JointModel::from_copula(gumbel()?, vec![m; 3]) };
        let gamma = |shape, scale| MarginalModel::Gamma { shape, scale };
        Ok(match self {
            Self::Thm1Pareto => (
                JointModel::Pareto(MultivariatePareto::new(vec![1.0; 3], 5.0)?),
                JointModel::Pareto(MultivariatePareto::new(vec![3.0; 3], 5.0)?),
            ),
            Self::Thm2GumbelGamma => (with(gamma(1.0, 1.0))?, with(gamma(1.0, 2.0))?),
            Self::Thm3Weibull => (
                with(MarginalModel::Weibull { shape: 2.0, scale: 2.0 })?,
                with(MarginalModel::Weibull { shape: 1.0, scale: 1.0 })?,
            ),
            Self::Thm4Ps | Self::Thm6StarMed | Self::Thm7PsMed => (with(gamma(3.0, 1.0))?, with(gamma(1.0, 1.0))?),
            Self::Thm5Gumbelexp => (
                JointModel::GumbelExponential(GumbelExponential::symmetric3(10.0, 100.0)?),
                JointModel::GumbelExponential(GumbelExponential::symmetric3(10.0, 10.0)?),
            ),
        })
    }

    pub fn default_grid(self) -> TheoremGrid {
        let p1: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let p_tail: Vec<f64> = if self.measure().is_median() {
            (0..9).map(|k| 0.55 + 0.05 * k as f64).collect()
        } else {
            let mut v: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
            v.push(0.95);
            v
        };
        TheoremGrid { p1, p_tail }
    }
}

/// Levels `p_1` crossed with the tensor grid `p_tail × p_tail` for the two conditioning assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremGrid {
    pub p1: Vec<f64>,
    pub p_tail: Vec<f64>,
}

/// Evaluates one contribution measure of the target 0 at `(p1, p_tail)`.
pub fn contribution_value(
    joint: &JointModel,
    kind: ContributionKind,
    p1: f64,
    p_tail: &[f64],
    median: Option<(f64, f64)>,
) -> Result<f64> {
    let m = joint.marginal(0)?;
    let bench = || -> Result<(f64, f64)> {
        match median {
            Some(b) => Ok(b),
            None => measures::median_benchmarks(joint, 0, p1),
        }
    };
    let ratio = |num: f64, den: f64, name: &'static str| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(CoriskError::NonpositiveBenchmark { name, value: den })
        }
    };
    match kind {
        ContributionKind::MedMcovar => Ok(measures::mcovar(joint, 0, p1, p_tail)? - bench()?.0),
        ContributionKind::MedMcoes => Ok(measures::mcoes(joint, 0, p1, p_tail)? - bench()?.1),
        ContributionKind::RMedMcovar => {
            let b = bench()?.0;
            ratio(measures::mcovar(joint, 0, p1, p_tail)? - b, b, "median MCoVaR")
        }
        ContributionKind::RMedMcoes => {
            let b = bench()?.1;
            ratio(measures::mcoes(joint, 0, p1, p_tail)? - b, b, "median MCoES")
        }
        ContributionKind::RMcovar => {
            let v = measures::var(&m, p1)?;
            ratio(measures::mcovar(joint, 0, p1, p_tail)? - v, v, "VaR")
        }
        ContributionKind::RMcoes => {
            let e = measures::es(&m, p1)?;
            ratio(measures::mcoes(joint, 0, p1, p_tail)? - e, e, "ES")
        }
        ContributionKind::RMmme => {
            let k = p_tail.len();
            let req = MeasureRequest::new(0, p1, p_tail.to_vec(), vec![1.0 / k as f64; k])?;
            let a = measures::mmme_threshold(joint, &req)?;
            let sl = m.stop_loss(a)?;
            ratio(measures::mmme(joint, &req)? - sl, sl, "stop-loss")
        }
    }
}

/// Slack below which a theorem inequality counts as violated.
pub const THEOREM_SLACK: f64 = 1e-7;
/// A negative control must violate by more than this to count as failing.
pub const NEGATIVE_CONTROL_MARGIN: f64 = 1e-6;

/// Checks `measure(X) ≤ measure(Y)` over the grid; `swap` exchanges the roles (a negative control).
pub fn check_theorem(fixture: TheoremFixture, grid: &TheoremGrid, swap: bool) -> Result<OrderCheckReport> {
    let kind = fixture.measure();
    let p1 = check_prob_grid(&grid.p1, 1)?;
    let pt = check_prob_grid(&grid.p_tail, 1)?;
    if kind.is_median() {
        if let Some(p) = pt.iter().find(|p| !(**p > 0.5)) {
            return Err(domain(format!("median-type fixture needs tail levels in (1/2, 1), got {p}")));
        }
    }
    let (mut x, mut y) = fixture.models()?;
    if swap {
        std::mem::swap(&mut x, &mut y);
    }
    // MMME does not depend on p1; evaluate it once per tail pair
    let p1_axis: Vec<f64> = if kind == ContributionKind::RMmme { vec![p1[0]] } else { p1.clone() };
    let medians = |j: &JointModel| -> Result<HashMap<u64, (f64, f64)>> {
        if !kind.is_median() {
            return Ok(HashMap::new());
        }
        p1_axis.par_iter().map(|&p| Ok((p.to_bits(), measures::median_benchmarks(j, 0, p)?))).collect()
    };
    let (mx, my) = (medians(&x)?, medians(&y)?);
    let mut points = Vec::new();
    for &a in &p1_axis {
        for &b in &pt {
            for &c in &pt {
                points.push([a, b, c]);
            }
        }
    }
    let margins = points
        .par_iter()
        .map(|&[a, b, c]| {
            let vx = contribution_value(&x, kind, a, &[b, c], mx.get(&a.to_bits()).copied())?;
            let vy = contribution_value(&y, kind, a, &[b, c], my.get(&a.to_bits()).copied())?;
            Ok((vy - vx, vec![a, b, c]))
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = format!(
        "{}{}: p1 in {:?} x (p2, p3) in {:?}^2",
        fixture.id(),
        if swap { " (swapped)" } else { "" },
        p1_axis,
        pt
    );
    report(OrderKind::Theorem, spec, margins, THEOREM_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (1..50).map(|k| k as f64 / 50.0).collect()
    }

    #[test]
    fn eps_examples() {
        let e = MarginalModel::Exponential { rate: 1.0 };
        assert!((eps(&e, 0.5).unwrap() - 0.5 / 2f64.ln()).abs() < 1e-14);
        let v = -(0.01f64.ln());
        assert!((eps(&e, 0.99).unwrap() - (-v).exp() / v).abs() < 1e-14);
        let g1 = MarginalModel::Gamma { shape: 2.5, scale: 1.0 };
        let g7 = MarginalModel::Gamma { shape: 2.5, scale: 7.0 };
        assert!((eps(&g1, 0.8).unwrap() - eps(&g7, 0.8).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn univariate_examples() {
        let e1 = MarginalModel::Exponential { rate: 1.0 };
        let e2 = MarginalModel::Exponential { rate: 0.5 };
        assert!(check_univariate_order(&e1, &e2, OrderKind::Disp, &grid(), 1e-9).unwrap().passed);
        assert!(check_univariate_order(&e1, &e2, OrderKind::Ew, &grid(), 1e-9).unwrap().passed);
        assert!(!check_univariate_order(&e2, &e1, OrderKind::Disp, &grid(), 1e-9).unwrap().passed);
        let w22 = MarginalModel::Weibull { shape: 2.0, scale: 2.0 };
        let w11 = MarginalModel::Weibull { shape: 1.0, scale: 1.0 };
        assert!(check_univariate_order(&w22, &w11, OrderKind::Star, &grid(), 1e-9).unwrap().passed);
        let g11 = MarginalModel::Gamma { shape: 1.0, scale: 1.0 };
        let g12 = MarginalModel::Gamma { shape: 1.0, scale: 2.0 };
        assert!(check_univariate_order(&g11, &g12, OrderKind::Ew, &grid(), 1e-9).unwrap().passed);
        let g31 = MarginalModel::Gamma { shape: 3.0, scale: 1.0 };
        assert!(check_univariate_order(&g31, &g11, OrderKind::Ps, &grid(), 1e-9).unwrap().passed);
        assert!(check_univariate_order(&g31, &g11, OrderKind::Star, &grid(), 1e-9).unwrap().passed);
        assert!(check_univariate_order(&g11, &g12, OrderKind::St, &grid(), 1e-12).unwrap().passed);
        assert!(check_univariate_order(&g11, &g12, OrderKind::Disp, &[0.5], 1e-9).is_err());
    }

    #[test]
    fn reflexivity() {
        let m = MarginalModel::Gamma { shape: 2.0, scale: 1.5 };
        for kind in [OrderKind::St, OrderKind::Disp, OrderKind::Star, OrderKind::Ew, OrderKind::Ps] {
            let r = check_univariate_order(&m, &m, kind, &grid(), 0.0).unwrap();
            assert!(r.passed && r.worst_violation >= 0.0, "{kind:?}");
        }
        let c = CopulaModel::clayton(3, 1.5).unwrap();
        let axis = tail_grid(0.05, 0.95, 8);
        for kind in [OrderKind::Concordance, OrderKind::Whr] {
            let r = check_copula_order(&c, &c, kind, &axis, 0.0).unwrap();
            assert!(r.passed && r.worst_violation == 0.0, "{kind:?}");
        }
    }

    #[test]
    fn copula_order_examples() {
        let axis = tail_grid(0.05, 0.95, 10);
        let ind = CopulaModel::independence(3).unwrap();
        let gum = CopulaModel::gumbel(3, 2.0).unwrap();
        assert!(check_copula_order(&ind, &gum, OrderKind::Concordance, &axis, 1e-12).unwrap().passed);
        assert!(!check_copula_order(&gum, &ind, OrderKind::Concordance, &axis, 1e-12).unwrap().passed);
        // hand formula at scattered points
        for k in 0..10 {
            let u = [0.1 + 0.08 * k as f64, 0.9 - 0.07 * k as f64, 0.5];
            let s: f64 = u.iter().map(|v: &f64| v.ln().powi(2)).sum();
            let hand = (-s.sqrt()).exp();
            assert!(hand >= u.iter().product::<f64>());
            assert!((gum.cdf(&u).unwrap() - hand).abs() < 1e-14);
        }
        let x = GumbelExponential::symmetric3(10.0, 100.0).unwrap();
        let y = GumbelExponential::symmetric3(10.0, 10.0).unwrap();
        assert!(check_copula_order(&x, &y, OrderKind::Whr, &axis, 1e-12).unwrap().passed);
        assert!(!check_copula_order(&y, &x, OrderKind::Whr, &axis, 1e-12).unwrap().passed);
    }

    #[test]
    fn mtp2_examples() {
        let g = tail_grid(0.01, 0.99, 200);
        assert!(check_mtp2_archimedean(Generator::Gumbel { theta: 2.0 }, 3, &g).unwrap().passed);
        assert!(check_mtp2_archimedean(Generator::Clayton { theta: 1.0 }, 2, &g).unwrap().passed);
        assert!(check_mtp2_archimedean(Generator::Gumbel { theta: 2.0 }, 3, &[0.2, 0.5]).is_err());
        assert!(check_mtp2_archimedean(Generator::Gumbel { theta: 2.0 }, 9, &g).is_err());
    }

    #[test]
    fn gumbel_log_derivative_is_convex() {
        // closed form for θ = 2, n = 3 against divided differences of ln((6 − 4 ln u)/u³)
        for &u in &[0.05, 0.3, 0.6, 0.9] {
            let l = f64::ln(u);
            let closed = (12.0 * l * l - 40.0 * l + 29.0) / (u * u * (2.0 * l - 3.0).powi(2));
            let psi = |v: f64| ((6.0 - 4.0 * v.ln()) / v.powi(3)).ln();
            let h = 1e-4;
            let fd = (psi(u + h) - 2.0 * psi(u) + psi(u - h)) / (h * h);
            assert!((fd - closed).abs() < 1e-5 * closed, "{u}: {fd} vs {closed}");
        }
    }

    #[test]
    fn rti_holds_for_pareto_and_gumbel() {
        let axis = tail_grid(0.05, 0.95, 8);
        let pa = MultivariatePareto::new(vec![1.0; 3], 5.0).unwrap();
        assert!(check_rti(&pa, 0, &axis, 1e-12).unwrap().passed);
        let gum = CopulaModel::gumbel(3, 2.0).unwrap();
        assert!(check_rti(&gum, 0, &axis, 1e-12).unwrap().passed);
    }

    #[test]
    fn fixtures_round_trip_ids() {
        for f in TheoremFixture::ALL {
            assert_eq!(TheoremFixture::from_id(f.id()).unwrap(), f);
        }
        assert!(TheoremFixture::from_id("thm9").is_err());
    }

    #[test]
    fn small_theorem_grids_and_controls() {
        let grid = |f: TheoremFixture| {
            let g = f.default_grid();
            TheoremGrid {
                p1: vec![g.p1[0], g.p1[4], g.p1[8]],
                p_tail: vec![g.p_tail[0], g.p_tail[4], g.p_tail[g.p_tail.len() - 1]],
            }
        };
        for f in TheoremFixture::ALL {
            let r = check_theorem(f, &grid(f), false).unwrap();
            assert!(r.passed, "{} {r:?}", f.id());
            let n = check_theorem(f, &grid(f), true).unwrap();
            assert!(n.worst_violation < -NEGATIVE_CONTROL_MARGIN, "{} control {n:?}", f.id());
        }
    }
}
