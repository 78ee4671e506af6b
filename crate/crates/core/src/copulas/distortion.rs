use super::Copula;
use crate::error::{domain, CoriskError, Result};
use crate::numeric::roots::solve_increasing;

const GRID_POINTS: usize = 33;

/// Distortion `h_p(t) = Ĉ(1 − t, p_{[−i]}) / Ĉ(0, p_{[−i]})` of the target coordinate
/// given that every other coordinate exceeds its tail level.
#[derive(Debug, Clone)]
pub struct DistortionContext<C> {
    copula: C,
    target: usize,
    tail_levels: Vec<f64>,
    denominator: f64,
}

impl<C: Copula> DistortionContext<C> {
    /// `tail_levels` lists the levels of the non-target coordinates in their natural order.
    pub fn new(copula: C, target: usize, tail_levels: &[f64]) -> Result<Self> {
        let n = copula.dim();
        if target >= n {
            return Err(domain(format!("target index {target} outside dimension {n}")));
        }
        if tail_levels.len() + 1 != n {
            return Err(CoriskError::DimensionMismatch { expected: n - 1, got: tail_levels.len() });
        }
        if let Some(p) = tail_levels.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(domain(format!("tail level {p} outside (0, 1)")));
        }
        let mut ctx = Self { copula, target, tail_levels: tail_levels.to_vec(), denominator: 1.0 };
        let denominator = ctx.joint_survival(0.0)?;
        if !(denominator > 0.0) {
            return Err(CoriskError::ZeroProbabilityEvent);
        }
        ctx.denominator = denominator;
        let mut prev = 0.0;
        for k in 0..=GRID_POINTS {
            let t = k as f64 / GRID_POINTS as f64;
            let v = ctx.h(t)?;
            if v < prev - 1e-12 {
                return Err(CoriskError::NonMonotoneDistortion(format!("h decreases near t = {t}")));
            }
            prev = v;
        }
        Ok(ctx)
    }

    fn point(&self, target_level: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.tail_levels.len() + 1);
        p.extend_from_slice(&self.tail_levels[..self.target]);
        p.push(target_level);
        p.extend_from_slice(&self.tail_levels[self.target..]);
        p
    }

    fn joint_survival(&self, target_level: f64) -> Result<f64> {
        self.copula.survival(&self.point(target_level))
    }

    pub fn copula(&self) -> &C {
        &self.copula
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn tail_levels(&self) -> &[f64] {
        &self.tail_levels
    }

    /// Probability of the conditioning event `{U_j > p_j, j ≠ target}`.
    pub fn event_probability(&self) -> f64 {
        self.denominator
    }

    pub fn h(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(domain(format!("distortion argument {t} outside [0, 1]")));
        }
        if t == 1.0 {
            return Ok(1.0);
        }
        Ok((self.joint_survival(1.0 - t)? / self.denominator).clamp(0.0, 1.0))
    }

    pub fn h_inverse(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(domain(format!("distortion level {q} outside [0, 1]")));
        }
        if q == 0.0 || q == 1.0 {
            return Ok(q);
        }
        let mut failure = None;
        let t = solve_increasing(
            |t| match self.h(t) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            q,
            0.0,
            1.0,
            1e-12,
            1e-12,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let t = t?;
        let resid = (self.h(t)? - q).abs();
        if resid > 1e-10 {
            return Err(CoriskError::NumericFailure(format!("h(h^-1({q})) misses by {resid:e}")));
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::CopulaModel;

    fn naive_survival3(c: &CopulaModel, p: [f64; 3]) -> f64 {
        let cdf = |u: [f64; 3]| c.cdf(&u).unwrap();
        1.0 - p[0] - p[1] - p[2] + cdf([p[0], p[1], 1.0]) + cdf([p[0], 1.0, p[2]]) + cdf([1.0, p[1], p[2]])
            - cdf(p)
    }

    #[test]
    fn independence_is_identity() {
        let c = CopulaModel::independence(3).unwrap();
        let ctx = DistortionContext::new(&c, 0, &[0.9, 0.6]).unwrap();
        assert!((ctx.h(0.3).unwrap() - 0.3).abs() < 1e-14);
        assert!((ctx.h_inverse(0.42).unwrap() - 0.42).abs() < 1e-11);
        assert_eq!(ctx.h(1.0).unwrap(), 1.0);
        assert_eq!(ctx.h(0.0).unwrap(), 0.0);
        assert_eq!(ctx.h_inverse(0.0).unwrap(), 0.0);
        assert_eq!(ctx.h_inverse(1.0).unwrap(), 1.0);
    }

    #[test]
    fn gumbel_ratio_and_inverse() {
        let c = CopulaModel::gumbel(3, 2.0).unwrap();
        let ctx = DistortionContext::new(&c, 0, &[0.95, 0.95]).unwrap();
        let expected = naive_survival3(&c, [0.5, 0.95, 0.95]) / naive_survival3(&c, [0.0, 0.95, 0.95]);
        assert!((ctx.h(0.5).unwrap() - expected).abs() < 1e-12);
        let t = ctx.h_inverse(0.05).unwrap();
        assert!((ctx.h(t).unwrap() - 0.05).abs() <= 1e-10);
        assert!(ctx.h_inverse(1.5).is_err());
    }

    #[test]
    fn concave_for_si_families() {
        for c in [CopulaModel::gumbel(3, 2.0).unwrap(), CopulaModel::clayton(3, 2.0).unwrap()] {
            let ctx = DistortionContext::new(&c, 0, &[0.9, 0.8]).unwrap();
            let n = 1000;
            let h: Vec<f64> = (0..=n).map(|k| ctx.h(k as f64 / n as f64).unwrap()).collect();
            for w in h.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9);
            }
            for k in 1..50 {
                let t = k as f64 / 50.0;
                assert!((ctx.h_inverse(ctx.h(t).unwrap()).unwrap() - t).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn target_position_is_respected() {
        let c = CopulaModel::gumbel(3, 2.0).unwrap();
        let ctx = DistortionContext::new(&c, 2, &[0.7, 0.9]).unwrap();
        let expected = naive_survival3(&c, [0.7, 0.9, 0.6]) / naive_survival3(&c, [0.7, 0.9, 0.0]);
        assert!((ctx.h(0.4).unwrap() - expected).abs() < 1e-12);
    }
}
