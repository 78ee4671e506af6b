//! Adaptive Gauss–Kronrod (7/15) quadrature with interval bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{CoriskError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute / relative tolerance pair and the subdivision budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { abs: 1e-9, rel: 1e-8, max_intervals: 4000 }
    }
}

impl QuadTol {
    pub fn new(abs: f64, rel: f64) -> Self {
        QuadTol { abs, rel, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: QuadTol) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(CoriskError::NumericFailure(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    if a > b {
        let r = integrate(f, b, a, tol)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let first = kronrod(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    let mut intervals = 1;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if !total.is_finite() {
            return Err(CoriskError::NumericFailure("integrand produced a non-finite value".into()));
        }
        if intervals >= tol.max_intervals {
            // accept mild shortfalls; anything worse is a genuine failure
            if err <= 100.0 * tol.abs.max(tol.rel * total.abs()) {
                break;
            }
            return Err(CoriskError::NumericFailure(format!(
                "quadrature did not reach tolerance: value {total}, error {err}"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(Segment { error: 0.0, ..worst });
            err -= worst.error;
            continue;
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        intervals += 1;
        if intervals % 64 == 0 {
            // periodic resummation keeps the running sums from drifting
            total = heap.iter().map(|s| s.value).sum();
            err = heap.iter().map(|s| s.error).sum();
        }
    }
    total = heap.iter().map(|s| s.value).sum();
    if !total.is_finite() {
        return Err(CoriskError::NumericFailure("integrand produced a non-finite value".into()));
    }
    Ok(QuadResult { value: total, error: err, intervals })
}

/// Integrates over consecutive pieces `[pts[0], pts[1]], [pts[1], pts[2]], ...`, which
/// lets callers place breakpoints at known jumps of a piecewise-smooth integrand.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, pts: &[f64], tol: QuadTol) -> Result<QuadResult> {
    let mut out = QuadResult { value: 0.0, error: 0.0, intervals: 0 };
    let pieces = pts.len().saturating_sub(1).max(1);
    let piece_tol = QuadTol { abs: tol.abs / pieces as f64, ..tol };
    for w in pts.windows(2) {
        let r = integrate(&mut f, w[0], w[1], piece_tol)?;
        out.value += r.value;
        out.error += r.error;
        out.intervals += r.intervals;
    }
    Ok(out)
}

/// `∫_a^∞ f(x) dx` through `x = a + scale·r/(1−r)`, `r ∈ [0, 1)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    tol: QuadTol,
) -> Result<QuadResult> {
    if !(scale > 0.0) {
        return Err(CoriskError::NumericFailure(format!("invalid scale {scale}")));
    }
    integrate(
        |r| {
            let one_minus = 1.0 - r;
            let x = a + scale * r / one_minus;
            if !x.is_finite() {
                return 0.0;
            }
            let v = f(x) * scale / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_0^{w0} g(w) dw` where `g` is singular (integrably) at `w = 0`; uses
/// `w = w0·e^{-s}` so the singular end is pushed to `s = ∞`.
///
/// Callers work with the complementary level `w = 1 − t` so that levels arbitrarily
/// close to one never round to exactly one.
pub fn integrate_upper_tail<F: FnMut(f64) -> f64>(mut g: F, w0: f64, tol: QuadTol) -> Result<QuadResult> {
    if !(w0 > 0.0 && w0 <= 1.0) {
        return Err(CoriskError::NumericFailure(format!("invalid tail mass {w0}")));
    }
    integrate_semi_infinite(
        |s| {
            let w = w0 * (-s).exp();
            if w <= 0.0 {
                return 0.0;
            }
            g(w) * w
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, QuadTol::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_semi_infinite(|x| (-x).exp(), 1.0, 1.0, QuadTol::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn log_singularity_at_tail() {
        // ∫_0^1 -ln w dw = 1
        let r = integrate_upper_tail(|w| -w.ln(), 1.0, QuadTol::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        // ∫_0^1 w^{-1/5} dw = 5/4
        let r = integrate_upper_tail(|w| w.powf(-0.2), 1.0, QuadTol::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 1.25).abs() < 1e-10);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x| x, 1.0, 0.0, QuadTol::default()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn pieces_handle_steps() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { 2.0 };
        let r = integrate_pieces(step, &[0.0, 0.3, 1.0], QuadTol::default()).unwrap();
        assert!((r.value - (0.3 + 1.4)).abs() < 1e-13);
    }
}
