//! Bracketed root finding for monotone functions.

use crate::error::{CoriskError, Result};

/// Solves `f(x) = target` for nondecreasing `f` on `[lo, hi]` by bisection down to
/// an interval of width `width`, followed by one secant step inside the final bracket.
///
/// `f(lo) ≤ target ≤ f(hi)` is required. Every probe is checked against the bracket
/// values; a probe falling outside `[f(lo), f(hi)]` by more than `slack` means `f` is
/// not monotone and is reported as an error.
pub fn solve_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    width: f64,
    slack: f64,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(CoriskError::NumericFailure("non-finite value at bracket end".into()));
    }
    if target < f_lo - slack || target > f_hi + slack {
        return Err(CoriskError::NumericFailure(format!(
            "target {target} not bracketed by [{f_lo}, {f_hi}]"
        )));
    }
    if target <= f_lo {
        return Ok(lo);
    }
    if target >= f_hi {
        return Ok(hi);
    }
    let mut iterations = 0;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(CoriskError::NumericFailure(format!("non-finite value at {mid}")));
        }
        if fm < f_lo - slack || fm > f_hi + slack {
            return Err(CoriskError::NonMonotoneDistortion(format!(
                "value {fm} at {mid} escapes bracket [{f_lo}, {f_hi}]"
            )));
        }
        if fm < target {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
        iterations += 1;
        if iterations > 400 {
            return Err(CoriskError::NumericFailure("bisection did not terminate".into()));
        }
    }
    // secant polish inside the bracket
    let denom = f_hi - f_lo;
    if denom > 0.0 {
        let x = lo + (target - f_lo) * (hi - lo) / denom;
        if x.is_finite() {
            return Ok(x.clamp(lo, hi));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grows `hi` geometrically (starting from `start > lo`) until `f(hi) ≥ target`.
pub fn bracket_upper<F: FnMut(f64) -> f64>(mut f: F, target: f64, lo: f64, start: f64) -> Result<f64> {
    let mut step = (start - lo).max(1e-3);
    let mut hi = lo + step;
    for _ in 0..200 {
        if f(hi) >= target {
            return Ok(hi);
        }
        step *= 2.0;
        hi = lo + step;
    }
    Err(CoriskError::NumericFailure(format!("could not bracket target {target}")))
}

/// Grows `lo` downward until `f(lo) ≤ target`.
pub fn bracket_lower<F: FnMut(f64) -> f64>(mut f: F, target: f64, hi: f64, start: f64) -> Result<f64> {
    let mut step = (hi - start).max(1e-3);
    let mut lo = hi - step;
    for _ in 0..200 {
        if f(lo) <= target {
            return Ok(lo);
        }
        step *= 2.0;
        lo = hi - step;
    }
    Err(CoriskError::NumericFailure(format!("could not bracket target {target}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let x = solve_increasing(|x| x * x * x, 2.0, 0.0, 2.0, 1e-12, 0.0).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn detects_non_monotone() {
        let r = solve_increasing(|x| if (0.4..0.6).contains(&x) { 5.0 } else { x }, 0.8, 0.0, 1.0, 1e-12, 1e-12);
        assert!(matches!(r, Err(CoriskError::NonMonotoneDistortion(_))));
    }

    #[test]
    fn brackets_grow() {
        let hi = bracket_upper(|x| x, 1000.0, 0.0, 1.0).unwrap();
        assert!(hi >= 1000.0);
        let lo = bracket_lower(|x| x, -50.0, 0.0, -1.0).unwrap();
        assert!(lo <= -50.0);
    }
}
