//! Root finding for strictly increasing scalar functions on `(0, ∞)`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change found on (0, inf)")]
    NoBracket,
    #[error("function value is not finite at {0}")]
    NonFinite(f64),
}

/// Expands geometrically from `start` until `f(lo) <= 0 <= f(hi)`.
pub fn bracket_positive<F: FnMut(f64) -> f64>(f: &mut F, start: f64) -> Result<(f64, f64), RootError> {
    let f0 = f(start);
    if !f0.is_finite() {
        return Err(RootError::NonFinite(start));
    }
    if f0 == 0.0 {
        return Ok((start, start));
    }
    let mut prev = start;
    let mut x = start;
    for _ in 0..2100 {
        x = if f0 < 0.0 { x * 2.0 } else { x * 0.5 };
        if x == 0.0 || !x.is_finite() {
            break;
        }
        let fx = f(x);
        if fx.is_nan() {
            return Err(RootError::NonFinite(x));
        }
        if (f0 < 0.0 && fx >= 0.0) || (f0 > 0.0 && fx <= 0.0) {
            return Ok(if f0 < 0.0 { (prev, x) } else { (x, prev) });
        }
        prev = x;
    }
    Err(RootError::NoBracket)
}

/// Bisection on a bracket of an increasing function until the bracket width
/// is below `width * max(1, |mid|)`, followed by `polish` Newton steps that
/// are kept only while they stay inside the final bracket.
pub fn bisect_newton<F, D>(mut f: F, mut df: D, mut lo: f64, mut hi: f64, width: f64, polish: usize) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    if lo == hi {
        return Ok(lo);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(RootError::NonFinite(mid));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..polish {
        let (fx, d) = (f(x), df(x));
        if fx == 0.0 || !(d.is_finite() && d != 0.0) {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
    }
    Ok(x)
}
