//! Bracket expansion and bisection for monotone nonincreasing functions.

use crate::error::{Error, Result};

/// Upper limit for theta brackets.
pub(crate) const THETA_LIMIT: f64 = 1e12;

/// Upper limit for energy brackets. Capacity is flat to machine precision
/// long before this.
pub(crate) const ENERGY_LIMIT: f64 = 1e6;

/// Doubles `hi` from `start` until `f(hi) <= 0`.
pub(crate) fn expand_upper<F: Fn(f64) -> f64>(f: &F, start: f64, limit: f64, what: &'static str) -> Result<f64> {
    let mut hi = start;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > limit || !hi.is_finite() {
            return Err(Error::BracketNotFound { what, limit });
        }
    }
    Ok(hi)
}

/// Bisection for a nonincreasing `f` with `f(lo) > 0 >= f(hi)`; `f` is never
/// evaluated at `lo`, so a singular lower end is fine. Runs until the bracket
/// cannot shrink further in floating point.
pub(crate) fn bisect_decreasing<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v > 0.0 {
            lo = mid;
        } else if v < 0.0 {
            hi = mid;
        } else {
            return mid;
        }
    }
    0.5 * (lo + hi)
}
