//! Bracketed bisection for monotone scalar equations.

use crate::error::{HarqError, Result};
use crate::Real;

const MAX_BISECTIONS: usize = 400;
const MAX_DOUBLINGS: usize = 2100;

/// Root of a nondecreasing `f` inside `[lo, hi]`, where `f(lo) <= 0 <= f(hi)`.
///
/// Stops once the bracket is narrower than `rel_tol * hi`.
pub fn bisect_increasing<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    mut lo: T,
    mut hi: T,
    rel_tol: T,
) -> Result<T> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo > T::zero() || fhi < T::zero() || flo.is_nan() || fhi.is_nan() {
        return Err(HarqError::Numeric(format!(
            "bisection bracket [{lo}, {hi}] does not enclose a root (f = {flo}, {fhi})"
        )));
    }
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(HarqError::Numeric(format!("NaN at {mid} during bisection")));
        }
        if fm < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) * T::lit(0.5))
}

/// Root in `x > 0` of a nondecreasing `f` with `f(0) < 0`; the upper end of
/// the bracket is found by doubling `initial_hi`.
pub fn positive_root_increasing<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    initial_hi: T,
    rel_tol: T,
) -> Result<T> {
    let mut lo = T::zero();
    let mut hi = if initial_hi > T::zero() && initial_hi.is_finite() {
        initial_hi
    } else {
        T::one()
    };
    let mut doublings = 0;
    while f(hi) < T::zero() {
        lo = hi;
        hi = hi + hi;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(HarqError::Numeric(
                "could not bracket the root by doubling".into(),
            ));
        }
    }
    bisect_increasing(f, lo, hi, rel_tol)
}
