//! Bracketing root finders used for the multiplier searches.

use crate::scalar::Real;

/// Largest multiplier tried before a search gives up.
pub const LAMBDA_CAP: f64 = 1e6;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
///
/// Runs until the bracket cannot be split any further in the scalar type
/// or `max_iter` halvings have been made; returns the final bracket.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, max_iter: usize) -> (T, T) {
    let two = T::lit(2.0);
    let positive_at_lo = f(lo) > T::zero();
    for _ in 0..max_iter {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == T::zero() {
            return (mid, mid);
        }
        if (v > T::zero()) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Finds `hi > lo` with `pred(hi)` true by doubling the step `hi - lo`.
/// Returns `None` once `hi` passes `cap`.
pub fn expand_until<T: Real, F: FnMut(T) -> bool>(mut pred: F, lo: T, first_step: T, cap: T) -> Option<T> {
    let mut step = first_step;
    loop {
        let hi = lo + step;
        if pred(hi) {
            return Some(hi);
        }
        if hi > cap {
            return None;
        }
        step = step + step;
    }
}
