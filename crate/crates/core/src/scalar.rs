//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the solvers are generic over (`f32` or `f64`).
///
/// Tolerances throughout the crate are written as `f64` literals and
/// lifted with [`Real::lit`]; [`Real::tol`] additionally clamps a
/// tolerance from below by a few machine epsilons so that the same
/// code path stays meaningful in single precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn tol(v: f64) -> Self {
        Self::lit(v).max(Self::epsilon() * Self::lit(16.0))
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `ln Σ exp(v_i)` without overflow.
pub(crate) fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    if !max.is_finite() {
        return max;
    }
    let sum = values
        .iter()
        .fold(T::zero(), |acc, &v| acc + (v - max).exp());
    max + sum.ln()
}

/// Turns log-weights into a normalized probability vector.
pub(crate) fn softmax<T: Real>(log_weights: &[T]) -> Vec<T> {
    let max = log_weights
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    let w: Vec<T> = log_weights.iter().map(|&v| (v - max).exp()).collect();
    let total = w.iter().fold(T::zero(), |a, &v| a + v);
    w.into_iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_normalizes_extreme_inputs() {
        let p = softmax(&[0.0_f64, -800.0, -1600.0]);
        assert_eq!(p[0], 1.0);
        assert!(p[1] >= 0.0 && p[1] < 1e-300);
        let q = softmax(&[1000.0_f64, 1000.0]);
        assert!((q[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tol_is_clamped_in_single_precision() {
        assert!(f32::tol(1e-12) > 1e-12);
        assert_eq!(f64::tol(1e-12), 1e-12);
    }
}
