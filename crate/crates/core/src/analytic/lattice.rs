//! The unconstrained optimum and its mass-point lattice `S_0`.

use crate::channel::{expected_cost, ChannelSpec, CostSpec, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Positions `x_1 < … < x_{N_r}` of `S_0` (index `j - 1` holds `x_j`).
///
/// Integer `r`: `x_j = (j-1)/n`. Otherwise odd `j` sit at `(j-1)/(2r)`
/// counted from the left edge and even `j` at `1 - (2n+2-j)/(2r)` counted
/// from the right edge, so both layers are spaced by the noise width `2b`.
pub fn lattice_positions<T: Real>(ch: &ChannelSpec<T>) -> Vec<T> {
    let n = ch.n();
    if ch.is_integer_r() {
        let nf = T::from_usize_lossy(n);
        return (0..=n).map(|i| T::from_usize_lossy(i) / nf).collect();
    }
    let two_r = ch.r() + ch.r();
    (1..=2 * n + 2)
        .map(|j| {
            let x = if j % 2 == 1 {
                T::from_usize_lossy(j - 1) / two_r
            } else {
                T::one() - T::from_usize_lossy(2 * n + 2 - j) / two_r
            };
            x.max(T::zero()).min(T::one())
        })
        .collect()
}

/// Masses of the unconstrained optimum, aligned with [`lattice_positions`].
pub fn unconstrained_masses<T: Real>(ch: &ChannelSpec<T>) -> Vec<T> {
    let n = ch.n();
    if ch.is_integer_r() {
        return vec![T::one() / T::from_usize_lossy(n + 1); n + 1];
    }
    let denom = T::from_usize_lossy(2 * (n + 1) * (n + 2));
    (1..=2 * n + 2)
        .map(|j| {
            let num = if j % 2 == 1 { 2 * n + 2 - (j - 1) } else { j };
            T::from_usize_lossy(num) / denom
        })
        .collect()
}

/// Capacity-achieving input without a cost constraint.
pub fn unconstrained_solution<T: Real>(ch: &ChannelSpec<T>) -> DiscreteDistribution<T> {
    DiscreteDistribution::normalized(
        lattice_positions(ch)
            .into_iter()
            .zip(unconstrained_masses(ch)),
    )
    .expect("unconstrained lattice is a valid distribution")
}

/// Expected cost of the unconstrained optimum; the constraint binds below it.
pub fn critical_cost<T: Real>(ch: &ChannelSpec<T>, cost: &CostSpec<T>) -> T {
    expected_cost(&unconstrained_solution(ch), cost)
}

/// Closed-form capacity of the unconstrained channel in nats:
/// `ln(n+1)` for integer `r`, `ρ ln(n+2) + (1-ρ) ln(n+1)` otherwise.
pub fn unconstrained_capacity<T: Real>(ch: &ChannelSpec<T>) -> T {
    let n1 = T::from_usize_lossy(ch.n() + 1);
    let n2 = T::from_usize_lossy(ch.n() + 2);
    if ch.is_integer_r() {
        n1.ln()
    } else {
        ch.rho() * n2.ln() + (T::one() - ch.rho()) * n1.ln()
    }
}

/// Index (1-based) of the lattice point at `x`, if any.
pub fn lattice_index<T: Real>(lattice: &[T], x: T) -> Result<usize> {
    let tol = T::tol(1e-9);
    lattice
        .iter()
        .position(|&p| (p - x).abs() <= tol)
        .map(|i| i + 1)
        .ok_or(Error::NotOnLattice { x: x.as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_lattice() {
        let ch = ChannelSpec::<f64>::from_r(4.0).unwrap();
        let d = unconstrained_solution(&ch);
        assert_eq!(d.positions(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(d.masses().iter().all(|&m| (m - 0.2).abs() < 1e-15));
    }

    #[test]
    fn non_integer_lattice() {
        let ch = ChannelSpec::<f64>::from_r(4.4).unwrap();
        let d = unconstrained_solution(&ch);
        let expected_x = [
            0.0,
            1.0 / 11.0,
            5.0 / 22.0,
            7.0 / 22.0,
            5.0 / 11.0,
            6.0 / 11.0,
            15.0 / 22.0,
            17.0 / 22.0,
            10.0 / 11.0,
            1.0,
        ];
        let expected_m = [10.0, 2.0, 8.0, 4.0, 6.0, 6.0, 4.0, 8.0, 2.0, 10.0];
        assert_eq!(d.len(), 10);
        for ((x, m), (ex, em)) in d.iter().zip(expected_x.iter().zip(expected_m)) {
            assert!((x - ex).abs() < 1e-14, "{x} vs {ex}");
            assert!((m - em / 60.0).abs() < 1e-15);
        }
    }

    #[test]
    fn narrow_channel_has_two_points() {
        let ch = ChannelSpec::<f64>::from_r(0.4).unwrap();
        let d = unconstrained_solution(&ch);
        assert_eq!(d.positions(), &[0.0, 1.0]);
        assert_eq!(d.masses(), &[0.5, 0.5]);
    }

    #[test]
    fn critical_costs() {
        let lin = |r: f64| {
            critical_cost(
                &ChannelSpec::from_r(r).unwrap(),
                &CostSpec::new(1.0, 1.0).unwrap(),
            )
        };
        assert!((lin(4.0) - 0.5).abs() < 1e-15);
        assert!((lin(4.4) - 0.5).abs() < 1e-15);
        let c = critical_cost(
            &ChannelSpec::<f64>::from_r(2.0).unwrap(),
            &CostSpec::new(0.5, 1.0).unwrap(),
        );
        assert!((c - (0.5f64.sqrt() + 1.0) / 3.0).abs() < 1e-15);
        assert!((c - 0.56904).abs() < 1e-5);
    }

    #[test]
    fn lattice_lookup() {
        let ch = ChannelSpec::<f64>::from_r(2.4).unwrap();
        let lat = lattice_positions(&ch);
        assert_eq!(lattice_index(&lat, 1.0 / 6.0).unwrap(), 2);
        assert!(lattice_index(&lat, 0.3).is_err());
    }
}
