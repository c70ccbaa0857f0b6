//! Multiplier search and support-shrinking thresholds.

use crate::analytic::lattice::critical_cost;
use crate::analytic::masses::{mass_profile, masses_noninteger, MassProfile};
use crate::channel::{ChannelSpec, CostSpec, DiscreteDistribution};
use crate::error::{invalid, Error, Result};
use crate::roots::{bisect, expand_until, LAMBDA_CAP};
use crate::scalar::Real;

const BISECT_ITERS: usize = 400;

/// Budgets `θ_0 > θ_1 > … > θ_{n-1}` at which `x_2, x_4, …, x_2n` leave
/// the support, with the multipliers at which the respective mass vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable<T> {
    pub thetas: Vec<T>,
    pub lambdas: Vec<T>,
    pub cbar_star: T,
}

impl<T: Real> ThresholdTable<T> {
    /// Table without thresholds (integer `r`, or `n = 0`).
    pub fn empty(cbar_star: T) -> Self {
        Self {
            thetas: Vec::new(),
            lambdas: Vec::new(),
            cbar_star,
        }
    }

    /// `k` with `cbar ∈ (θ_k, θ_{k-1}]`, where `θ_{-1} = c̄*` and `θ_n = 0`.
    pub fn regime_for(&self, cbar: T) -> usize {
        self.thetas.iter().filter(|&&theta| cbar <= theta).count()
    }

    /// Multipliers served by `S_k`; the upper end is open for the last regime.
    pub fn lambda_range(&self, k: usize) -> (T, Option<T>) {
        let lo = if k == 0 { T::zero() } else { self.lambdas[k - 1] };
        (lo, self.lambdas.get(k).copied())
    }

    /// Budgets `(lo, hi]` served by `S_k`.
    pub fn cost_range(&self, k: usize) -> (T, T) {
        let hi = if k == 0 {
            self.cbar_star
        } else {
            self.thetas[k - 1]
        };
        (self.thetas.get(k).copied().unwrap_or_else(T::zero), hi)
    }

    pub fn num_regimes(&self) -> usize {
        self.thetas.len() + 1
    }
}

/// Thresholds of the support cascade for non-integer `r` and `α ≤ 1`.
///
/// For `k = 1..=n` the multiplier `λ_{k-1}` is the zero of `m_2k` in the
/// `S_{k-1}` construction; `θ_{k-1}` is the expected cost there.
///
/// For linear cost (`α = 1`) no even mass ever vanishes and the table is
/// empty: `S_0` serves every budget below `c̄*`.
pub fn compute_thresholds<T: Real>(
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
) -> Result<ThresholdTable<T>> {
    if ch.is_integer_r() {
        return Err(Error::WrongLattice("non-integer r"));
    }
    if !cost.is_concave() {
        return Err(invalid("alpha", "support thresholds exist only for alpha <= 1"));
    }
    let mut table = ThresholdTable::empty(critical_cost(ch, cost));
    if cost.alpha() == T::one() {
        // both overlap chains decay at the same rate, so every even mass
        // stays positive for all finite λ and the support never shrinks
        return Ok(table);
    }
    let mut lo = T::zero();
    for k in 1..=ch.n() {
        let vanishing = 2 * k;
        let mass_at = |lambda: T| -> T {
            masses_noninteger(lambda, k - 1, ch, cost)
                .map(|p| p.mass(vanishing))
                .unwrap_or_else(|_| T::nan())
        };
        let step = T::one().max(lo);
        let Some(hi) = expand_until(|l| mass_at(l) <= T::zero(), lo, step, T::lit(LAMBDA_CAP)) else {
            // m_2k stays positive for every multiplier we can represent
            break;
        };
        let (a, b) = bisect(mass_at, lo, hi, BISECT_ITERS);
        let lambda_k = if mass_at(a).abs() <= mass_at(b).abs() { a } else { b };
        let profile = masses_noninteger(lambda_k, k - 1, ch, cost)?;
        if !only_vanishing(&profile, vanishing)? {
            // other masses underflowed first: the threshold lies below the
            // smallest budget double precision can resolve
            break;
        }
        table.thetas.push(profile.expected_cost(cost));
        table.lambdas.push(lambda_k);
        lo = lambda_k;
    }
    Ok(table)
}

/// `Ok(false)` when another support mass has underflowed to zero, an error
/// when one has turned negative.
fn only_vanishing<T: Real>(profile: &MassProfile<T>, vanishing: usize) -> Result<bool> {
    let mut resolved = true;
    for j in 1..=profile.masses().len() {
        if j == vanishing || !profile.in_support(j) {
            continue;
        }
        let m = profile.mass(j);
        if m < T::zero() {
            return Err(Error::Structure(format!(
                "m_{j} = {m} turned negative before m_{vanishing} vanished at lambda = {}",
                profile.lambda()
            )));
        }
        if m == T::zero() {
            resolved = false;
        }
    }
    Ok(resolved)
}

/// Unique multiplier meeting `target_cbar` on support `S_k`.
///
/// Computes the threshold table on the fly for non-integer `r`; use
/// [`solve_lambda_with`] to reuse a cached table.
pub fn solve_lambda<T: Real>(
    target_cbar: T,
    k: usize,
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
) -> Result<(T, DiscreteDistribution<T>)> {
    let table = if ch.is_integer_r() {
        ThresholdTable::empty(critical_cost(ch, cost))
    } else {
        compute_thresholds(ch, cost)?
    };
    solve_lambda_with(target_cbar, k, ch, cost, &table)
}

pub fn solve_lambda_with<T: Real>(
    target_cbar: T,
    k: usize,
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
    table: &ThresholdTable<T>,
) -> Result<(T, DiscreteDistribution<T>)> {
    if !(target_cbar > T::zero() && target_cbar.is_finite()) {
        return Err(invalid("cbar", format!("must be positive, got {target_cbar}")));
    }
    if target_cbar > table.cbar_star {
        return Err(Error::InactiveBudget {
            cbar: target_cbar.as_f64(),
            cbar_star: table.cbar_star.as_f64(),
        });
    }
    let expected = table.regime_for(target_cbar);
    if expected != k {
        return Err(Error::RegimeMismatch {
            cbar: target_cbar.as_f64(),
            requested: k,
            expected,
        });
    }

    let excess = |lambda: T| -> T {
        mass_profile(lambda, k, ch, cost)
            .map(|p| p.expected_cost(cost) - target_cbar)
            .unwrap_or_else(|_| T::nan())
    };
    let (lo, hi) = table.lambda_range(k);
    if excess(lo) <= T::zero() {
        let dist = mass_profile(lo, k, ch, cost)?.to_distribution()?;
        return Ok((lo, dist));
    }
    let hi = match hi {
        Some(hi) => hi,
        None => expand_until(|l| excess(l) <= T::zero(), lo, T::one(), T::lit(LAMBDA_CAP))
            .ok_or(Error::BudgetTooSmall {
                cbar: target_cbar.as_f64(),
                lambda_max: LAMBDA_CAP,
            })?,
    };
    let (a, b) = bisect(&excess, lo, hi, BISECT_ITERS);
    let lambda = if excess(a).abs() <= excess(b).abs() { a } else { b };
    let residual = excess(lambda).abs();
    if residual > T::tol(1e-10) * T::one().max(target_cbar) {
        return Err(Error::Structure(format!(
            "expected cost misses the budget by {residual} at lambda = {lambda}"
        )));
    }
    let dist = mass_profile(lambda, k, ch, cost)?.to_distribution()?;
    Ok((lambda, dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::expected_cost;

    fn ch(r: f64) -> ChannelSpec<f64> {
        ChannelSpec::from_r(r).unwrap()
    }

    fn cost(alpha: f64) -> CostSpec<f64> {
        CostSpec::new(alpha, 1.0).unwrap()
    }

    #[test]
    fn integer_lambda_matches_quadratic_root() {
        let u = (0.97f64.sqrt() - 0.1) / 1.2;
        let exact = -2.0 * u.ln();
        let (lambda, d) = solve_lambda(0.4, 0, &ch(2.0), &cost(1.0)).unwrap();
        assert!((lambda - exact).abs() < 1e-12, "{lambda} vs {exact}");
        assert!((expected_cost(&d, &cost(1.0)) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn critical_budget_gives_zero_lambda() {
        let c = ch(4.0);
        let a = cost(0.6);
        let star = critical_cost(&c, &a);
        let (lambda, d) = solve_lambda(star, 0, &c, &a).unwrap();
        assert_eq!(lambda, 0.0);
        assert!(d.masses().iter().all(|&m| (m - 0.2).abs() < 1e-15));
    }

    #[test]
    fn thresholds_for_r_2_4() {
        let t = compute_thresholds(&ch(2.4), &cost(0.7)).unwrap();
        assert_eq!(t.thetas.len(), 2);
        assert!(t.thetas[0] > t.thetas[1] && t.thetas[1] > 0.0);
        assert!(t.thetas[0] < t.cbar_star);
        assert!(t.thetas[0] > 0.35 && t.thetas[0] < 0.54, "{:?}", t.thetas);
        let p = masses_noninteger(t.lambdas[0], 0, &ch(2.4), &cost(0.7)).unwrap();
        assert!(p.mass(2).abs() < 1e-9);
        for j in [1, 3, 4, 5, 6] {
            assert!(p.mass(j) > 0.0);
        }
    }

    #[test]
    fn narrow_channel_has_no_thresholds() {
        let t = compute_thresholds(&ch(0.4), &cost(0.7)).unwrap();
        assert!(t.thetas.is_empty());
        assert_eq!(t.regime_for(0.01), 0);
    }

    #[test]
    fn regime_lookup_uses_half_open_intervals() {
        let t = ThresholdTable {
            thetas: vec![0.4, 0.2],
            lambdas: vec![1.0, 2.0],
            cbar_star: 0.5,
        };
        assert_eq!(t.regime_for(0.45), 0);
        assert_eq!(t.regime_for(0.4), 1);
        assert_eq!(t.regime_for(0.3), 1);
        assert_eq!(t.regime_for(0.2), 2);
        assert_eq!(t.regime_for(0.01), 2);
        assert_eq!(t.cost_range(1), (0.2, 0.4));
        assert_eq!(t.lambda_range(2), (2.0, None));
    }

    #[test]
    fn mismatched_regime_names_the_right_support() {
        let t = compute_thresholds(&ch(2.4), &cost(0.7)).unwrap();
        let mid = 0.5 * (t.thetas[0] + t.thetas[1]);
        match solve_lambda(mid, 0, &ch(2.4), &cost(0.7)) {
            Err(Error::RegimeMismatch { expected, .. }) => assert_eq!(expected, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            solve_lambda(0.9, 0, &ch(2.4), &cost(0.7)),
            Err(Error::InactiveBudget { .. })
        ));
    }

    #[test]
    fn thresholds_reject_integer_and_convex() {
        assert!(compute_thresholds(&ch(3.0), &cost(0.7)).is_err());
        assert!(compute_thresholds(&ch(2.4), &cost(1.5)).is_err());
    }
}
