//! Optimality checks for candidate input distributions.
//!
//! A distribution with multiplier `λ ≥ 0` is capacity achieving iff
//!
//! ```text
//! i(x; p) ≤ I(p) + λ (c(x) - c̄)   for all x ∈ [0, 1]
//! i(x; p) = I(p) + λ (c(x) - c̄)   for all x in the support
//! ```
//!
//! and the budget is met with equality whenever `λ > 0`.

use crate::analytic::lattice::{lattice_index, lattice_positions};
use crate::channel::{
    expected_cost, ChannelSpec, CostSpec, DiscreteDistribution, InfoDensity, OutputDensity,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct KktOptions<T> {
    pub check_grid_size: usize,
    pub eq_tol: T,
    pub ineq_tol: T,
    /// Support points lighter than this are exempt from the equality test
    /// (used for gridded oracle solutions).
    pub eq_mass_floor: T,
}

impl<T: Real> Default for KktOptions<T> {
    fn default() -> Self {
        Self {
            check_grid_size: 10_001,
            eq_tol: T::lit(1e-8),
            ineq_tol: T::lit(1e-8),
            eq_mass_floor: T::zero(),
        }
    }
}

impl<T: Real> KktOptions<T> {
    pub fn with_tolerances(eq_tol: T, ineq_tol: T) -> Self {
        Self {
            eq_tol,
            ineq_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport<T> {
    pub capacity_nats: T,
    pub lambda: T,
    /// `(x_j, i(x_j) - [I + λ(c_j - c̄)])` over the support.
    pub equality_residuals: Vec<(T, T)>,
    /// Largest |residual| among points subject to the equality test.
    pub max_equality_residual: T,
    /// `max_x i(x) - [I + λ(c(x) - c̄)]` over the check grid.
    pub max_inequality_violation: T,
    pub worst_x: T,
    pub check_grid_size: usize,
    /// `⟨c⟩ - c̄`; must vanish when `λ > 0`.
    pub cost_residual: T,
    /// Point where the information density is infinite, if any.
    pub infinite_at: Option<T>,
    pub passed: bool,
}

pub fn verify<T: Real>(
    dist: &DiscreteDistribution<T>,
    lambda: T,
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
    opts: &KktOptions<T>,
) -> Result<KktReport<T>> {
    if !(lambda >= T::zero() && lambda.is_finite()) {
        return Err(crate::error::invalid("lambda", "must be finite and nonnegative"));
    }
    if opts.check_grid_size < 2 {
        return Err(crate::error::invalid("check_grid_size", "must be at least 2"));
    }
    let out = OutputDensity::new(dist, ch);
    let cbar = cost.cbar();
    let rhs = |x: T, info: T| info + lambda * (cost.cost(x) - cbar);
    let cost_residual = expected_cost(dist, cost) - cbar;

    let mut report = KktReport {
        capacity_nats: T::nan(),
        lambda,
        equality_residuals: Vec::with_capacity(dist.len()),
        max_equality_residual: T::zero(),
        max_inequality_violation: T::neg_infinity(),
        worst_x: T::zero(),
        check_grid_size: opts.check_grid_size,
        cost_residual,
        infinite_at: None,
        passed: false,
    };

    let mut support_info = Vec::with_capacity(dist.len());
    let mut info = T::zero();
    for (x, m) in dist.iter() {
        match out.information_density(x) {
            InfoDensity::Finite(v) => {
                support_info.push(v);
                info = info + m * v;
            }
            InfoDensity::Infinite => {
                report.infinite_at = Some(x);
                report.capacity_nats = T::infinity();
                report.max_inequality_violation = T::infinity();
                return Ok(report);
            }
        }
    }
    report.capacity_nats = info;

    for ((x, m), v) in dist.iter().zip(support_info) {
        let residual = v - rhs(x, info);
        report.equality_residuals.push((x, residual));
        if m >= opts.eq_mass_floor && residual.abs() > report.max_equality_residual {
            report.max_equality_residual = residual.abs();
        }
    }

    let last = T::from_usize_lossy(opts.check_grid_size - 1);
    for g in 0..opts.check_grid_size {
        let x = T::from_usize_lossy(g) / last;
        match out.information_density(x) {
            InfoDensity::Finite(v) => {
                let violation = v - rhs(x, info);
                if violation > report.max_inequality_violation {
                    report.max_inequality_violation = violation;
                    report.worst_x = x;
                }
            }
            InfoDensity::Infinite => {
                report.infinite_at = Some(x);
                report.max_inequality_violation = T::infinity();
                report.worst_x = x;
                return Ok(report);
            }
        }
    }

    let slack_ok = lambda == T::zero() || cost_residual.abs() <= opts.eq_tol;
    let budget_ok = cost_residual <= opts.eq_tol;
    report.passed = report.max_equality_residual <= opts.eq_tol
        && report.max_inequality_violation <= opts.ineq_tol
        && slack_ok
        && budget_ok;
    Ok(report)
}

/// Outcome of the affine fit of `i(x)` on one lattice segment `[x_j, x_{j+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLinearity<T> {
    /// 1-based index `j` of the left lattice point.
    pub index: usize,
    pub left: T,
    pub right: T,
    pub fitted_slope: T,
    pub formula_slope: T,
    /// Largest distance of the samples from the fitted line.
    pub max_deviation: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentCheck<T> {
    Checked(SegmentLinearity<T>),
    /// An overlap sum in the slope formula vanishes.
    Skipped { index: usize, reason: String },
}

/// Samples `i(x)` between consecutive lattice points and compares the
/// fitted slope with `r ln[(m_{j-1} + m_j) / (m_{j+1} + m_{j+2})]`
/// (integer `r`: `r ln(m_j / m_{j+1})`), with `m_0 = m_{N+1} = 0`.
///
/// Every point of `dist` must sit on the unconstrained lattice.
pub fn check_piecewise_linearity<T: Real>(
    dist: &DiscreteDistribution<T>,
    ch: &ChannelSpec<T>,
    samples_per_segment: usize,
) -> Result<Vec<SegmentCheck<T>>> {
    if samples_per_segment < 3 {
        return Err(crate::error::invalid("samples_per_segment", "need at least 3 samples"));
    }
    let lattice = lattice_positions(ch);
    let size = lattice.len();
    // m[0] and m[size + 1] are the boundary zeros
    let mut m = vec![T::zero(); size + 2];
    for (x, mass) in dist.iter() {
        m[lattice_index(&lattice, x)?] = mass;
    }
    let out = OutputDensity::new(dist, ch);
    let r = ch.r();

    let mut checks = Vec::with_capacity(size.saturating_sub(1));
    for j in 1..size {
        let (num, den) = if ch.is_integer_r() {
            (m[j], m[j + 1])
        } else {
            (m[j - 1] + m[j], m[j + 1] + m.get(j + 2).copied().unwrap_or_else(T::zero))
        };
        if num <= T::zero() || den <= T::zero() {
            checks.push(SegmentCheck::Skipped {
                index: j,
                reason: format!("overlap sum vanishes (numerator {num}, denominator {den})"),
            });
            continue;
        }
        let formula_slope = r * (num / den).ln();
        let (left, right) = (lattice[j - 1], lattice[j]);
        let last = T::from_usize_lossy(samples_per_segment - 1);
        let mut xs = Vec::with_capacity(samples_per_segment);
        let mut ys = Vec::with_capacity(samples_per_segment);
        let mut finite = true;
        for s in 0..samples_per_segment {
            let t = T::from_usize_lossy(s) / last;
            let x = if s + 1 == samples_per_segment {
                right
            } else {
                left + (right - left) * t
            };
            match out.information_density(x) {
                InfoDensity::Finite(v) => {
                    xs.push(x);
                    ys.push(v);
                }
                InfoDensity::Infinite => {
                    finite = false;
                    break;
                }
            }
        }
        if !finite {
            checks.push(SegmentCheck::Skipped {
                index: j,
                reason: "information density is infinite on the segment".into(),
            });
            continue;
        }
        let (slope, intercept) = least_squares(&xs, &ys);
        let max_deviation = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (y - (intercept + slope * x)).abs())
            .fold(T::zero(), T::max);
        checks.push(SegmentCheck::Checked(SegmentLinearity {
            index: j,
            left,
            right,
            fitted_slope: slope,
            formula_slope,
            max_deviation,
        }));
    }
    Ok(checks)
}

fn least_squares<T: Real>(xs: &[T], ys: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapConcavity<T> {
    /// `min_β i(x_β) - [(1-β) i(x_1) + β i(x_2)]`.
    Deficit(T),
    /// The gap is at least `2b` wide; the density is infinite inside.
    TooWide,
}

/// Chord test of `i(x)` across a gap `(x1, x2)` of the support.
pub fn check_gap_concavity<T: Real>(
    dist: &DiscreteDistribution<T>,
    gap: (T, T),
    ch: &ChannelSpec<T>,
    betas: &[T],
) -> Result<GapConcavity<T>> {
    let (x1, x2) = gap;
    if !(x1 < x2) {
        return Err(Error::InvalidDistribution(format!("gap ({x1}, {x2}) is empty")));
    }
    let tol = T::tol(1e-12);
    let on_support = |x: T| dist.positions().iter().any(|&p| (p - x).abs() <= tol);
    if !on_support(x1) || !on_support(x2) {
        return Err(Error::InvalidDistribution(
            "gap endpoints must be support points".into(),
        ));
    }
    if dist
        .positions()
        .iter()
        .any(|&p| p > x1 + tol && p < x2 - tol)
    {
        return Err(Error::InvalidDistribution(format!(
            "support point strictly inside ({x1}, {x2})"
        )));
    }
    if x2 - x1 >= ch.b() + ch.b() {
        return Ok(GapConcavity::TooWide);
    }
    if let Some(beta) = betas.iter().find(|&&b| !(b >= T::zero() && b <= T::one())) {
        return Err(crate::error::invalid("betas", format!("{beta} outside [0, 1]")));
    }
    let out = OutputDensity::new(dist, ch);
    let eval = |x: T| out.information_density(x).finite();
    let (i1, i2) = match (eval(x1), eval(x2)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(GapConcavity::TooWide),
    };
    let mut deficit = T::infinity();
    for &beta in betas {
        let x = (T::one() - beta) * x1 + beta * x2;
        let chord = (T::one() - beta) * i1 + beta * i2;
        match eval(x) {
            Some(v) => deficit = deficit.min(v - chord),
            None => return Ok(GapConcavity::TooWide),
        }
    }
    Ok(GapConcavity::Deficit(deficit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::lattice::unconstrained_solution;
    use crate::analytic::lambda::solve_lambda;

    #[test]
    fn unconstrained_integer_solution_is_flat() {
        let ch = ChannelSpec::<f64>::from_r(4.0).unwrap();
        let cost = CostSpec::new(1.0, 0.9).unwrap();
        let d = unconstrained_solution(&ch);
        let rep = verify(&d, 0.0, &ch, &cost, &KktOptions::default()).unwrap();
        assert!(rep.passed);
        assert!(rep.max_equality_residual < 1e-12);
        assert!(rep.max_inequality_violation.abs() < 1e-12);
        assert!((rep.capacity_nats - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn integer_constrained_solution_passes() {
        let ch = ChannelSpec::<f64>::from_r(2.0).unwrap();
        let cost = CostSpec::new(1.0, 0.4).unwrap();
        let (lambda, d) = solve_lambda(0.4, 0, &ch, &cost).unwrap();
        assert!((lambda - 0.609236).abs() < 1e-6);
        let rep = verify(&d, lambda, &ch, &cost, &KktOptions::with_tolerances(1e-9, 1e-9)).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn perturbed_masses_fail() {
        let ch = ChannelSpec::<f64>::from_r(2.0).unwrap();
        let cost = CostSpec::new(1.0, 0.4).unwrap();
        let (lambda, d) = solve_lambda(0.4, 0, &ch, &cost).unwrap();
        let mut pts: Vec<(f64, f64)> = d.iter().collect();
        pts[0].1 += 0.01;
        let bad = DiscreteDistribution::normalized(pts).unwrap();
        let rep = verify(&bad, lambda, &ch, &cost, &KktOptions::default()).unwrap();
        assert!(!rep.passed);
        assert!(rep.max_inequality_violation > 0.0);
    }

    #[test]
    fn support_gap_reports_infinity() {
        let ch = ChannelSpec::<f64>::from_r(4.0).unwrap();
        let cost = CostSpec::new(1.0, 0.9).unwrap();
        let d = DiscreteDistribution::new([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let rep = verify(&d, 0.0, &ch, &cost, &KktOptions::default()).unwrap();
        assert!(!rep.passed);
        assert!(rep.infinite_at.is_some());
    }

    #[test]
    fn flat_unconstrained_slopes() {
        let ch = ChannelSpec::<f64>::from_r(4.0).unwrap();
        let checks = check_piecewise_linearity(&unconstrained_solution(&ch), &ch, 21).unwrap();
        assert_eq!(checks.len(), 4);
        for c in checks {
            match c {
                SegmentCheck::Checked(s) => {
                    assert!(s.formula_slope.abs() < 1e-15);
                    assert!(s.fitted_slope.abs() < 1e-10);
                    assert!(s.max_deviation < 1e-10);
                }
                SegmentCheck::Skipped { .. } => panic!("nothing should be skipped"),
            }
        }
    }

    #[test]
    fn off_lattice_points_are_rejected() {
        let ch = ChannelSpec::<f64>::from_r(4.0).unwrap();
        let d = DiscreteDistribution::new([(0.0, 0.5), (0.3, 0.5)]).unwrap();
        assert!(check_piecewise_linearity(&d, &ch, 11).is_err());
    }

    #[test]
    fn gap_endpoints_give_zero_deficit() {
        let ch = ChannelSpec::<f64>::from_r(2.4).unwrap();
        let d = DiscreteDistribution::new([(0.0, 0.3), (0.1, 0.2), (0.4, 0.3), (0.7, 0.1), (1.0, 0.1)]).unwrap();
        match check_gap_concavity(&d, (0.1, 0.4), &ch, &[0.0, 1.0]).unwrap() {
            GapConcavity::Deficit(v) => assert_eq!(v, 0.0),
            other => panic!("{other:?}"),
        }
        assert!(check_gap_concavity(&d, (0.0, 0.4), &ch, &[0.5]).is_err());
        let wide = DiscreteDistribution::new([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(
            check_gap_concavity(&wide, (0.0, 1.0), &ch, &[0.5]).unwrap(),
            GapConcavity::TooWide
        );
    }
}
