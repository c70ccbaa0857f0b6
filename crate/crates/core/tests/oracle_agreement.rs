//! The Blahut–Arimoto oracle against the closed-form solutions.

use uniform_capacity::oracle::clusters;
use uniform_capacity::*;

const GRID: usize = 241;
const CAPACITY_TOL: f64 = 5e-3;

fn budgets(ch: &Channel, alpha: f64) -> Vec<f64> {
    let solver = DefaultSolver::default();
    let table = solver.thresholds(ch, &Cost::new(alpha, 1.0).unwrap()).unwrap();
    let mut out = vec![table.cbar_star * 1.2];
    for k in 0..table.num_regimes() {
        let (lo, hi) = table.cost_range(k);
        // skip regimes too thin for a 241-point grid to resolve
        if hi - lo > 1e-2 {
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

fn agree(r: f64) {
    let ch = Channel::from_r(r).unwrap();
    let solver = DefaultSolver::default();
    let cfg = OracleConfig::with_grid(GRID);
    let h = 1.0 / (GRID - 1) as f64;
    for alpha in [0.5, 0.7, 1.0] {
        for cbar in budgets(&ch, alpha) {
            let cost = Cost::new(alpha, cbar).unwrap();
            let exact = solver.solve(&ch, &cost).unwrap();
            let ba = ba_constrained(&ch, &cost, &cfg).unwrap();
            let gap = (ba.capacity_nats - exact.capacity_nats).abs();
            assert!(
                gap < CAPACITY_TOL,
                "r={r} alpha={alpha} cbar={cbar}: BA {} vs {} ({})",
                ba.capacity_nats,
                exact.capacity_nats,
                exact.regime
            );
            // BA is a lower bound up to its convergence slack and the budget
            // overshoot its outer search allows
            let slack = 1e-6 + exact.lambda_star * (ba.achieved_cost - cbar).max(0.0);
            assert!(
                ba.capacity_nats <= exact.capacity_nats + slack,
                "r={r} alpha={alpha} cbar={cbar}: BA {} exceeds {} (cost {})",
                ba.capacity_nats,
                exact.capacity_nats,
                ba.achieved_cost
            );

            let centers: Vec<f64> = clusters(&ba.dist, 1e-3, 1.5 * h)
                .into_iter()
                .filter(|c| c.mass > 5e-3)
                .map(|c| c.center)
                .collect();
            let support = exact.solution.discrete().unwrap();
            for (x, m) in support.iter().filter(|&(_, m)| m > 5e-3) {
                assert!(
                    centers.iter().any(|&c| (c - x).abs() <= h),
                    "r={r} alpha={alpha} cbar={cbar}: no cluster near x={x} (m={m}); centers {centers:?}"
                );
            }
            for &c in &centers {
                assert!(
                    support.positions().iter().any(|&x| (c - x).abs() <= h),
                    "r={r} alpha={alpha} cbar={cbar}: spurious cluster at {c}"
                );
            }
        }
    }
}

#[test]
fn integer_r_2() {
    agree(2.0);
}

#[test]
fn integer_r_3() {
    agree(3.0);
}

#[test]
fn integer_r_4() {
    agree(4.0);
}

#[test]
fn non_integer_r_2_4() {
    agree(2.4);
}

#[test]
fn non_integer_r_3_7() {
    agree(3.7);
}

#[test]
fn non_integer_r_4_4() {
    agree(4.4);
}

#[test]
fn objective_is_monotone_and_bisection_brackets_the_budget() {
    let ch = Channel::from_r(2.4).unwrap();
    let cost = Cost::new(0.7, 0.3).unwrap();
    let cfg = OracleConfig {
        record_trace: true,
        ..OracleConfig::with_grid(121)
    };
    let ba = ba_constrained(&ch, &cost, &cfg).unwrap();
    assert!(ba.converged, "{:?}", ba.diagnostic);
    for w in ba.objective_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "objective decreased: {w:?}");
    }
    // achieved cost decreases with λ along the outer search
    let mut trace = ba.bisection_trace.clone();
    trace.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in trace.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-9, "cost not monotone in lambda: {w:?}");
    }
    assert!((ba.achieved_cost - 0.3).abs() < 1e-5);
    assert!(ba.duality_gap < 1e-4);
}

#[test]
fn inactive_budget_runs_at_zero_multiplier() {
    let ch = Channel::from_r(4.0).unwrap();
    let ba = ba_constrained(&ch, &Cost::new(1.0, 0.9).unwrap(), &OracleConfig::default()).unwrap();
    assert_eq!(ba.lambda, 0.0);
    assert!((ba.capacity_nats - 5f64.ln()).abs() < 1e-3);
    let near: f64 = ba
        .dist
        .weights()
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            let x = ba.dist.position(i);
            [0.0, 0.25, 0.5, 0.75, 1.0].iter().any(|&s| (x - s).abs() <= 0.01)
        })
        .map(|(_, &w)| w)
        .sum();
    assert!(near >= 0.99, "{near}");
}

#[test]
fn concave_cost_below_first_threshold_looks_discrete() {
    let ch = Channel::from_r(2.4).unwrap();
    let cost = Cost::new(0.7, 0.35).unwrap();
    let ba = ba_constrained(&ch, &cost, &OracleConfig::with_grid(GRID)).unwrap();
    let h = 1.0 / (GRID - 1) as f64;
    let centers: Vec<f64> = clusters(&ba.dist, 1e-4, 1.5 * h)
        .into_iter()
        .filter(|c| c.mass >= 1e-3)
        .map(|c| c.center)
        .collect();
    assert!(centers.len() <= 5, "{centers:?}");
    let near: f64 = (0..GRID)
        .filter(|&i| centers.iter().any(|c| (ba.dist.position(i) - c).abs() <= 0.01))
        .map(|i| ba.dist.weights()[i])
        .sum();
    assert!(near >= 0.99, "{near}");
}
