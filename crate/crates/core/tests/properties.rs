use proptest::prelude::*;
use uniform_capacity::analytic::lattice::{lattice_positions, unconstrained_masses};
use uniform_capacity::analytic::masses::mass_profile;
use uniform_capacity::*;

fn random_distribution() -> impl Strategy<Value = Distribution> {
    prop::collection::vec((0.0..=1.0f64, 0.01..1.0f64), 1..8).prop_filter_map("duplicate positions", |mut pts| {
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9);
        Distribution::normalized(pts).ok()
    })
}

fn lattice_distribution(ch: &Channel, weights: &[f64]) -> Distribution {
    let lat = lattice_positions(ch);
    Distribution::normalized(lat.into_iter().zip(weights.iter().copied())).unwrap()
}

fn non_integer_r() -> impl Strategy<Value = f64> {
    (1usize..6, 0.05..0.95f64).prop_map(|(n, rho)| n as f64 + rho)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_density_has_unit_mass(d in random_distribution(), r in 0.3..6.0f64) {
        let ch = Channel::from_r(r).unwrap();
        let out = OutputDensity::new(&d, &ch);
        prop_assert!((out.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_is_reflection_invariant(d in random_distribution(), r in 0.3..6.0f64) {
        let ch = Channel::from_r(r).unwrap();
        let a = mutual_information(&d, &ch);
        let b = mutual_information(&d.reflected(), &ch);
        match (a.finite(), b.finite()) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}"),
            (None, None) => {}
            _ => prop_assert!(false, "finiteness differs"),
        }
    }

    #[test]
    fn mutual_information_is_bounded(d in random_distribution(), r in 0.3..6.0f64) {
        let ch = Channel::from_r(r).unwrap();
        if let Some(i) = mutual_information(&d, &ch).finite() {
            prop_assert!(i >= -1e-12);
            prop_assert!(i <= unconstrained_capacity(&ch) + 1e-12);
        }
    }

    #[test]
    fn integer_lattice_density_is_minus_log_mass(n in 1usize..7, w in prop::collection::vec(0.01..1.0f64, 8)) {
        let ch = Channel::from_r(n as f64).unwrap();
        let d = lattice_distribution(&ch, &w[..=n]);
        for (x, m) in d.iter() {
            let i = marginal_information_density(x, &d, &ch).value();
            prop_assert!((i + m.ln()).abs() < 1e-12, "x={x}: {i} vs {}", -m.ln());
        }
    }

    #[test]
    fn non_integer_density_follows_overlap_sums(r in non_integer_r(), w in prop::collection::vec(0.01..1.0f64, 12)) {
        let ch = Channel::from_r(r).unwrap();
        let size = ch.num_points();
        let d = lattice_distribution(&ch, &w[..size]);
        let mut m = vec![0.0; size + 2];
        m[1..=size].copy_from_slice(d.masses());
        let n = ch.n();
        let hat = |l: usize| if l == 1 { m[1] } else if l == n + 2 { m[2 * n + 2] } else { m[2 * l - 2] + m[2 * l - 1] };
        let bar = |l: usize| m[2 * l - 1] + m[2 * l];
        let rho = ch.rho();
        for (j, (x, _)) in d.iter().enumerate().map(|(i, p)| (i + 1, p)) {
            let expected = -rho * hat(j / 2 + 1).ln() - (1.0 - rho) * bar(j.div_ceil(2)).ln();
            let i = marginal_information_density(x, &d, &ch).value();
            prop_assert!((i - expected).abs() < 1e-11, "j={j}: {i} vs {expected}");
        }
    }

    #[test]
    fn segment_slopes_match_overlap_formula(r in prop_oneof![non_integer_r(), (1usize..6).prop_map(|n| n as f64)],
                                            w in prop::collection::vec(0.01..1.0f64, 12)) {
        let ch = Channel::from_r(r).unwrap();
        let d = lattice_distribution(&ch, &w[..ch.num_points()]);
        for check in check_piecewise_linearity(&d, &ch, 33).unwrap() {
            if let SegmentCheck::Checked(s) = check {
                prop_assert!((s.fitted_slope - s.formula_slope).abs() < 1e-8, "{s:?}");
                prop_assert!(s.max_deviation < 1e-8, "{s:?}");
            }
        }
    }

    #[test]
    fn expected_cost_decreases_in_lambda(r in prop_oneof![non_integer_r(), (1usize..6).prop_map(|n| n as f64)],
                                         alpha in 0.2..=1.0f64) {
        let ch = Channel::from_r(r).unwrap();
        let cost = Cost::new(alpha, 1.0).unwrap();
        let table = DefaultSolver::default().thresholds(&ch, &cost).unwrap();
        for k in 0..table.num_regimes() {
            let (lo, hi) = table.lambda_range(k);
            let hi = hi.unwrap_or(lo + 30.0);
            let mut last = f64::INFINITY;
            for s in 0..100 {
                let lambda = lo + (hi - lo) * s as f64 / 99.0;
                let c = mass_profile(lambda, k, &ch, &cost).unwrap().expected_cost(&cost);
                prop_assert!(c < last, "k={k} lambda={lambda}: {c} !< {last}");
                last = c;
            }
        }
    }

    #[test]
    fn zero_multiplier_gives_unconstrained_masses(r in prop_oneof![non_integer_r(), (1usize..6).prop_map(|n| n as f64)],
                                                  alpha in 0.2..=1.0f64) {
        let ch = Channel::from_r(r).unwrap();
        let p = mass_profile(0.0, 0, &ch, &Cost::new(alpha, 1.0).unwrap()).unwrap();
        for (a, b) in p.masses().iter().zip(unconstrained_masses(&ch)) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn profiles_are_continuous_across_thresholds(r in non_integer_r(), alpha in 0.2..0.95f64) {
        let ch = Channel::from_r(r).unwrap();
        let cost = Cost::new(alpha, 1.0).unwrap();
        let table = compute_thresholds(&ch, &cost).unwrap();
        for (k, &lambda) in table.lambdas.iter().enumerate() {
            let before = mass_profile(lambda, k, &ch, &cost).unwrap();
            let after = mass_profile(lambda, k + 1, &ch, &cost).unwrap();
            for (a, b) in before.masses().iter().zip(after.masses()) {
                prop_assert!((a - b).abs() < 1e-9, "k={k}: {:?} vs {:?}", before.masses(), after.masses());
            }
            prop_assert!((before.expected_cost(&cost) - table.thetas[k]).abs() < 1e-12);
        }
        for w in table.thetas.windows(2) {
            prop_assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn chords_across_narrow_gaps_lie_below(d in random_distribution(), r in 0.5..6.0f64) {
        let ch = Channel::from_r(r).unwrap();
        let betas: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        for w in d.positions().windows(2) {
            if let GapConcavity::Deficit(v) = check_gap_concavity(&d, (w[0], w[1]), &ch, &betas).unwrap() {
                prop_assert!(v >= -1e-10, "gap {w:?}: {v}");
            }
        }
    }
}
