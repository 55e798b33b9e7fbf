use cvqkd::scanner::{
    db_to_transmission, linspace, threshold_transmission_with_tolerance, transmission_to_db, zero_crossing_loss,
    SecurityEdge, KAPPA_TOLERANCE, THRESHOLD_TOLERANCE,
};
use cvqkd::{
    key_rate, optimal_preparation_noise, rate_vs_loss_curve, scan_grid, threshold_transmission, Direction,
    ProtocolParams,
};
use proptest::prelude::*;

fn rate(p: &ProtocolParams, t: f64) -> f64 {
    key_rate(&p.with_transmission(t)).unwrap().key_rate
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_brackets_sign_change(
        kappa in 0.0f64..=30.0,
        w in 1.0f64..=1.3,
        beta in 0.8f64..=1.0,
        reverse in any::<bool>(),
    ) {
        let dir = if reverse { Direction::Reverse } else { Direction::Direct };
        let p = ProtocolParams::default()
            .with_preparation_noise(kappa)
            .with_eve_variance(w)
            .with_efficiency(beta)
            .with_direction(dir);
        let r = threshold_transmission(&p).unwrap();
        prop_assume!(r.converged && r.t_min < 1.0 - THRESHOLD_TOLERANCE);
        prop_assert!(rate(&p, (r.t_min + THRESHOLD_TOLERANCE).min(1.0)) >= -1e-9);
        prop_assert!(rate(&p, r.t_min - THRESHOLD_TOLERANCE) <= 1e-9);
    }
}

#[test]
fn threshold_agrees_with_curve_zero_crossing() {
    for (kappa, dir) in [
        (0.0, Direction::Direct),
        (2.0, Direction::Direct),
        (18.0, Direction::Direct),
        (0.0, Direction::Reverse),
        (18.0, Direction::Reverse),
    ] {
        let p = ProtocolParams::default().with_preparation_noise(kappa).with_direction(dir);
        let r = threshold_transmission(&p).unwrap();
        let curve = rate_vs_loss_curve(&p, &linspace(0.0, 5.0, 501)).unwrap();
        let crossing = zero_crossing_loss(&curve).expect("curve crosses zero");
        assert!((crossing - r.loss_db).abs() < 0.02, "{kappa} {dir}: {crossing} vs {}", r.loss_db);
    }
}

#[test]
fn db_conversion_round_trips() {
    for t in [1e-3, 0.1, 0.5, 0.79, 1.0] {
        assert!((db_to_transmission(transmission_to_db(t)) - t).abs() < 1e-15);
    }
    assert_eq!(transmission_to_db(1.0), 0.0);
    assert!((transmission_to_db(0.5) - 3.010_299_956_639_812).abs() < 1e-12);
}

#[test]
fn reverse_reconciliation_prefers_no_preparation_noise() {
    let p = ProtocolParams::default().with_direction(Direction::Reverse);
    let opt = optimal_preparation_noise(&p, (0.0, 30.0)).unwrap();
    assert!(opt.kappa < 10.0 * KAPPA_TOLERANCE, "{}", opt.kappa);
    let at_zero = threshold_transmission(&p).unwrap();
    assert!((opt.threshold.t_min - at_zero.t_min).abs() < 1e-4);
}

#[test]
fn ideal_limit_threshold_converges_in_modulation() {
    let ideal = ProtocolParams::default().with_efficiency(1.0).with_eve_variance(1.0);
    let t5 = threshold_transmission_with_tolerance(&ideal.with_modulation_variance(1e5), 1e-9).unwrap();
    let t6 = threshold_transmission_with_tolerance(&ideal.with_modulation_variance(1e6), 1e-9).unwrap();
    assert!((t5.t_min - t6.t_min).abs() < 1e-3);
    // independent numpy bisection at V_S = 1e6
    assert!((t6.t_min - 0.731_058_8).abs() < 1e-5, "{}", t6.t_min);
}

#[test]
fn ideal_limit_optimum_at_upper_boundary() {
    let ideal = ProtocolParams::default()
        .with_efficiency(1.0)
        .with_eve_variance(1.0)
        .with_modulation_variance(1e5);
    let opt = optimal_preparation_noise(&ideal, (0.0, 30.0)).unwrap();
    assert!(opt.kappa > 30.0 - 10.0 * KAPPA_TOLERANCE, "{}", opt.kappa);
    assert!(opt.threshold.t_min < 0.6756);
}

#[test]
fn optimal_noise_respects_range() {
    let opt = optimal_preparation_noise(&ProtocolParams::default(), (0.0, 1.0)).unwrap();
    assert!((0.0..=1.0).contains(&opt.kappa));
    assert!(optimal_preparation_noise(&ProtocolParams::default(), (2.0, 1.0)).is_err());
    assert!(optimal_preparation_noise(&ProtocolParams::default(), (-1.0, 1.0)).is_err());
}

#[test]
fn grid_shape_and_reverse_edge_monotone() {
    let kappa_axis = linspace(0.0, 30.0, 31);
    let t_axis = linspace(0.01, 1.0, 100);
    let g = scan_grid(&ProtocolParams::default().with_direction(Direction::Reverse), &kappa_axis, &t_axis).unwrap();
    g.validate().unwrap();
    assert_eq!(g.rates.len(), 31);
    assert!(g.rates.iter().all(|row| row.len() == 100));
    let mut prev = 0.0;
    for i in 0..kappa_axis.len() {
        let SecurityEdge::Crossing(t) = g.security_edge(i) else {
            panic!("row {i} has no crossing");
        };
        assert!(t >= prev);
        prev = t;
    }
}

#[test]
fn grid_entries_match_pointwise_rate() {
    let base = ProtocolParams::default();
    let kappa_axis = [0.0, 5.0, 18.0];
    let t_axis = [0.5, 0.8, 0.95];
    let g = scan_grid(&base, &kappa_axis, &t_axis).unwrap();
    for (i, &k) in kappa_axis.iter().enumerate() {
        for (j, &t) in t_axis.iter().enumerate() {
            assert_eq!(g.rates[i][j], rate(&base.with_preparation_noise(k), t));
        }
    }
}

#[test]
fn no_modulation_is_insecure_at_unity() {
    let p = ProtocolParams::default().with_modulation_variance(0.0);
    assert!(matches!(threshold_transmission(&p), Err(cvqkd::Error::InsecureAtUnity { .. })));
}

#[test]
fn pure_loss_reverse_is_secure_down_to_floor() {
    let p = ProtocolParams::default()
        .with_efficiency(1.0)
        .with_eve_variance(1.0)
        .with_direction(Direction::Reverse);
    let r = threshold_transmission(&p).unwrap();
    assert!(!r.converged);
    assert_eq!(r.t_min, cvqkd::scanner::TRANSMISSION_FLOOR);
    r.validate().unwrap();
}
