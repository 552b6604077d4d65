use harnacklab_core::harnack::*;
use harnacklab_core::region::unit_ball_volume;
use harnacklab_core::scaling::intrinsic_rescale;
use harnacklab_core::solutions::{BarenblattSpec, BarrierSpec, ExampleSpec, Rescaled};
use harnacklab_core::{AnalyticSolution, EllipticityParams, Grid, ScalarField, SpatialGrid};
use proptest::prelude::*;

fn params(p: f64) -> EllipticityParams {
    EllipticityParams::new(1.0, 1.0, p, 1).unwrap()
}

fn grid(center: f64, half: f64, dx: f64, t0: f64, t1: f64, dt: f64) -> Grid {
    Grid::new(SpatialGrid::new(&[center], &[half], dx).unwrap(), t0, t1, dt).unwrap()
}

fn barenblatt_field(dx: f64) -> ScalarField {
    let b = BarenblattSpec::new(params(3.0)).unwrap();
    b.sample(&grid(0.0, 1.0, dx, 2.0, 3.0, dx)).unwrap()
}

#[test]
fn constants_give_unit_ratios() {
    let prm = params(3.0);
    let cfg = HarnackConfig { c_weak: 0.7, c1_h: 0.7, c2_h: 0.7, ..HarnackConfig::default() };
    let u = ScalarField::from_fn(grid(0.0, 4.0, 1.0 / 16.0, -9.0, 4.0, 1.0 / 16.0), |_, _| 0.7).unwrap();
    let w = weak_harnack_ratio(&u, &[0.0], 0.0, 0.5, &cfg, &prm).unwrap();
    assert_eq!(w.ratio, 1.0);
    assert_eq!(w.rhs, 0.7);
    let h = harnack_ratios(&u, &[0.0], 0.0, 0.5, &cfg, &prm).unwrap();
    assert_eq!((h.sup_ratio, h.inf_ratio), (1.0, 1.0));
}

#[test]
fn weak_ratio_fails_outside_the_field() {
    let prm = params(3.0);
    let u = ScalarField::from_fn(grid(0.0, 1.0, 1.0 / 16.0, -1.0, 0.0, 1.0 / 16.0), |_, _| 1.0).unwrap();
    let err = weak_harnack_ratio(&u, &[0.0], 0.0, 0.5, &HarnackConfig::default(), &prm).unwrap_err();
    assert!(err.to_string().contains("Q_3rho"), "{err}");
    let negative = ScalarField::from_fn(u.grid().clone(), |x, _| if x[0] > 0.2 { -1.0 } else { 1.0 }).unwrap();
    assert!(weak_harnack_ratio(&negative, &[0.0], 0.0, 0.1, &HarnackConfig::default(), &prm).is_err());
}

#[test]
fn barenblatt_weak_ratio_is_stable_under_refinement() {
    let prm = params(3.0);
    let cfg = HarnackConfig::default();
    let ratios: Vec<f64> = [64.0, 128.0, 256.0]
        .iter()
        .map(|k| weak_harnack_ratio(&barenblatt_field(1.0 / k), &[0.0], 3.0, 0.25, &cfg, &prm).unwrap().ratio)
        .collect();
    for r in &ratios {
        assert!(r.is_finite() && *r > 0.0);
        assert!((r / ratios[2] - 1.0).abs() < 0.1, "{ratios:?}");
    }
}

#[test]
fn doubling_the_field_keeps_the_weak_ratio() {
    // v = 2 u(x, 2 t) is the intrinsic rescaling with r = 1, M = 1/2 at p = 3
    let prm = params(3.0);
    let cfg = HarnackConfig::default();
    let u = barenblatt_field(1.0 / 128.0);
    let v = intrinsic_rescale(&u, 1.0, 0.5, &prm).unwrap();
    let a = weak_harnack_ratio(&u, &[0.0], 3.0, 0.25, &cfg, &prm).unwrap();
    let b = weak_harnack_ratio(&v, &[0.0], 1.5, 0.25, &cfg, &prm).unwrap();
    assert_eq!(a.nodes, b.nodes);
    assert!((a.ratio - b.ratio).abs() < 1e-10);
    assert!((b.rhs - 2.0 * a.rhs).abs() < 1e-12);
}

#[test]
fn harnack_ratios_commute_with_rescaling() {
    let prm = params(3.0);
    let cfg = HarnackConfig { c1_h: 0.5, c2_h: 0.5, ..HarnackConfig::default() };
    let b = BarenblattSpec::new(prm).unwrap();
    let u = b.sample(&grid(0.0, 2.0, 1.0 / 64.0, 1.0, 4.0, 1.0 / 64.0)).unwrap();
    let h = harnack_ratios(&u, &[0.25], 2.5, 0.25, &cfg, &prm).unwrap();
    assert!(h.sup_ratio >= 1.0 && h.inf_ratio.is_finite());
    let (r, m) = (2.0, 2.0);
    let tau = r * r * r / m;
    let v = intrinsic_rescale(&u, r, m, &prm).unwrap();
    let g = harnack_ratios(&v, &[0.25 / r], 2.5 / tau, 0.25 / r, &cfg, &prm).unwrap();
    assert!((h.sup_ratio - g.sup_ratio).abs() < 1e-10);
    assert!((h.inf_ratio - g.inf_ratio).abs() < 1e-10);
    assert!((g.theta1 - m * h.theta1).abs() < 1e-10);
}

#[test]
fn forward_ratio_needs_a_long_enough_wait() {
    let prm = params(3.0);
    let b = BarenblattSpec::new(prm).unwrap();
    let (rho, t0) = (1.0 / 64.0, 2.0);
    // just inside the free boundary, so B_rho(x0) pokes out of the support
    let x0 = ((b.support_radius(t0) - rho / 4.0) * 1024.0).round() / 1024.0;
    let u = b.sample(&grid(x0, 0.125, 1.0 / 1024.0, 0.25, 2.25, 1.0 / 4096.0)).unwrap();
    let mut seen_infinite = false;
    let mut seen_finite = false;
    let mut c2 = 1e-4;
    // larger c2 reach further back than the sampled window
    while let Ok(r) = forward_ratio(&u, &[x0], t0, rho, c2, &prm) {
        if r.ratio.is_finite() {
            seen_finite = true;
        } else {
            assert!(!seen_finite, "ratio became infinite again at c2 = {c2}");
            seen_infinite = true;
        }
        c2 *= 1.5;
    }
    assert!(seen_infinite && seen_finite);
}

#[test]
fn example_backward_sup_blows_up_only_for_long_cylinders() {
    let p = 3.0;
    let prm = params(p);
    let c0 = 2.0 * 8f64.powf(p);
    let short = 8f64.powf(p) / (4.0 * c0);
    let mut long = Vec::new();
    for k in [10_000u64, 100_000, 1_000_000] {
        let e = ExampleSpec::new(&prm, c0, k).unwrap();
        assert_eq!(e.value(&[0.0], 0.0).unwrap(), 1.0);
        let bounded = example_backward_sup(&e, short, 0.125, 33).unwrap();
        // sup at x = 0, t = -2 theta 8^-p = -1/(2 C0): alpha = 2
        assert!((bounded - 2.0).abs() < 1e-12);
        long.push(example_backward_sup(&e, 1.0, 0.125, 33).unwrap());
    }
    assert!(long[1] > 5.0 * long[0] && long[2] > 5.0 * long[1], "{long:?}");
}

#[test]
fn blow_up_value_matches_closed_form() {
    for (p, c0, k) in [(3.0, 10.0, 50u64), (4.0, 100.0, 500)] {
        let e = ExampleSpec::new(&params(p), c0, k).unwrap();
        let expected = (c0 / k as f64).powf(-1.0 / (p - 2.0));
        assert!((e.blow_up_value() - expected).abs() < 1e-12 * expected);
        assert!((e.value(&[0.0], e.t_k()).unwrap() - expected).abs() < 1e-9 * expected);
    }
}

#[test]
fn waiting_times_shrink_with_c0() {
    for p in [2.5, 3.0, 4.0] {
        let table = waiting_time_scan(&params(p), &WaitingTimeConfig::default()).unwrap();
        assert!(table.nonincreasing && table.within_bound, "{table:?}");
        for row in &table.rows {
            // the threshold solves alpha(-2 theta 8^-p) = C exactly
            let c: f64 = 4.0;
            let expected = 8f64.powf(p) * (1.0 - c.powf(2.0 - p)) / (2.0 * row.c0);
            assert!((row.theta1 / expected - 1.0).abs() < 1e-6, "{row:?} vs {expected}");
        }
    }
}

#[test]
fn waiting_time_bracket_failure_is_reported() {
    let cfg = WaitingTimeConfig { theta_hi: 1e-5, ..WaitingTimeConfig::default() };
    assert!(waiting_time_scan(&params(3.0), &cfg).is_err());
    let cfg = WaitingTimeConfig { k: 100, ..WaitingTimeConfig::default() };
    assert!(waiting_time_scan(&params(3.0), &cfg).is_err());
}

#[test]
fn propagation_finds_small_values_of_constants() {
    let prm = params(3.0);
    let cfg = HarnackConfig::default();
    let u = ScalarField::from_fn(grid(0.0, 1.5, 1.0 / 64.0, -3.0, 0.0, 1.0 / 8.0), |_, _| cfg.m0 / 2.0).unwrap();
    let out = propagation_check(&u, &[0.5], -1.0, 1, &cfg, &prm).unwrap();
    assert!(out.found);
    assert_eq!(out.value, cfg.m0 / 2.0);
    assert_eq!(out.radius, 1.0 / 32.0);
    // the ball B_1/1024 has no resolution on this grid
    assert!(propagation_check(&u, &[0.5], -1.5, 2, &cfg, &prm).is_err());
    // outside the admissible window
    assert!(propagation_check(&u, &[0.5], -0.25, 1, &cfg, &prm).is_err());
    assert!(propagation_check(&u, &[1.4], -1.0, 1, &cfg, &prm).is_err());
    assert!(propagation_check(&u, &[0.5], -0.75, 2, &cfg, &prm).is_err());
    let samples = propagation_samples(u.grid(), 8, 1);
    let found = find_propagation_constants(&[u], cfg.m0, &samples, 1.0 / 32.0, &LogGrid { lo: 1.0, hi: 4.0, steps: 9 })
        .unwrap();
    assert_eq!(found.l0, Some(1.0));
}

/// Barenblatt translated by `shift` in space, with inner time `t + 4`.
fn translated(shift: f64) -> Rescaled<BarenblattSpec> {
    let b = BarenblattSpec::new(params(3.0)).unwrap();
    Rescaled::new(b, vec![shift], -4.0, 1.0, 1.0, &params(3.0)).unwrap()
}

fn propagation_family(dx: f64) -> (Vec<ScalarField>, f64) {
    let g = grid(0.0, 1.5, dx, -3.0, 0.0, 0.125);
    let family: Vec<ScalarField> = [0.0, 0.25, -0.5].iter().map(|&c| translated(c).sample(&g).unwrap()).collect();
    let m0 = family.iter().map(|u| u.value_at(&[0.0], 0.0).unwrap()).fold(0.0, f64::max);
    (family, m0)
}

#[test]
fn translated_barenblatt_propagation() {
    let prm = params(3.0);
    let (family, m0) = propagation_family(1.0 / 2048.0);
    let samples = propagation_samples(family[0].grid(), 64, 1);
    let consts =
        find_propagation_constants(&family, m0, &samples, 1.0 / 32.0, &LogGrid { lo: 1.0, hi: 8.0, steps: 31 }).unwrap();
    let l0 = consts.l0.expect("a finite L0 exists");
    assert!(l0 > 1.0 && l0 >= consts.required);
    let cfg = HarnackConfig { m0, l0, ..HarnackConfig::default() };
    for u in &family {
        for (x0, t0) in samples.iter().filter(|s| s.1 <= propagation_window(2, 3.0)) {
            for k in [1, 2] {
                let out = propagation_check(u, x0, *t0, k, &cfg, &prm).unwrap();
                assert!(out.found, "k = {k} at {x0:?}, {t0}: {out:?}");
            }
        }
    }
}

#[test]
fn propagation_constant_is_scale_invariant() {
    let prm = params(3.0);
    let (family, m0) = propagation_family(1.0 / 256.0);
    let samples = propagation_samples(family[0].grid(), 16, 1);
    let l0_grid = LogGrid { lo: 1.0, hi: 8.0, steps: 31 };
    let base = find_propagation_constants(&family, m0, &samples, 1.0 / 32.0, &l0_grid).unwrap();
    let (r, m) = (2.0, 2.0);
    let tau = r * r * r / m;
    let scaled: Vec<ScalarField> = family.iter().map(|u| intrinsic_rescale(u, r, m, &prm).unwrap()).collect();
    let moved: Vec<(Vec<f64>, f64)> = samples.iter().map(|(x, t)| (vec![x[0] / r], t / tau)).collect();
    let other = find_propagation_constants(&scaled, m0 / m, &moved, 1.0 / 32.0 / r, &l0_grid).unwrap();
    assert_eq!(base.l0, other.l0);
    assert!((base.required - other.required).abs() < 1e-10);
}

/// Barenblatt compressed by `r = 4` so its support sits inside `B_1`, with
/// inner times from `1/64` at `t = -2` to `1` at `t = -1`.
fn decay_family() -> Rescaled<BarenblattSpec> {
    let b = BarenblattSpec::new(params(3.0)).unwrap();
    let r = 4.0;
    let tau = 63.0 / 64.0;
    Rescaled::new(b, vec![0.0], -2.0 - 1.0 / 63.0, r, r * r * r / tau, &params(3.0)).unwrap()
}

#[test]
fn zero_field_has_degenerate_decay() {
    let prm = params(3.0);
    let u = ScalarField::from_fn(grid(0.0, 1.0, 1.0 / 32.0, -2.0, 0.0, 1.0 / 32.0), |_, _| 0.0).unwrap();
    let d = level_set_decay(&u, 0.1, 4.4, 4, &prm).unwrap();
    assert!(d.degenerate && d.monotone);
    assert_eq!(d.eta, 0.0);
    assert!(d.rows.iter().all(|r| r.measure == 0.0));
}

#[test]
fn barenblatt_decay_rate_below_one_and_stable() {
    let prm = params(3.0);
    let sol = decay_family();
    let l: f64 = 4.4;
    let m0 = sol.value(&[0.0], -1.0).unwrap() / l.powf(2.5);
    let etas: Vec<f64> = [128.0, 256.0]
        .iter()
        .map(|k| {
            let u = sol.sample(&grid(0.0, 1.0, 1.0 / k, -2.0, 0.0, 1.0 / k)).unwrap();
            let d = level_set_decay(&u, m0, l, 4, &prm).unwrap();
            assert!(d.monotone && !d.degenerate);
            d.eta
        })
        .collect();
    assert!(etas[1] < 1.0);
    assert!((etas[0] / etas[1] - 1.0).abs() < 0.2, "{etas:?}");
}

#[test]
fn density_bound_and_constant_case() {
    assert_eq!(unit_ball_volume(1) / 16.0, 0.125);
    let prm = params(3.0);
    let m0 = 0.5;
    let u = ScalarField::from_fn(grid(0.0, 1.0, 1.0 / 32.0, -3.0, 0.0, 1.0 / 32.0), |_, _| m0 / 2.0).unwrap();
    let d = density_check(&u, m0, 0.6, &prm).unwrap();
    assert_eq!(d.measure, 0.0);
    assert_eq!(d.bound, 0.125);
    assert!(d.passed);
    assert!(density_check(&u, 0.1, 0.6, &prm).is_err());
    let prm2 = EllipticityParams::new(1.0, 1.0, 3.0, 2).unwrap();
    let space = SpatialGrid::new(&[0.0, 0.0], &[1.0, 1.0], 1.0 / 8.0).unwrap();
    let u2 = ScalarField::from_fn(Grid::new(space, -2.0, 0.0, 0.125).unwrap(), |_, _| 0.0).unwrap();
    let d2 = density_check(&u2, 1.0, 1.0, &prm2).unwrap();
    assert!((d2.bound - std::f64::consts::PI / 64.0).abs() < 1e-15);
}

#[test]
fn barrier_scan_for_the_p_laplacian_case() {
    let prm = params(3.0);
    let scan = find_barrier_params(&prm, &BarrierScanConfig::default()).unwrap();
    let q = scan.q_star.unwrap();
    assert!(q <= 3.0, "{scan:?}");
    assert!(scan.worst.residual < -0.1 * scan.worst.scale);
    assert_eq!(scan.sign_condition, Some(true));
    let spec = BarrierSpec::new(prm, q, scan.alpha_star.unwrap()).unwrap();
    assert!(barrier_sample_check(&spec, 20_000, 3, 0.1).unwrap().passed);
}

#[test]
fn barrier_plateau_residual_is_negative_for_any_parameters() {
    for (q, alpha) in [(2.0, 1e-4), (8.0, 0.1), (30.0, 0.16)] {
        let spec = BarrierSpec::new(params(3.0), q, alpha).unwrap();
        for i in 0..50 {
            let s = 0.25 * i as f64 / 50.0;
            let (res, scale) = spec.reduced_residual_parts(s).unwrap();
            // -beta 2^q on the plateau
            assert!((res + spec.beta() * 2f64.powf(q)).abs() < 1e-9 * scale);
        }
    }
}

#[test]
fn barrier_with_small_q_fails_the_eigenvalue_sign() {
    // Lambda (n - 1) / lambda = 8, so lambda (q + 1) - Lambda (n - 1) < 0 for q < 7
    let prm = EllipticityParams::new(1.0, 4.0, 3.0, 3).unwrap();
    for q in [2.0, 4.0, 6.5] {
        for alpha in [1e-4, 1e-2] {
            let spec = BarrierSpec::new(prm, q, alpha).unwrap();
            let report = barrier_sample_check(&spec, 20_000, 5, 0.0).unwrap();
            assert!(!report.strictly_negative);
            let x = &report.worst.x;
            let s = spec.similarity_variable(x, report.worst.t);
            assert!(s > 0.5, "q = {q}: worst at s = {s}");
        }
    }
}

#[test]
fn config_validation() {
    assert!(HarnackConfig::default().validate().is_ok());
    let bad = [
        HarnackConfig { nu: 1.0, ..HarnackConfig::default() },
        HarnackConfig { rho0: 1.0, ..HarnackConfig::default() },
        HarnackConfig { c1_h: 2.0, c2_h: 1.0, ..HarnackConfig::default() },
        HarnackConfig { eps_weak: 0.0, ..HarnackConfig::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    let cfg = HarnackConfig::default();
    assert_eq!(cfg.a_k(2, 3.0), 1.0 / 64.0);
    assert_eq!(cfg.b_k(3, 4.0), 1.0 / 64.0);
}

#[test]
fn report_tracks_refinement() {
    let mut coarse = MeasurementReport::new("weak", None);
    coarse.record("ratio", 1.0).record("inf_ratio", f64::INFINITY);
    let mut fine = MeasurementReport::new("weak", None);
    fine.record("ratio", 1.1);
    coarse.attach_refinement(&fine);
    assert!((coarse.refinement_deltas["ratio"] - 0.1).abs() < 1e-12);
    assert_eq!(coarse.infinite, vec!["inf_ratio".to_string()]);
}

fn positive_field() -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(0.1f64..10.0, 33 * 33).prop_map(|vals| {
        ScalarField::from_values(grid(0.0, 1.0, 1.0 / 16.0, -2.0, 0.0, 1.0 / 16.0), vals).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weak_ratio_is_scale_invariant(u in positive_field(), e in 0usize..3) {
        let prm = params(3.0);
        let cfg = HarnackConfig { c_weak: 0.1, ..HarnackConfig::default() };
        let m = [0.5, 2.0, 4.0][e];
        let u0 = u.value_at(&[0.0], 0.0).unwrap();
        let theta = 0.1 / u0;
        // rho keeps Q_3rho^-(theta) inside the grid
        let rho = (2.0 / (27.0 * theta)).cbrt().min(1.0 / 3.0) / 2.0;
        let a = weak_harnack_ratio(&u, &[0.0], 0.0, rho, &cfg, &prm);
        let v = intrinsic_rescale(&u, 1.0, m, &prm).unwrap();
        let b = weak_harnack_ratio(&v, &[0.0], 0.0, rho, &cfg, &prm);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.ratio - b.ratio).abs() < 1e-10 * a.ratio);
            prop_assert!(a.ratio > 0.0);
        }
    }

    #[test]
    fn decay_measures_never_increase(u in positive_field(), l in 1.1f64..3.0) {
        let d = level_set_decay(&u, 0.5, l, 5, &params(3.0)).unwrap();
        prop_assert!(d.monotone);
        if !d.degenerate {
            prop_assert!(d.eta > 0.0);
        }
    }
}
