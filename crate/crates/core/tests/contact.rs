use harnacklab_core::contact::{
    basic_measure_estimate, basic_slope, contact_map_check, contact_set_measure, find_contact,
    quantified_measure_estimate, ParameterSet,
};
use harnacklab_core::scaling::intrinsic_rescale;
use harnacklab_core::solutions::{BarenblattSpec, ContactFnSpec, Rescaled};
use harnacklab_core::{AnalyticSolution, EllipticityParams, Grid, ScalarField, SpatialGrid};

fn params(p: f64) -> EllipticityParams {
    EllipticityParams::new(0.5, 2.0, p, 1).unwrap()
}

/// Barenblatt solution shifted in time and scaled so that `u(0, 0) = 1`.
fn unit_barenblatt(prm: &EllipticityParams) -> Rescaled<BarenblattSpec> {
    let b = BarenblattSpec::new(*prm).unwrap();
    let inner_time = 2.0;
    let m = b.peak(inner_time);
    let tau = m.powf(2.0 - prm.p());
    Rescaled::new(b, vec![0.0], -inner_time / tau, 1.0, m, prm).unwrap()
}

fn contact_grid(prm: &EllipticityParams, dx: f64, per_unit: f64) -> Grid {
    let unit = 16f64.powf(-prm.p());
    let space = SpatialGrid::new(&[0.0], &[1.0], dx).unwrap();
    Grid::new(space, -5.0 * unit, 0.0, unit / per_unit).unwrap()
}

#[test]
fn zero_field_contact_at_both_exponents() {
    for p in [1.5, 3.0] {
        let prm = params(p);
        let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / 64.0).unwrap();
        let grid = Grid::new(space, -0.25, 0.25, 1.0 / 64.0).unwrap();
        let u = ScalarField::from_fn(grid, |_, _| 0.0).unwrap();
        let phi = ContactFnSpec::new(vec![-0.125], 0.0, 1.0, &prm).unwrap();
        let rec = find_contact(&u, &phi).unwrap();
        assert!(rec.touched);
        assert_eq!(rec.x, vec![-0.125]);
        assert!(rec.t.abs() < 1e-12);
        let res = contact_map_check(&rec, 1.0, &prm).unwrap();
        assert!(res.dy < 1e-12 && res.ds < 1e-12);
    }
}

#[test]
fn basic_configuration_touches_close_and_low() {
    for p in [1.5, 3.0] {
        let prm = params(p);
        let sol = unit_barenblatt(&prm);
        let u = sol.sample(&contact_grid(&prm, 1.0 / 256.0, 64.0)).unwrap();
        assert!((u.value_at(&[0.0], 0.0).unwrap() - 1.0).abs() < 1e-12);
        let e = ParameterSet::basic(&prm, 8, 4).unwrap();
        let a = basic_slope(&prm);
        let m = contact_set_measure(&u, &e, a, 1, &prm).unwrap();
        assert_eq!(m.untouched, 0);
        for rec in &m.records {
            assert!((rec.x[0] - rec.y[0]).abs() < 0.5, "{rec:?}");
            assert!(rec.value < 4.0 + rec.tolerance);
            assert!(rec.t >= rec.s && rec.t < 0.0);
            assert!(rec.gap.abs() <= rec.tolerance);
        }
        assert!(m.ratio > 0.0);
        println!("p = {p}: ratio {}", m.ratio);
    }
}

#[test]
fn test_function_stays_below_before_contact() {
    let prm = params(3.0);
    let sol = unit_barenblatt(&prm);
    let u = sol.sample(&contact_grid(&prm, 1.0 / 128.0, 32.0)).unwrap();
    let a = basic_slope(&prm);
    for (y, s) in ParameterSet::basic(&prm, 4, 3).unwrap().samples() {
        let phi = ContactFnSpec::new(y.clone(), *s, a, &prm).unwrap();
        let rec = find_contact(&u, &phi).unwrap();
        let space = u.grid().space();
        for j in 0..=rec.time_index {
            let t = u.grid().time(j);
            for flat in 0..space.len() {
                let gap = u.at(j, flat) - phi.at(&space.point(flat), t);
                assert!(gap >= -rec.tolerance);
            }
        }
    }
}

#[test]
fn contact_is_translation_equivariant() {
    let prm = params(3.0);
    let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / 64.0).unwrap();
    let grid = Grid::new(space, -0.5, 0.5, 1.0 / 64.0).unwrap();
    let f = |x: &[f64], t: f64| 1.0 + (x[0] - 0.1).powi(2) + 0.5 * t;
    let (dx, dt) = (4.0 / 64.0, 8.0 / 64.0);
    let u = ScalarField::from_fn(grid.clone(), f).unwrap();
    let shifted = ScalarField::from_fn(grid, |x, t| f(&[x[0] - dx], t - dt)).unwrap();
    let phi = ContactFnSpec::new(vec![0.0], -0.25, 2.0, &prm).unwrap();
    let a = find_contact(&u, &phi).unwrap();
    let b = find_contact(&shifted, &phi.with_vertex(vec![dx], -0.25 + dt)).unwrap();
    assert!(a.touched && b.touched);
    assert!((b.x[0] - a.x[0] - dx).abs() < 1e-12);
    assert!((b.t - a.t - dt).abs() < 1e-12);
}

#[test]
fn paraboloid_map_residual_shrinks_under_refinement() {
    let prm = params(3.0);
    let a = 4.0;
    let mut residuals = Vec::new();
    for k in [32.0, 64.0, 128.0] {
        let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / k).unwrap();
        let grid = Grid::new(space, -1.0, 0.0, 1.0 / (4.0 * k)).unwrap();
        let u = ScalarField::from_fn(grid, |x, _| x[0] * x[0] + 1.0).unwrap();
        let phi = ContactFnSpec::new(vec![0.3], -0.9, a, &prm).unwrap();
        let rec = find_contact(&u, &phi).unwrap();
        assert!(rec.touched);
        let res = contact_map_check(&rec, a, &prm).unwrap();
        assert!(res.reliable);
        residuals.push(res.dy.max(res.ds));
    }
    assert!(residuals[2] < residuals[0], "{residuals:?}");
}

#[test]
fn gradient_norm_at_contact_matches_distance() {
    let prm = params(3.0);
    let a = 4.0;
    let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / 256.0).unwrap();
    let grid = Grid::new(space, -1.0, 0.0, 1.0 / 1024.0).unwrap();
    let u = ScalarField::from_fn(grid, |x, _| x[0] * x[0] + 1.0).unwrap();
    let rec = find_contact(&u, &ContactFnSpec::new(vec![0.3], -0.9, a, &prm).unwrap()).unwrap();
    let predicted = (a * (rec.x[0] - rec.y[0]).abs()).powf(1.0 / (prm.p() - 1.0));
    assert!((rec.gradient[0].abs() - predicted).abs() < 0.05);
}

#[test]
fn single_parameter_ratio_is_one_cell() {
    let prm = params(3.0);
    let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / 16.0).unwrap();
    let grid = Grid::new(space, -0.5, 0.5, 1.0 / 16.0).unwrap();
    let u = ScalarField::from_fn(grid.clone(), |_, _| 0.0).unwrap();
    let e = ParameterSet::new(vec![(vec![0.0], 0.0)], 0.01).unwrap();
    let m = contact_set_measure(&u, &e, 1.0, 0, &prm).unwrap();
    assert!((m.ratio - grid.cell_volume() / 0.01).abs() < 1e-12);
}

#[test]
fn distinct_gradients_give_distinct_contacts() {
    let prm = params(3.0);
    let sol = unit_barenblatt(&prm);
    let u = sol.sample(&contact_grid(&prm, 1.0 / 256.0, 64.0)).unwrap();
    let e = ParameterSet::basic(&prm, 8, 4).unwrap();
    let m = contact_set_measure(&u, &e, basic_slope(&prm), 0, &prm).unwrap();
    let mut seen = std::collections::HashMap::new();
    let mut collisions = 0;
    for rec in &m.records {
        if let Some(prev) = seen.insert((rec.time_index, rec.flat), rec.gradient.clone()) {
            if prev != rec.gradient {
                collisions += 1;
            }
        }
    }
    assert_eq!(collisions, 0);
}

#[test]
fn contact_ratio_survives_intrinsic_rescaling() {
    let prm = params(3.0);
    let sol = unit_barenblatt(&prm);
    let u = sol.sample(&contact_grid(&prm, 1.0 / 128.0, 32.0)).unwrap();
    let e = ParameterSet::basic(&prm, 8, 4).unwrap();
    let a = basic_slope(&prm);
    let base = contact_set_measure(&u, &e, a, 1, &prm).unwrap();
    let (r, m) = (2.0, 2.0);
    let v = intrinsic_rescale(&u, r, m, &prm).unwrap();
    let (e2, a2) = e.rescaled(a, r, m, &prm).unwrap();
    let scaled = contact_set_measure(&v, &e2, a2, 1, &prm).unwrap();
    assert_eq!(base.untouched, scaled.untouched);
    let cell = u.grid().cell_volume() / e.cell_volume();
    assert!((base.ratio - scaled.ratio).abs() <= cell, "{} vs {}", base.ratio, scaled.ratio);
}

#[test]
fn basic_estimate_trivial_cases() {
    let prm = params(3.0);
    let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / 32.0).unwrap();
    let grid = Grid::new(space, -1.0, 0.0, 1.0 / 32.0).unwrap();
    let zero = ScalarField::from_fn(grid.clone(), |_, _| 0.0).unwrap();
    let full = basic_measure_estimate(&zero, &prm).unwrap();
    // node count of B_1 x (-1, 0]: 63 interior nodes by 32 slices
    assert!((full - 63.0 * 32.0 * grid.cell_volume()).abs() < 1e-12);
    assert!((full - 2.0).abs() < 0.05);
    let low = ScalarField::from_fn(grid.clone(), |_, _| 3.99).unwrap();
    assert!(basic_measure_estimate(&low, &prm).is_err());
    let low = ScalarField::from_fn(grid.clone(), |x, t| if x[0] == 0.0 && t == 0.0 { 1.0 } else { 3.99 }).unwrap();
    assert_eq!(basic_measure_estimate(&low, &prm).unwrap(), full);
    let negative = ScalarField::from_fn(grid, |_, _| -1.0).unwrap();
    assert!(basic_measure_estimate(&negative, &prm).is_err());
}

#[test]
fn quantified_estimate_monotone_in_threshold() {
    let prm = params(3.0);
    let sol = unit_barenblatt(&prm);
    let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / 64.0).unwrap();
    let u = sol.sample(&Grid::new(space, -1.0, 0.0, 1.0 / 64.0).unwrap()).unwrap();
    let mut last = f64::INFINITY;
    for m0 in [1.0, 0.9, 0.8] {
        let q = quantified_measure_estimate(&u, &[0.5], 1.0, m0, 1.1, 0.01, &prm).unwrap();
        assert!(q.measure <= last);
        assert!(q.measure <= q.region_measure);
        last = q.measure;
    }
    assert!(quantified_measure_estimate(&u, &[0.5], 1.0, 1e-6, 1.1, 0.01, &prm).is_err());
}

#[test]
fn quantified_estimate_scales_with_rho() {
    let prm = params(3.0);
    let sol = unit_barenblatt(&prm);
    let space = SpatialGrid::new(&[0.0], &[1.0], 1.0 / 256.0).unwrap();
    let u = sol.sample(&Grid::new(space, -1.0, 0.0, 1.0 / 1024.0).unwrap()).unwrap();
    for rho in [1.0, 0.5, 0.25] {
        let q = quantified_measure_estimate(&u, &[0.0], rho, 1.0, 1.5, 0.01, &prm).unwrap();
        let normalized = q.measure / rho.powf(1.0 + prm.p());
        assert!(normalized > 0.1, "rho = {rho}: {normalized}");
    }
}
