use harnacklab_core::covering::{
    dilate_measures, dyadic_class, verify_cover, vitali_subcover, CylinderFamily, FamilyMember,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn member(x: &[f64], t: f64, rho: f64) -> FamilyMember {
    FamilyMember { x: x.to_vec(), t, rho }
}

#[test]
fn single_cylinder_selects_itself() {
    let f = CylinderFamily::new(vec![member(&[0.3, 0.1], 0.0, 0.4)], 0.5, 3.0).unwrap();
    assert_eq!(vitali_subcover(&f), vec![0]);
}

#[test]
fn disjoint_equal_cylinders_are_both_selected() {
    let f = CylinderFamily::new(vec![member(&[0.0], 0.0, 0.5), member(&[2.0], 0.0, 0.5)], 0.5, 3.0).unwrap();
    let mut sel = vitali_subcover(&f);
    sel.sort();
    assert_eq!(sel, vec![0, 1]);
}

#[test]
fn verification_detects_overlap_and_missing_cover() {
    let f = CylinderFamily::new(vec![member(&[0.0], 0.0, 1.0), member(&[0.5], 0.0, 0.6)], 0.5, 3.0).unwrap();
    let both = verify_cover(&f, &[0, 1]).unwrap();
    assert!(!both.disjoint);
    assert_eq!(both.overlapping, vec![(0, 1)]);
    let none = verify_cover(&f, &[]).unwrap();
    assert!(!none.covered);
    assert_eq!(none.uncovered, vec![0, 1]);
    assert!(verify_cover(&f, &[5]).is_err());
}

#[test]
fn invalid_families_are_rejected() {
    assert!(CylinderFamily::new(vec![member(&[0.0], 0.0, 1.5)], 0.5, 3.0).is_err());
    assert!(CylinderFamily::new(vec![member(&[0.0], 0.0, 0.5)], 1.0, 3.0).is_err());
    assert!(CylinderFamily::new(vec![member(&[0.0], 0.0, 0.5), member(&[0.0, 1.0], 0.0, 0.5)], 0.5, 3.0).is_err());
}

#[test]
fn many_random_families_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..50 {
        let n = 1 + trial % 2;
        let theta = 0.05 + 0.9 * (trial as f64 / 50.0);
        let f = CylinderFamily::random(&mut rng, 300, n, theta, 2.5).unwrap();
        let sel = vitali_subcover(&f);
        let report = verify_cover(&f, &sel).unwrap();
        assert!(report.passed(), "trial {trial}: {report:?}");
    }
}

fn family_strategy() -> impl Strategy<Value = CylinderFamily> {
    (
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..10.0), 1..80),
        0.01f64..0.99,
        2.0f64..5.0,
    )
        .prop_map(|(raw, theta, p)| {
            let items = raw
                .into_iter()
                .map(|(x, y, t, e)| member(&[x, y], t, 2f64.powf(-e)))
                .collect();
            CylinderFamily::new(items, theta, p).unwrap()
        })
}

proptest! {
    #[test]
    fn selection_is_disjoint_and_covers(f in family_strategy()) {
        let sel = vitali_subcover(&f);
        let report = verify_cover(&f, &sel).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn selection_is_maximal_per_class(f in family_strategy()) {
        let sel = vitali_subcover(&f);
        for i in 0..f.len() {
            if sel.contains(&i) {
                continue;
            }
            let k = dyadic_class(f.items()[i].rho);
            let blocked = sel
                .iter()
                .any(|&l| dyadic_class(f.items()[l].rho) <= k && f.intersect(i, l));
            prop_assert!(blocked, "member {} could have been selected", i);
        }
    }

    #[test]
    fn selection_is_deterministic(f in family_strategy()) {
        prop_assert_eq!(vitali_subcover(&f), vitali_subcover(&f.clone()));
    }

    #[test]
    fn dilated_measure_is_a_fixed_multiple(f in family_strategy()) {
        let sel = vitali_subcover(&f);
        let (big, small) = dilate_measures(&f, &sel);
        let factor = 5f64.powf(2.0 + f.p());
        prop_assert!((big - factor * small).abs() <= 1e-12 * big);
    }
}
