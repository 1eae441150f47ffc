use proptest::prelude::*;
use snowprobe_core::spaces::{
    parallelogram_defect, parallelogram_defect_pair, similarity_between, verify_map, MapDescriptor,
    MapKind, Norm, Point, SpaceDescriptor,
};
use snowprobe_core::MetricSpace;

fn c(v: &[f64]) -> Point {
    Point::Coords(v.to_vec())
}

fn f_lambda(lambda: f64) -> MapDescriptor {
    MapDescriptor::new(MapKind::CoordinateDilation(vec![lambda, lambda * lambda]), lambda).unwrap()
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coordinate_dilation_of_the_mixed_plane(lambda in 0.05f64..20.0, seed in any::<u64>()) {
        let mixed = SpaceDescriptor::mixed(vec![1.0, 0.5]).unwrap();
        let samples = mixed.sample(30, seed).unwrap();
        let v = verify_map(&mixed, &f_lambda(lambda), &samples, 1e-12).unwrap();
        prop_assert!(v.certified, "{}", v.max_defect);
    }

    #[test]
    fn dilations_compose(l1 in 0.1f64..10.0, l2 in 0.1f64..10.0, seed in any::<u64>()) {
        let mixed = SpaceDescriptor::mixed(vec![1.0, 0.5]).unwrap();
        let samples = mixed.sample(20, seed).unwrap();
        let both = f_lambda(l1).then(f_lambda(l2));
        prop_assert!((both.factor - l1 * l2).abs() <= 1e-12 * l1 * l2);
        let v = verify_map(&mixed, &both, &samples, 1e-12).unwrap();
        prop_assert!(v.certified, "{}", v.max_defect);
        for p in &samples.points {
            let direct = f_lambda(l1 * l2).apply(&mixed, p).unwrap().unwrap();
            let composed = both.apply(&mixed, p).unwrap().unwrap();
            // the mixed metric takes square roots, so compare coordinates
            let (a, b) = (direct.coords().unwrap(), composed.coords().unwrap());
            for (u, w) in a.iter().zip(b) {
                prop_assert!((u - w).abs() <= 1e-12 * u.abs().max(1.0), "{u} vs {w}");
            }
        }
    }

    #[test]
    fn wrong_factor_is_rejected(lambda in 0.2f64..5.0, seed in any::<u64>()) {
        let mixed = SpaceDescriptor::mixed(vec![1.0, 0.5]).unwrap();
        let samples = mixed.sample(20, seed).unwrap();
        let wrong = MapDescriptor::new(
            MapKind::CoordinateDilation(vec![lambda, lambda]),
            lambda,
        ).unwrap();
        prop_assume!((lambda - 1.0).abs() > 0.05);
        prop_assert!(!verify_map(&mixed, &wrong, &samples, 1e-6).unwrap().certified);
    }

    #[test]
    fn similarities_hit_their_targets(
        x in coords(), y in coords(), x2 in coords(), y2 in coords(), eps in 0.3f64..=1.0,
    ) {
        let desc = SpaceDescriptor::snowflaked(SpaceDescriptor::euclidean(2).unwrap(), eps).unwrap();
        let (x, y, x2, y2) = (c(&x), c(&y), c(&x2), c(&y2));
        let d1 = desc.distance(&x, &y).unwrap();
        let d2 = desc.distance(&x2, &y2).unwrap();
        prop_assume!(d1 > 1e-3 && d2 > 1e-3);
        let f = similarity_between(&desc, &x, &y, &x2, &y2).unwrap();
        // snowflaking amplifies rounding, so check the images in the plane
        let e2 = SpaceDescriptor::euclidean(2).unwrap();
        let scale = e2.distance(&x2, &y2).unwrap().max(1.0);
        prop_assert!(e2.distance(&f.apply(&desc, &x).unwrap().unwrap(), &x2).unwrap() <= 1e-10 * scale);
        prop_assert!(e2.distance(&f.apply(&desc, &y).unwrap().unwrap(), &y2).unwrap() <= 1e-10 * scale);
        let samples = desc.sample(15, 3).unwrap();
        let v = verify_map(&desc, &f, &samples, 1e-10).unwrap();
        prop_assert!(v.certified, "{}", v.max_defect);
    }

    #[test]
    fn euclidean_norm_satisfies_the_parallelogram_law(u in coords(), v in coords()) {
        let e2 = SpaceDescriptor::euclidean(2).unwrap();
        prop_assert!(parallelogram_defect_pair(&e2, &u, &v).unwrap() <= 1e-12);
    }

    #[test]
    fn shift_is_a_two_dilation_inside_the_window(seed in any::<u64>(), window in 4usize..9) {
        let shift = SpaceDescriptor::shift(window).unwrap();
        let samples = shift.sample(40, seed).unwrap();
        let map = MapDescriptor::new(MapKind::Shift(1), 2.0).unwrap();
        let v = verify_map(&shift, &map, &samples, 0.0).unwrap();
        prop_assert_eq!(v.max_defect, 0.0);
        prop_assert_eq!(v.pairs_checked + v.pairs_skipped, 40 * 39 / 2);
    }
}

#[test]
fn non_euclidean_norms_fail_the_parallelogram_law() {
    for (norm, floor) in [(Norm::Sup, 0.5), (Norm::P(1.0), 0.5)] {
        let desc = SpaceDescriptor::normed(2, norm).unwrap();
        let d = parallelogram_defect_pair(&desc, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(d >= floor, "{desc}: {d}");
        let samples = desc.sample(40, 9).unwrap();
        assert!(parallelogram_defect(&desc, &samples).unwrap() > 0.1);
    }
    let e2 = SpaceDescriptor::euclidean(2).unwrap();
    assert!(parallelogram_defect(&e2, &e2.sample(60, 9).unwrap()).unwrap() <= 1e-12);
}
