use proptest::prelude::*;
use snowprobe_core::chains::{p_length, refine_chain, verify_recursion, SubdivisionOracle};
use snowprobe_core::geodesics::{
    adjacent_additivity_defect, build_schedule, construct_geodesic, isometry_defect,
};
use snowprobe_core::oracle::{Linear, RatioOracle, Similarity};
use snowprobe_core::spaces::{Norm, Point, SpaceDescriptor};

fn c(v: &[f64]) -> Point {
    Point::Coords(v.to_vec())
}

// Deepest level whose smallest piece still has length >= 1e-5 relative to
// the whole, so that float cancellation stays below the oracle tolerance.
fn resolvable_depth(ratio: f64, cap: usize) -> usize {
    let m = ratio.min(1.0 - ratio);
    (0..=cap).rev().find(|&k| m.powi(k as i32 + 1) >= 1e-5).unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn recursion_is_exact_on_snowflaked_normed_segments(
        eps in 0.25f64..=1.0,
        t in 0.1f64..0.9,
        p in 1.0f64..6.0,
        q in prop::sample::select(vec![1.0, 2.0, 3.0]),
    ) {
        let base = SpaceDescriptor::normed(2, Norm::P(q)).unwrap();
        let desc = SpaceDescriptor::snowflaked(base, eps).unwrap();
        let (a, b) = (c(&[0.0, 0.0]), c(&[1.0, 0.5]));
        let z = c(&[t, 0.5 * t]);
        let left = snowprobe_core::MetricSpace::distance(&desc, &a, &z).unwrap()
            / snowprobe_core::MetricSpace::distance(&desc, &a, &b).unwrap();
        let place = Linear::for_ratio(&desc, left).unwrap();
        let oracle = SubdivisionOracle::new(&desc, place, a, z, b).unwrap();
        let check = verify_recursion(&oracle, p, resolvable_depth(t, 10)).unwrap();
        prop_assert!(check.max_deviation <= 1e-10, "{}", check.max_deviation);
    }

    #[test]
    fn chains_decay_strictly_when_c_is_below_one(t in 0.2f64..0.8, p in 2.5f64..6.0) {
        let desc = SpaceDescriptor::snowflaked(SpaceDescriptor::euclidean(1).unwrap(), 0.5).unwrap();
        let (a, z, b) = (c(&[0.0]), c(&[t]), c(&[1.0]));
        let place = Linear::for_ratio(&desc, t.sqrt()).unwrap();
        let oracle = SubdivisionOracle::new(&desc, place, a, z, b).unwrap();
        prop_assume!(oracle.contraction(p) < 1.0);
        let lengths: Vec<f64> = (0..8)
            .map(|k| p_length(&desc, &refine_chain(&oracle, k).unwrap(), p).unwrap())
            .collect();
        prop_assert!(lengths.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn similarity_oracle_handles_triangles_in_the_plane(
        zx in 0.1f64..0.9,
        zy in 0.05f64..0.5,
        eps in 0.3f64..=1.0,
    ) {
        let desc = SpaceDescriptor::snowflaked(SpaceDescriptor::euclidean(2).unwrap(), eps).unwrap();
        let (a, z, b) = (c(&[0.0, 0.0]), c(&[zx, zy]), c(&[1.0, 0.0]));
        let sim = Similarity { a: a.clone(), z: z.clone(), b: b.clone() };
        let oracle = SubdivisionOracle::new(&desc, sim, a, z, b).unwrap();
        let p = 1.0 / eps;
        let check = verify_recursion(&oracle, p, 6).unwrap();
        prop_assert!(check.max_deviation <= 1e-10, "{}", check.max_deviation);
    }

    #[test]
    fn deeper_geodesics_extend_shallower_ones(delta in 0.05f64..0.95, n in 1usize..9) {
        prop_assume!(n < resolvable_depth(delta, 12));
        let e2 = SpaceDescriptor::euclidean(2).unwrap();
        let oracle = RatioOracle::between(&e2, Linear { t: delta }, delta).unwrap();
        let (x, y) = (c(&[0.2, -1.0]), c(&[3.0, 4.0]));
        let shallow = construct_geodesic(&oracle, &x, &y, n).unwrap();
        let deep = construct_geodesic(&oracle, &x, &y, n + 1).unwrap();
        let restricted: Vec<(f64, &Point)> = deep.level(n).collect();
        let direct: Vec<(f64, &Point)> = shallow.level(n).collect();
        prop_assert_eq!(restricted, direct);
        prop_assert_eq!(&build_schedule(delta, n).unwrap().endpoints, &shallow.schedule.endpoints);
    }

    #[test]
    fn schedules_are_nested_with_dyadic_sizes(delta in 0.01f64..0.99, n in 0usize..12) {
        let e = build_schedule(delta, n).unwrap();
        prop_assert_eq!(e.endpoints.len(), (1 << n) + 1);
        prop_assert!(e.endpoints.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!((e.endpoints[0], e.endpoints[1 << n]), (0.0, 1.0));
        if n > 0 {
            let parent = build_schedule(delta, n - 1).unwrap();
            let every_other: Vec<f64> = e.endpoints.iter().copied().step_by(2).collect();
            prop_assert_eq!(every_other, parent.endpoints);
        }
    }

    #[test]
    fn exact_oracles_give_additive_geodesics(delta in 0.32f64..0.68) {
        let desc = SpaceDescriptor::normed(3, Norm::Sup).unwrap();
        let oracle = RatioOracle::between(&desc, Linear { t: delta }, delta).unwrap();
        let g = construct_geodesic(&oracle, &c(&[0.0, 0.0, 0.0]), &c(&[1.0, 0.3, -0.5]), 10).unwrap();
        prop_assert!(adjacent_additivity_defect(&g).unwrap() <= 1e-10);
        prop_assert!(isometry_defect(&g).unwrap().max_defect <= 1e-8);
    }
}

#[test]
fn mixed_axis_geodesic_is_exact() {
    let mixed = SpaceDescriptor::mixed(vec![1.0, 0.5]).unwrap();
    let oracle = RatioOracle::between(&mixed, Linear { t: 0.5 }, 0.5).unwrap();
    let g = construct_geodesic(&oracle, &c(&[0.0, 0.3]), &c(&[2.0, 0.3]), 8).unwrap();
    assert!(isometry_defect(&g).unwrap().max_defect <= 1e-12);
}
