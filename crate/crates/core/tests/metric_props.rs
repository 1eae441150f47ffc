use proptest::prelude::*;
use snowprobe_core::metric::{power_transform, restrict, validate_metric, FiniteMetricSpace, Witness};
use snowprobe_core::spaces::{parse_space_spec, Point, SpaceDescriptor};
use snowprobe_core::MetricSpace;

fn sampled(spec: &str, n: usize, seed: u64) -> FiniteMetricSpace {
    parse_space_spec(spec)
        .unwrap()
        .sample(n, seed)
        .unwrap()
        .materialize()
        .unwrap()
}

fn pair_of(w: Witness) -> (usize, usize) {
    match w {
        Witness::Triple(x, _, y) | Witness::Pair(x, y) => (x, y),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn snowflaking_preserves_the_triangle_inequality(seed in any::<u64>(), eps in 0.05f64..=1.0) {
        let s = sampled("euclidean:2", 25, seed);
        prop_assume!(validate_metric(&s, 0.0).is_empty());
        let t = power_transform(&s, eps).unwrap();
        let bad = validate_metric(&t, 1e-12);
        prop_assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn power_round_trip(seed in any::<u64>(), p in 0.1f64..10.0) {
        let s = sampled("mixed(1,0.5)", 15, seed);
        let back = power_transform(&power_transform(&s, p).unwrap(), 1.0 / p).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let (a, b) = (s.d(i, j), back.d(i, j));
                prop_assert!((a - b).abs() <= 1e-12 * a.max(b).max(f64::MIN_POSITIVE));
            }
        }
    }

    #[test]
    fn restriction_adds_no_violations(seed in any::<u64>(), mask in prop::collection::vec(any::<bool>(), 12)) {
        // a perturbed matrix so the parent has some violations to inherit
        let base = sampled("euclidean:1", 12, seed);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| (0..12).map(|j| if (i, j) == (0, 1) || (i, j) == (1, 0) { 5.0 } else { base.d(i, j) }).collect())
            .collect();
        let parent = FiniteMetricSpace::from_rows(rows, None).unwrap();
        let subset: Vec<usize> = (0..12).filter(|&i| mask[i]).collect();
        let child = restrict(&parent, &subset).unwrap();
        let parent_bad = validate_metric(&parent, 1e-9);
        for v in validate_metric(&child, 1e-9) {
            let (x, y) = pair_of(v.witness);
            let lifted = (subset[x], subset[y]);
            let inherited = parent_bad.iter().any(|p| pair_of(p.witness) == lifted);
            prop_assert!(inherited, "{v:?} is new");
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), count in 0usize..40) {
        let d = parse_space_spec("snowflake(normed(3,sup),0.5)").unwrap();
        prop_assert_eq!(d.sample(count, seed).unwrap(), d.sample(count, seed).unwrap());
    }

    #[test]
    fn shift_space_is_ultrametric(seed in any::<u64>(), window in 3usize..6) {
        let s = sampled(&format!("shift:{window}"), 20, seed);
        for x in 0..s.len() {
            for y in 0..s.len() {
                for z in 0..s.len() {
                    prop_assert!(s.d(x, z) <= s.d(x, y).max(s.d(y, z)));
                }
            }
        }
    }

    #[test]
    fn snowflake_distance_is_a_power(
        u in prop::collection::vec(-5.0f64..5.0, 3),
        v in prop::collection::vec(-5.0f64..5.0, 3),
        eps in 0.05f64..=1.0,
    ) {
        let base = SpaceDescriptor::normed(3, snowprobe_core::spaces::Norm::P(3.0)).unwrap();
        let snow = SpaceDescriptor::snowflaked(base.clone(), eps).unwrap();
        let (x, y) = (Point::Coords(u), Point::Coords(v));
        prop_assert_eq!(snow.distance(&x, &y).unwrap(), base.distance(&x, &y).unwrap().powf(eps));
    }
}

#[test]
fn circle_samples_validate() {
    let n = 50;
    let s = FiniteMetricSpace::from_fn(n, None, |i, j| {
        let t = std::f64::consts::TAU * (i as f64 - j as f64) / n as f64;
        Ok((2.0 * (1.0 - t.cos())).sqrt())
    })
    .unwrap();
    assert!(validate_metric(&s, 1e-9).is_empty());
}
