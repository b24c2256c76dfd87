use brox_core::maps::build_scale_function;
use brox_core::path::{interpolate_polygonal, BrownianPath, EnvStreams, PartitionRule, Role, StreamId, TimeGrid, TwoSidedEnvironment};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_inverse_roundtrips(seed in 0u64..1000, x in -1.9f64..1.9, mesh_steps in 1usize..8) {
        let env = TwoSidedEnvironment::sample(2.0, 0.01, EnvStreams::for_replica(seed, 0)).unwrap();
        let rule = PartitionRule::Uniform(0.01 * mesh_steps as f64);
        let n = env.n_pos().min(env.n_neg()) as i64;
        let n = n - n % mesh_steps as i64;
        let part = rule.realize(env.h(), -n, n).unwrap();
        let s = build_scale_function(&interpolate_polygonal(&env, &part).unwrap()).unwrap();
        let y = s.evaluate(x).unwrap();
        prop_assert!((s.invert(y).unwrap() - x).abs() < 1e-9);
        prop_assert!(s.evaluate(x + 0.01).unwrap() > y);
    }

    #[test]
    fn bridge_points_stay_consistent(seed in 0u64..1000, us in proptest::collection::vec(0.0f64..1.0, 1..20)) {
        let mut b = BrownianPath::sample(TimeGrid::new(0.0, 0.1, 10).unwrap(), seed, StreamId::new(0, Role::Brownian));
        let first: Vec<f64> = us.iter().map(|&u| b.bridge_value(u).unwrap()).collect();
        let again: Vec<f64> = us.iter().map(|&u| b.bridge_value(u).unwrap()).collect();
        prop_assert_eq!(first, again);
        for k in 0..=10 {
            prop_assert_eq!(b.bridge_value(k as f64 * 0.1).unwrap(), b.values()[k]);
        }
    }
}
