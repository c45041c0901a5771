use proptest::prelude::*;

use mibench::channels::normalize_power;
use mibench::estimators::{
    mine_estimate, moment_ratio, nce_estimate, nwj_estimate, rje_estimate, rje_inner_bound,
    smile_estimate, EstimatorSpec,
};
use mibench::harness::{Experiment, ExperimentConfig};
use mibench::sampling::ScoreMatrix;
use mibench::tensor::Matrix;

fn score_matrix(max_k: usize, range: f64) -> impl Strategy<Value = ScoreMatrix> {
    (2..=max_k).prop_flat_map(move |k| {
        prop::collection::vec(-range..range, k * k)
            .prop_map(move |v| ScoreMatrix::from_flat(v, k).unwrap())
    })
}

proptest! {
    #[test]
    fn nce_never_exceeds_log_k(s in score_matrix(12, 30.0)) {
        let v = nce_estimate(&s).unwrap().value_nats;
        prop_assert!(v <= (s.k() as f64).ln() + 1e-12);
    }

    #[test]
    fn dv_dominates_nwj(s in score_matrix(10, 8.0)) {
        let dv = mine_estimate(&s).unwrap().value_nats;
        let nwj = nwj_estimate(&s).unwrap().value_nats;
        prop_assert!(dv >= nwj - 1e-12);
    }

    #[test]
    fn dv_is_shift_invariant(s in score_matrix(8, 5.0), c in -10.0f64..10.0) {
        let shifted = ScoreMatrix::from_flat(s.as_flat().iter().map(|v| v + c).collect(), s.k()).unwrap();
        let a = mine_estimate(&s).unwrap().value_nats;
        let b = mine_estimate(&shifted).unwrap().value_nats;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn smile_with_loose_clip_is_dv(s in score_matrix(8, 5.0)) {
        let a = smile_estimate(&s, 5.0 + 1e-9).unwrap().value_nats;
        let b = mine_estimate(&s).unwrap().value_nats;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rje_sits_below_dv(s in score_matrix(10, 6.0), mult in 1.01f64..50.0) {
        let spec = EstimatorSpec {
            a_strategy: mibench::estimators::AStrategy::FixedMultiple(mult),
            ..EstimatorSpec::rje(6.0)
        };
        let r = rje_estimate(&s, &spec).unwrap().value_nats;
        let m = mine_estimate(&s).unwrap().value_nats;
        prop_assert!(r <= m + 1e-9, "rje {} dv {}", r, m);
    }

    #[test]
    fn inner_bound_holds(logs in prop::collection::vec(-6.0f64..6.0, 1..200), frac in 1e-4f64..1.0) {
        let b = moment_ratio(logs.iter().copied());
        let x: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
        let a = b * (1.0 + 99.0 * frac);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assert!(rje_inner_bound(&x, a, b).unwrap() >= mean.ln() - 1e-9);
    }

    #[test]
    fn normalized_power_is_unit(rows in 1usize..20, cols in 1usize..4, seed in any::<u64>()) {
        let mut rng = mibench::tensor::Rng::new(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| 3.0 * rng.normal() + 0.5).collect();
        let x = normalize_power(&Matrix::from_vec(rows, cols, data).unwrap()).unwrap();
        prop_assert!((x.mean_square() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_seeds_round_trip(seeds in prop::collection::btree_set(0u64..1000, 1..8), window in 1usize..100) {
        let list: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
        let text = format!("experiment = awgn_estimators\nseeds = {}\nfinal_window = {window}\n", list.join(", "));
        let cfg = ExperimentConfig::parse_for(&text, None).unwrap();
        prop_assert_eq!(cfg.experiment, Experiment::AwgnEstimators);
        let again = ExperimentConfig::parse_for(&cfg.to_config_string(), None).unwrap();
        prop_assert_eq!(again, cfg);
    }
}
