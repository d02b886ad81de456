use arw_core::coarse::{exit_probability_dense, exit_probability_exact, BirthDeathChain, IntegerLaw};
use arw_core::count_chain::{stochastic_dominance_check, CountChain, CountState};
use arw_core::exact::{sum_identity_first, sum_identity_second};
use arw_core::experiments::ExperimentConfig;
use arw_core::params::ModelParams;
use arw_core::rng::trial_rng;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn live_state() -> impl Strategy<Value = (u32, u32, u32, f64)> {
    (1u32..400, 0.05f64..20.0).prop_flat_map(|(n, l)| {
        (1..=n).prop_flat_map(move |x| (Just(n), Just(x), 1..=x, Just(l)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, rng_seed: RngSeed::Fixed(0x5eed), ..ProptestConfig::default() })]

    #[test]
    fn kernel_is_a_probability_law((n, x, y, l) in live_state()) {
        let law = CountChain::new(ModelParams::new(n, l).unwrap()).increment_law(CountState::new(x, y)).unwrap();
        prop_assert!((law.total() - 1.0).abs() < 1e-12);
        for (o, p) in law.entries() {
            prop_assert!(p >= 0.0);
            let t = o.apply(CountState::new(x, y));
            prop_assert!(t.validate(n).is_ok(), "{o:?} leads to {t:?}");
        }
    }

    #[test]
    fn more_sleepers_push_dy_up((n, x, y, l) in live_state()) {
        prop_assume!(y >= 2);
        let c = CountChain::new(ModelParams::new(n, l).unwrap());
        let more = c.increment_law(CountState::new(x, y - 1)).unwrap();
        let fewer = c.increment_law(CountState::new(x, y)).unwrap();
        prop_assert!(stochastic_dominance_check(&more, &fewer));
    }

    #[test]
    fn sampled_runs_end_stable((n, x, y, l) in live_state(), seed in any::<u64>()) {
        let c = CountChain::new(ModelParams::new(n.min(60), l).unwrap());
        let s = CountState::new(x.min(n.min(60)), y.min(x.min(n.min(60))));
        let r = c.run_to_absorption(s, &mut trial_rng(seed, 0), 10_000_000).unwrap();
        prop_assert!(r.absorbed && r.final_state.y == 0 && r.final_state.x <= s.x);
    }

    #[test]
    fn sum_identities_hold(n in 1u64..300, gap in 1u64..2000) {
        let m = n + gap;
        let (l, r) = sum_identity_first(n, m).unwrap();
        prop_assert!((l - r).abs() <= 1e-12 * r.max(1.0));
        let (l, r) = sum_identity_second(n, m).unwrap();
        prop_assert!((l - r).abs() <= 1e-12 * r.max(1.0));
    }

    #[test]
    fn exit_recurrence_matches_dense(w in proptest::collection::vec(0.01f64..1.0, 2..8), width in 2i64..60, frac in 0.0f64..1.0) {
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|v| v / total).collect();
        let min = 2 - probs.len() as i64;
        let law = IntegerLaw::new(min, probs).unwrap();
        let start = 1 + ((width - 2) as f64 * frac) as i64;
        let a = exit_probability_exact(&law, 0, width, start).unwrap();
        let b = exit_probability_dense(&law, 0, width, start).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    // the linear system is ill-conditioned when g spans (0, 1) widely, so
    // agreement is checked on moderate chains only
    #[test]
    fn resistance_ratio_equals_linear_solve(g in proptest::collection::vec(0.2f64..0.8, 1..60), pick in 0.0f64..1.0) {
        let c = BirthDeathChain::new(-3, g).unwrap();
        let k = c.k_min + ((c.k_max() - c.k_min) as f64 * pick) as i64;
        let a = c.hitting_probability(k).unwrap();
        let b = c.hitting_probability_linear(k).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn hitting_probability_increases_with_start(g in proptest::collection::vec(0.001f64..0.999, 1..60)) {
        let c = BirthDeathChain::new(0, g).unwrap();
        let mut prev = 0.0;
        for k in c.k_min..=c.k_max() {
            let h = c.hitting_probability(k).unwrap();
            prop_assert!(h >= prev && h <= 1.0, "{h} after {prev}");
            prev = h;
        }
    }

    #[test]
    fn config_hash_follows_content(seed in any::<u64>(), threads in 1usize..16) {
        let a = ExperimentConfig { seed, ..Default::default() };
        let b = ExperimentConfig { seed, threads, ..Default::default() };
        prop_assert_eq!(a.hash(), b.hash());
        let text = format!("seed = {seed}\nthreads = {threads}\n");
        prop_assert_eq!(ExperimentConfig::parse_flat(&text).unwrap(), b);
    }
}
