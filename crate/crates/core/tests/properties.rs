use linksim::channel::{FadingParams, GaussMarkovChannel};
use linksim::config::RunConfig;
use linksim::engine::wilson_interval;
use linksim::harq::{
    average_power, per_packet_average_power, simulate_alg2, simulate_harq_static, HarqConfig, HarqSession,
    PowerController, StaticPowerPolicy,
};
use linksim::numerics::{exp_integral_e1, grid_search, lambert_w, Goal, SearchGrid};
use linksim::rate_adapt::{
    static_throughput, throughput_no_csit, throughput_perfect_csit, FeedbackTiming, QuantizerConfig,
    RateAdaptSession, RateController,
};
use proptest::prelude::*;

fn sorted_thresholds(raw: Vec<f64>) -> Vec<f64> {
    let mut t = raw;
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

proptest! {
    #[test]
    fn lambert_w_back_substitutes(x in 1e-8f64..1e8) {
        let w = lambert_w(x).unwrap();
        prop_assert!(w >= 0.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn e1_is_decreasing_and_positive(x in 1e-6f64..50.0, dx in 1e-6f64..1.0) {
        let a = exp_integral_e1(x).unwrap();
        let b = exp_integral_e1(x + dx).unwrap();
        prop_assert!(a > b);
        prop_assert!(b > 0.0);
    }

    #[test]
    fn no_csit_below_perfect_csit(db in -20.0f64..40.0) {
        let p = 10f64.powf(db / 10.0);
        let lo = throughput_no_csit(p).unwrap();
        let hi = throughput_perfect_csit(p).unwrap();
        prop_assert!(lo > 0.0 && lo < hi);
        prop_assert!(hi <= (1.0 + p).ln());
    }

    #[test]
    fn quantizer_between_zero_and_perfect_csit(
        raw in prop::collection::vec(1e-3f64..8.0, 1..5),
        db in -10.0f64..30.0,
    ) {
        let p = 10f64.powf(db / 10.0);
        let q = QuantizerConfig::new(sorted_thresholds(raw), p).unwrap();
        let eta = static_throughput(&q);
        prop_assert!(eta >= 0.0);
        prop_assert!(eta <= throughput_perfect_csit(p).unwrap());
    }

    #[test]
    fn quantizer_region_matches_thresholds(
        raw in prop::collection::vec(1e-3f64..8.0, 1..5),
        g in 0.0f64..10.0,
    ) {
        let t = sorted_thresholds(raw);
        let q = QuantizerConfig::new(t.clone(), 1.0).unwrap();
        let region = q.region(g);
        prop_assert_eq!(region, t[1..].iter().filter(|&&x| x <= g).count());
    }

    #[test]
    fn wilson_interval_brackets_the_mle(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((trials as f64) * frac).round() as u64;
        let (lo, hi) = wilson_interval(k, trials, 1.96);
        let mle = k as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= mle + 1e-15);
        prop_assert!(mle <= hi + 1e-15 && hi <= 1.0);
    }

    #[test]
    fn grid_search_finds_quadratic_minimum(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let grid = SearchGrid::new(-4.0, 4.0, 21).unwrap().with_refinement(6);
        let out = grid_search(&[grid.clone(), grid], Goal::Minimize, |x| {
            Some((x[0] - a).powi(2) + 2.0 * (x[1] - b).powi(2))
        }).unwrap();
        prop_assert!((out.point[0] - a).abs() < 1e-3);
        prop_assert!((out.point[1] - b).abs() < 1e-3);
        prop_assert!(out.round_values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn controller_power_stays_in_bounds(
        steps in prop::collection::vec((1usize..=3, any::<bool>()), 1..400),
        d in prop::collection::vec(0.0f64..0.99, 3),
        d_up in prop::collection::vec(0.0f64..20.0, 3),
    ) {
        let (floor, cap) = (1e-2, 1e3);
        let mut c = PowerController::with_bounds(10.0, d, d_up, floor, cap).unwrap();
        for (round, decoded) in steps {
            if decoded { c.on_decode(round) } else { let _ = c.on_failure(round); }
            prop_assert!(c.power() >= floor && c.power() <= cap);
        }
    }

    #[test]
    fn config_round_trips_through_toml(
        beta in 0.0f64..=1.0,
        snr in -10.0f64..30.0,
        eps in 1e-4f64..0.5,
        rounds in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.beta = beta;
        cfg.link.snr_db = snr;
        cfg.harq.outage_target = eps;
        cfg.harq.max_rounds = rounds;
        cfg.run.seed = Some(seed);
        let text = cfg.to_toml_string();
        prop_assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gain_is_unit_mean(beta in 0.0f64..0.95, seed in any::<u64>()) {
        let mut ch = GaussMarkovChannel::new(FadingParams::new(beta, seed).unwrap());
        let n = 40_000;
        let mean = (0..n).map(|_| ch.next_gain()).sum::<f64>() / n as f64;
        prop_assert!((mean - 1.0).abs() < 0.12, "{}", mean);
    }

    #[test]
    fn rate_never_below_floor(
        beta in 0.0f64..=1.0,
        rate in 0.05f64..8.0,
        delta in 0.0f64..0.9,
        floor in 1e-3f64..0.05,
        seed in any::<u64>(),
    ) {
        let c = RateController::with_floor(rate, delta, FeedbackTiming::SameBlock, floor).unwrap();
        let session = RateAdaptSession::new(FadingParams::new(beta, seed).unwrap(), 10.0, c);
        for slot in session.take(2_000) {
            prop_assert!(slot.rate >= floor);
        }
    }

    #[test]
    fn harq_static_invariants(
        beta in 0.0f64..=1.0,
        powers in prop::collection::vec(0.5f64..100.0, 1..4),
        rate in 0.2f64..3.0,
        seed in any::<u64>(),
    ) {
        let m = powers.len();
        let cfg = HarqConfig::new(rate, m, 0.01).unwrap();
        let policy = StaticPowerPolicy::new(powers.clone()).unwrap();
        let params = FadingParams::new(beta, seed).unwrap();
        let sim = simulate_harq_static(params, &cfg, &policy, 5_000).unwrap();

        prop_assert_eq!(sim.stop_histogram.len(), m);
        prop_assert!((sim.stop_histogram.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(sim.outage_prob <= sim.stop_histogram[m - 1] + 1e-15);
        prop_assert!(sim.outage_interval.0 <= sim.outage_prob && sim.outage_prob <= sim.outage_interval.1);

        let session = HarqSession::with_policy(params, cfg, policy.clone()).unwrap();
        let traces: Vec<_> = session.take(5_000).collect();
        let energy: f64 = traces.iter().flat_map(|t| t.powers.iter()).sum();
        let slots: u64 = traces.iter().map(|t| t.rounds() as u64).sum();
        prop_assert_eq!(slots, sim.slots);
        prop_assert!((energy / slots as f64 - sim.avg_power).abs() <= 1e-12 * sim.avg_power);
        prop_assert!((average_power(&policy, &sim.stop_histogram) - sim.avg_power).abs() <= 1e-9 * sim.avg_power);
        prop_assert!(per_packet_average_power(&policy, &sim.stop_histogram).is_finite());

        for t in &traces {
            prop_assert!(t.accumulated_snr.windows(2).all(|w| w[1] >= w[0]));
            match t.decoded_round {
                Some(r) => prop_assert_eq!(r, t.rounds()),
                None => prop_assert_eq!(t.rounds(), m),
            }
        }
    }

    #[test]
    fn degenerate_controller_matches_static(beta in 0.0f64..=1.0, p in 1.0f64..50.0, seed in any::<u64>()) {
        let cfg = HarqConfig::new(1.0, 2, 0.01).unwrap();
        let params = FadingParams::new(beta, seed).unwrap();
        let a = simulate_harq_static(params, &cfg, &StaticPowerPolicy::uniform(p, 2).unwrap(), 3_000).unwrap();
        let b = simulate_alg2(params, &cfg, &PowerController::degenerate(p, 2).unwrap(), 3_000).unwrap();
        prop_assert_eq!(a, b);
    }
}
