use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resilient_te::fixtures::random_prob_instance;
use resilient_te::prob::{
    benders_run, benders_subproblem, percentile_analysis, solve_direct_mip, BendersOptions, DirectOptions,
    ProbRouting,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flow_percentile_never_exceeds_scenario_percentile(seed in 0u64..10_000, flows in 2usize..=5) {
        let pinst = random_prob_instance(seed, 5, flows, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nq = pinst.scenarios.len();
        let ns = pinst.instance.demands.len();
        let routing = ProbRouting {
            alloc: vec![Vec::new(); nq],
            loss: (0..ns).map(|_| (0..nq).map(|_| rng.gen_range(0.0..=1.0)).collect()).collect(),
        };
        let report = percentile_analysis(&routing, &pinst, pinst.beta).unwrap();
        prop_assert!(report.max_flow_pct_loss <= report.scen_pct_loss + 1e-12);
        prop_assert!(report.max_flow_cvar >= report.max_flow_pct_loss - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cuts_underestimate_subproblems(seed in 0u64..10_000, flows in 2usize..=4) {
        let pinst = random_prob_instance(seed, 5, flows, 8).unwrap();
        let run = benders_run(&pinst, &BendersOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let q = rng.gen_range(0..pinst.scenarios.len());
            let z: Vec<bool> = (0..flows).map(|_| rng.gen_bool(0.6)).collect();
            let alpha = benders_subproblem(&pinst, q, &z).unwrap().alpha;
            for cut in run.state.cuts.iter().filter(|c| c.scenario == q) {
                prop_assert!(cut.eval_column(&z) <= alpha + 1e-7, "cut {} above value {alpha}", cut.eval_column(&z));
            }
        }
    }

    #[test]
    fn pruning_does_not_change_the_optimum(seed in 0u64..10_000, flows in 2usize..=4) {
        let pinst = random_prob_instance(seed, 5, flows, 10).unwrap();
        let pruned = benders_run(&pinst, &BendersOptions::default()).unwrap();
        let full = benders_run(
            &pinst,
            &BendersOptions {
                prune_perfect: false,
                fix_disconnected: false,
                ..Default::default()
            },
        )
        .unwrap();
        prop_assert!(pruned.state.converged && full.state.converged);
        prop_assert!((pruned.state.incumbent - full.state.incumbent).abs() <= 1e-6);
    }

    #[test]
    fn benders_matches_direct(seed in 0u64..10_000, flows in 2usize..=4) {
        let pinst = random_prob_instance(seed, 5, flows, 10).unwrap();
        let direct = solve_direct_mip(&pinst, &DirectOptions::default()).unwrap();
        let run = benders_run(&pinst, &BendersOptions::default()).unwrap();
        prop_assert!(run.state.converged);
        prop_assert!((direct.alpha - run.state.incumbent).abs() <= 1e-6, "direct {} benders {}", direct.alpha, run.state.incumbent);
        prop_assert!(run.state.lower_bound <= direct.alpha + 1e-6);
        let reported = percentile_analysis(&run.routing, &pinst, pinst.beta).unwrap().threshold_excess;
        prop_assert!((reported - run.state.incumbent).abs() <= 1e-9);
    }
}
