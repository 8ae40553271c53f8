use std::collections::BTreeMap;

use proptest::prelude::*;

use resilient_te::fixtures::{random_instance, RandomOptions};
use resilient_te::net::{enumerate_scenarios, NetworkInstance};
use resilient_te::realize::{check_topological_sort, extract_routing, proportional_routing, ScenarioRouting, TopoOrder};
use resilient_te::robust::{solve_robust, FailureSpec, Mode, ModelKind, Objective, ReservationPlan};

fn instance(seed: u64) -> NetworkInstance {
    random_instance(
        seed,
        &RandomOptions {
            sequences: 3,
            ..Default::default()
        },
    )
}

fn plan(inst: &NetworkInstance, model: ModelKind, k: usize) -> ReservationPlan {
    solve_robust(inst, model, &FailureSpec::links(k), Objective::DemandScale, Mode::Dual).unwrap()
}

fn amounts(r: &ScenarioRouting) -> BTreeMap<(String, String), f64> {
    r.flows
        .iter()
        .map(|f| ((f.tunnel.to_string(), f.dest.to_string()), f.amount))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extracted_routings_are_valid(seed in 0u64..10_000, k in 1usize..=2, cls in any::<bool>()) {
        let inst = instance(seed);
        let model = if cls { ModelKind::Cls } else { ModelKind::Ls };
        let plan = plan(&inst, model, k);
        for s in enumerate_scenarios(&inst.topology, k).unwrap() {
            let r = extract_routing(&plan, &inst, &s).unwrap();
            let check = r.check(&plan, &inst).unwrap();
            prop_assert!(check.is_valid(1e-6), "{model} {s}: {check:?}");
            for (pair, got) in &r.delivered {
                let want = plan.scale_of(pair) * inst.demand_by_pair()[pair];
                prop_assert!((got - want).abs() <= 1e-6, "{pair} delivered {got}, reserved {want}");
            }
        }
    }

    #[test]
    fn proportional_matches_extraction_when_sorted(seed in 0u64..10_000, cls in any::<bool>()) {
        let inst = instance(seed);
        let model = if cls { ModelKind::Cls } else { ModelKind::Ls };
        let plan = plan(&inst, model, 1);
        for s in enumerate_scenarios(&inst.topology, 1).unwrap() {
            let order = check_topological_sort(&inst, &inst.logical_sequences, &s, cls).unwrap();
            if !matches!(order, TopoOrder::Sorted(_)) {
                prop_assert!(proportional_routing(&plan, &inst, &s).is_err());
                continue;
            }
            let a = amounts(&extract_routing(&plan, &inst, &s).unwrap());
            let b = amounts(&proportional_routing(&plan, &inst, &s).unwrap());
            let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
            for key in keys {
                let x = a.get(key).copied().unwrap_or(0.0);
                let y = b.get(key).copied().unwrap_or(0.0);
                prop_assert!((x - y).abs() <= 1e-8, "{s} {key:?}: extract {x} proportional {y}");
            }
        }
    }
}
