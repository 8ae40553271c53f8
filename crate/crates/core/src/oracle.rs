//! Per-scenario optimal multi-commodity flow and the worst case over all
//! scenarios with at most `k` failed links.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, Sense, Status, VarId};
use crate::net::{enumerate_scenarios, IndexedInstance, LinkId, NetworkInstance, NodeId, Pair, Scenario};
use crate::robust::Objective;

pub use crate::fixtures::generalized_family;

/// Flow toward `dest` on one direction of a link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFlow {
    pub link: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub dest: NodeId,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McfResult {
    pub scenario: Scenario,
    pub objective: f64,
    /// Positive per-destination flows.
    pub flows: Vec<EdgeFlow>,
    /// Scale (demand scale) or served fraction (throughput) per demand pair.
    pub satisfied: Vec<(Pair, f64)>,
}

/// Edge-based multi-commodity flow on the links surviving `scenario`, one
/// commodity per destination.
pub fn solve_mcf(inst: &NetworkInstance, scenario: &Scenario, objective: Objective) -> Result<McfResult> {
    let idx = IndexedInstance::new(inst)?;
    let failed = idx.failed_mask(scenario)?;
    let demands: Vec<(Pair, f64)> = idx
        .demand
        .iter()
        .filter(|(_, &d)| d > 0.0)
        .map(|(p, &d)| (p.clone(), d))
        .collect();
    let mut by_dest: BTreeMap<NodeId, Vec<(NodeId, f64, usize)>> = BTreeMap::new();
    for (i, (p, d)) in demands.iter().enumerate() {
        by_dest.entry(p.dst.clone()).or_default().push((p.src.clone(), *d, i));
    }

    let mut lp = LinearProgram::maximize();
    let mut served = Vec::new();
    let scale = match objective {
        Objective::DemandScale => {
            let z = lp.add_nonneg("scale");
            lp.set_objective(vec![(z, 1.0)]);
            Some(z)
        }
        Objective::Throughput => {
            let mut obj = Vec::new();
            for (p, d) in &demands {
                let t = lp.add_var(format!("t_{p}"), Some(0.0), Some(1.0));
                obj.push((t, *d));
                served.push(t);
            }
            lp.set_objective(obj);
            None
        }
    };

    let links = &inst.topology.links;
    let alive: Vec<usize> = (0..links.len()).filter(|&e| !failed[e]).collect();
    // (link, forward?, dest) -> variable
    let mut vars: Vec<(usize, bool, NodeId, VarId)> = Vec::new();
    let mut cap_terms: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
    for dest in by_dest.keys() {
        for &e in &alive {
            for fwd in [true, false] {
                let v = lp.add_nonneg(format!("f_{}_{}_{}", links[e].id, fwd as u8, dest));
                vars.push((e, fwd, dest.clone(), v));
                cap_terms.entry(e).or_default().push((v, 1.0));
            }
        }
    }
    for (e, terms) in cap_terms {
        lp.add_row(format!("cap_{}", links[e].id), terms, Sense::Le, links[e].capacity);
    }
    for (dest, sources) in &by_dest {
        for node in &inst.topology.nodes {
            if node == dest {
                continue;
            }
            let mut coeffs: Vec<(VarId, f64)> = Vec::new();
            for (e, fwd, d, v) in &vars {
                if d != dest {
                    continue;
                }
                let (a, b) = &links[*e].endpoints;
                let (from, to) = if *fwd { (a, b) } else { (b, a) };
                if from == node {
                    coeffs.push((*v, 1.0));
                }
                if to == node {
                    coeffs.push((*v, -1.0));
                }
            }
            for (src, d, i) in sources {
                if src == node {
                    match scale {
                        Some(z) => coeffs.push((z, -d)),
                        None => coeffs.push((served[*i], -d)),
                    }
                }
            }
            if !coeffs.is_empty() {
                lp.add_row(format!("bal_{dest}_{node}"), coeffs, Sense::Eq, 0.0);
            }
        }
    }

    let sol = solve_lp(&lp)?;
    if sol.status != Status::Optimal {
        return Err(Error::InternalModel(format!("multi-commodity flow solved as {:?}", sol.status)));
    }
    let flows = vars
        .iter()
        .filter(|(.., v)| sol.value(*v) > 1e-12)
        .map(|(e, fwd, dest, v)| {
            let (a, b) = &links[*e].endpoints;
            let (from, to) = if *fwd { (a, b) } else { (b, a) };
            EdgeFlow {
                link: links[*e].id.clone(),
                from: from.clone(),
                to: to.clone(),
                dest: dest.clone(),
                amount: sol.value(*v),
            }
        })
        .collect();
    let satisfied = demands
        .iter()
        .enumerate()
        .map(|(i, (p, _))| {
            let v = match scale {
                Some(z) => sol.value(z),
                None => sol.value(served[i]),
            };
            (p.clone(), v)
        })
        .collect();
    Ok(McfResult {
        scenario: scenario.clone(),
        objective: sol.objective,
        flows,
        satisfied,
    })
}

/// Minimum MCF objective over every scenario with at most `k` failed links,
/// with the first minimizing scenario in enumeration order as witness.
pub fn worst_case_optimal(inst: &NetworkInstance, k: usize, objective: Objective) -> Result<(f64, Scenario)> {
    let scenarios = enumerate_scenarios(&inst.topology, k)?;
    let values: Vec<f64> = scenarios
        .par_iter()
        .map(|s| solve_mcf(inst, s, objective).map(|r| r.objective))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] - 1e-9 {
            best = i;
        }
    }
    Ok((values[best], scenarios[best].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::robust::{solve_robust, FailureSpec, Mode, ModelKind};
    use approx::assert_abs_diff_eq;

    fn conservation_residual(inst: &NetworkInstance, r: &McfResult) -> f64 {
        let mut worst: f64 = 0.0;
        let dests: std::collections::BTreeSet<_> = r.flows.iter().map(|f| f.dest.clone()).collect();
        for dest in dests {
            for node in &inst.topology.nodes {
                if *node == dest {
                    continue;
                }
                let out: f64 = r.flows.iter().filter(|f| f.dest == dest && &f.from == node).map(|f| f.amount).sum();
                let inn: f64 = r.flows.iter().filter(|f| f.dest == dest && &f.to == node).map(|f| f.amount).sum();
                let supply: f64 = r
                    .satisfied
                    .iter()
                    .filter(|(p, _)| p.dst == dest && &p.src == node)
                    .map(|(p, v)| v * inst.demand_by_pair()[p])
                    .sum();
                worst = worst.max((out - inn - supply).abs());
            }
        }
        worst
    }

    #[test]
    fn single_scenario_values() {
        let four = fixtures::four_tunnel();
        let r = solve_mcf(&four, &Scenario::new(&["1-t"]), Objective::DemandScale).unwrap();
        assert_abs_diff_eq!(r.objective, 2.0, epsilon = 1e-7);
        assert!(conservation_residual(&four, &r) < 1e-9);

        let par = fixtures::parallel();
        let r = solve_mcf(&par, &Scenario::new(&["e1"]), Objective::DemandScale).unwrap();
        assert_abs_diff_eq!(r.objective, 2.0 / 3.0, epsilon = 1e-7);
    }

    #[test]
    fn no_failure_bounds_every_scenario() {
        let hint = fixtures::hint();
        let base = solve_mcf(&hint, &Scenario::none(), Objective::DemandScale).unwrap().objective;
        for s in enumerate_scenarios(&hint.topology, 1).unwrap() {
            assert!(solve_mcf(&hint, &s, Objective::DemandScale).unwrap().objective <= base + 1e-9);
        }
    }

    #[test]
    fn capacities_hold_per_link() {
        let hint = fixtures::hint();
        let r = solve_mcf(&hint, &Scenario::new(&["s-1"]), Objective::DemandScale).unwrap();
        for l in &hint.topology.links {
            let load: f64 = r.flows.iter().filter(|f| f.link == l.id).map(|f| f.amount).sum();
            assert!(load <= l.capacity + 1e-7);
        }
        assert!(r.flows.iter().all(|f| f.link.as_str() != "s-1"));
    }

    #[test]
    fn throughput_is_capped_by_demand() {
        let mut four = fixtures::four_tunnel();
        assert_abs_diff_eq!(
            solve_mcf(&four, &Scenario::new(&["1-t"]), Objective::Throughput).unwrap().objective,
            1.0,
            epsilon = 1e-7
        );
        four.demands[0].demand = 10.0;
        assert_abs_diff_eq!(
            solve_mcf(&four, &Scenario::new(&["1-t"]), Objective::Throughput).unwrap().objective,
            2.0,
            epsilon = 1e-7
        );
    }

    #[test]
    fn worst_case_values() {
        let four = fixtures::four_tunnel();
        let (v1, _) = worst_case_optimal(&four, 1, Objective::DemandScale).unwrap();
        let (v2, w2) = worst_case_optimal(&four, 2, Objective::DemandScale).unwrap();
        assert_abs_diff_eq!(v1, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(v2, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(
            solve_mcf(&four, &w2, Objective::DemandScale).unwrap().objective,
            1.0,
            epsilon = 1e-6
        );
        let (h, _) = worst_case_optimal(&fixtures::hint(), 2, Objective::DemandScale).unwrap();
        assert_abs_diff_eq!(h, 1.0, epsilon = 1e-6);
        let (p, _) = worst_case_optimal(&fixtures::parallel(), 1, Objective::DemandScale).unwrap();
        assert_abs_diff_eq!(p, 2.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn witness_is_first_minimizer() {
        // Two identical parallel links: both single failures tie.
        let inst = NetworkInstance {
            topology: crate::net::Topology::new(
                &["a", "b"],
                vec![crate::net::Link::new("x", "a", "b", 1.0), crate::net::Link::new("y", "a", "b", 1.0)],
            ),
            demands: vec![crate::net::FlowDemand::new("f", "a", "b", 1.0)],
            ..Default::default()
        };
        let (v, w) = worst_case_optimal(&inst, 1, Objective::DemandScale).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        assert_eq!(w, Scenario::new(&["x"]));
    }

    #[test]
    fn generalized_family_closed_forms() {
        for (p, n, m) in [(3usize, 2usize, 2usize), (9, 3, 3)] {
            let g = generalized_family(p, n, m).unwrap();
            let k = n - 1;
            let (opt, _) = worst_case_optimal(&g, k, Objective::DemandScale).unwrap();
            assert_abs_diff_eq!(opt, 1.0 - (n as f64 - 1.0) / p as f64, epsilon = 1e-6);
            let spec = FailureSpec::links(k);
            let plus = solve_robust(&g, ModelKind::FfcPlus, &spec, Objective::DemandScale, Mode::Dual).unwrap();
            assert_abs_diff_eq!(plus.objective, 1.0 / n as f64, epsilon = 1e-6);
            let ls = solve_robust(&g, ModelKind::Ls, &spec, Objective::DemandScale, Mode::Dual).unwrap();
            assert_abs_diff_eq!(ls.objective, opt, epsilon = 1e-6);
        }
    }
}
