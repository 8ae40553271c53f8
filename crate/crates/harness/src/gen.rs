//! Instance generators: gravity demands, disjoint-first tunnel selection and
//! sub-link splitting.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use resilient_te::net::{FlowDemand, Link, LinkId, NetworkInstance, NodeId, Scenario, Topology, Tunnel};
use resilient_te::oracle::solve_mcf;
use resilient_te::robust::Objective;
use resilient_te::Error as CoreError;

use crate::error::{HarnessError, Result};

/// Node weights for the gravity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GravityWeights {
    #[default]
    Degree,
    Uniform,
}

/// Upper bound on simple paths examined once disjoint paths run out.
pub const PATH_ENUMERATION_LIMIT: usize = 100_000;

fn adjacency(topo: &Topology) -> BTreeMap<&NodeId, Vec<(&NodeId, usize)>> {
    let mut adj: BTreeMap<&NodeId, Vec<(&NodeId, usize)>> = topo.nodes.iter().map(|n| (n, Vec::new())).collect();
    for (e, l) in topo.links.iter().enumerate() {
        adj.entry(&l.endpoints.0).or_default().push((&l.endpoints.1, e));
        adj.entry(&l.endpoints.1).or_default().push((&l.endpoints.0, e));
    }
    for v in adj.values_mut() {
        v.sort();
    }
    adj
}

/// Nodes that cannot be reached from the smallest node id.
fn unreachable_nodes(topo: &Topology) -> Vec<NodeId> {
    let adj = adjacency(topo);
    let Some(start) = topo.nodes.iter().next() else {
        return Vec::new();
    };
    let mut seen: BTreeSet<&NodeId> = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &(m, _) in &adj[n] {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    topo.nodes.iter().filter(|n| !seen.contains(n)).cloned().collect()
}

/// Gravity-model demands over every ordered node pair, `d_st ∝ w_s·w_t`,
/// scaled so the no-failure maximum link utilization (the inverse of the
/// optimal demand scale) equals a target drawn uniformly from `mlu_range`.
pub fn generate_gravity_demands(
    topo: &Topology,
    weights: GravityWeights,
    mlu_range: (f64, f64),
    seed: u64,
) -> Result<Vec<FlowDemand>> {
    let (lo, hi) = mlu_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(CoreError::InvalidParameter(format!("utilization range [{lo}, {hi}]")).into());
    }
    if topo.nodes.len() < 2 {
        return Err(CoreError::InvalidParameter("gravity demands need at least two nodes".into()).into());
    }
    let missing = unreachable_nodes(topo);
    if !missing.is_empty() {
        let names: Vec<&str> = missing.iter().map(|n| n.as_str()).collect();
        return Err(HarnessError::Disconnected(names.join(", ")));
    }
    let mut w: BTreeMap<&NodeId, f64> = topo.nodes.iter().map(|n| (n, 1.0)).collect();
    if weights == GravityWeights::Degree {
        w.values_mut().for_each(|v| *v = 0.0);
        for l in &topo.links {
            for end in [&l.endpoints.0, &l.endpoints.1] {
                if let Some(v) = w.get_mut(end) {
                    *v += 1.0;
                }
            }
        }
    }
    let total: f64 = w.values().sum();
    let mut demands = Vec::new();
    for (s, ws) in &w {
        for (t, wt) in &w {
            if s != t {
                let d = ws * wt / (total * total);
                demands.push(FlowDemand::new(&format!("g-{s}-{t}"), s.as_str(), t.as_str(), d));
            }
        }
    }
    let probe = NetworkInstance {
        topology: topo.clone(),
        demands: demands.clone(),
        ..Default::default()
    };
    let scale = solve_mcf(&probe, &Scenario::none(), Objective::DemandScale)?.objective;
    let target = if lo == hi {
        lo
    } else {
        ChaCha8Rng::seed_from_u64(seed).gen_range(lo..=hi)
    };
    // Demands d·c have optimal scale z/c, so utilization c/z.
    let c = target * scale;
    for d in &mut demands {
        d.demand *= c;
    }
    Ok(demands)
}

/// Shortest path in hops from `src` to `dst` avoiding `banned` links; ties
/// go to the lexicographically smallest node sequence. Returns link indices.
fn shortest_avoiding(topo: &Topology, src: &NodeId, dst: &NodeId, banned: &BTreeSet<usize>) -> Option<Vec<usize>> {
    let adj = adjacency(topo);
    let mut dist: BTreeMap<&NodeId, usize> = BTreeMap::from([(dst, 0)]);
    let mut queue = VecDeque::from([dst]);
    while let Some(n) = queue.pop_front() {
        let d = dist[n];
        for &(m, e) in &adj[n] {
            if !banned.contains(&e) && !dist.contains_key(m) {
                dist.insert(m, d + 1);
                queue.push_back(m);
            }
        }
    }
    dist.get(src)?;
    let mut path = Vec::new();
    let mut at = src;
    while at != dst {
        let want = dist[at] - 1;
        let &(next, e) = adj[at]
            .iter()
            .filter(|(m, e)| !banned.contains(e) && dist.get(m) == Some(&want))
            .min_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)))
            .expect("a neighbor one hop closer exists");
        path.push(e);
        at = next;
    }
    Some(path)
}

fn node_sequence<'a>(topo: &'a Topology, src: &'a NodeId, path: &[usize]) -> Vec<&'a NodeId> {
    let mut out = vec![src];
    for &e in path {
        let last = *out.last().unwrap();
        out.push(topo.links[e].other(last).expect("contiguous path"));
    }
    out
}

/// Up to `count` tunnels from `src` to `dst`: link-disjoint shortest paths
/// first, then paths sharing the fewest links with those already chosen.
/// Ties go to fewer hops, then the smaller node sequence. Tunnels are named
/// `{src}-{dst}-{j}`; a disconnected pair yields no tunnels.
pub fn select_tunnels(topo: &Topology, src: &NodeId, dst: &NodeId, count: usize) -> Vec<Tunnel> {
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    if src == dst || !topo.nodes.contains(src) || !topo.nodes.contains(dst) {
        return Vec::new();
    }
    while chosen.len() < count {
        match shortest_avoiding(topo, src, dst, &used) {
            Some(p) => {
                used.extend(p.iter().copied());
                chosen.push(p);
            }
            None => break,
        }
    }
    if chosen.len() < count {
        let mut rest: Vec<(usize, Vec<usize>)> = all_simple_paths(topo, src, dst)
            .into_iter()
            .filter(|p| !chosen.contains(p))
            .map(|p| (0, p))
            .collect();
        while chosen.len() < count && !rest.is_empty() {
            for (overlap, p) in rest.iter_mut() {
                *overlap = p.iter().filter(|e| used.contains(e)).count();
            }
            let best = (0..rest.len())
                .min_by(|&a, &b| {
                    let (oa, pa) = &rest[a];
                    let (ob, pb) = &rest[b];
                    oa.cmp(ob)
                        .then(pa.len().cmp(&pb.len()))
                        .then_with(|| node_sequence(topo, src, pa).cmp(&node_sequence(topo, src, pb)))
                        .then_with(|| pa.cmp(pb))
                })
                .expect("non-empty");
            let (_, p) = rest.swap_remove(best);
            used.extend(p.iter().copied());
            chosen.push(p);
        }
    }
    chosen
        .into_iter()
        .enumerate()
        .map(|(j, p)| {
            let ids: Vec<&str> = p.iter().map(|&e| topo.links[e].id.as_str()).collect();
            Tunnel::new(&format!("{src}-{dst}-{j}"), src.as_str(), dst.as_str(), &ids)
        })
        .collect()
}

fn all_simple_paths(topo: &Topology, src: &NodeId, dst: &NodeId) -> Vec<Vec<usize>> {
    let adj = adjacency(topo);
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<&NodeId>, Vec<usize>)> = vec![(vec![src], Vec::new())];
    while let Some((nodes, links)) = stack.pop() {
        if out.len() >= PATH_ENUMERATION_LIMIT {
            break;
        }
        let last = *nodes.last().unwrap();
        if last == dst {
            out.push(links);
            continue;
        }
        for &(next, e) in &adj[last] {
            if !nodes.contains(&next) {
                let mut n = nodes.clone();
                n.push(next);
                let mut l = links.clone();
                l.push(e);
                stack.push((n, l));
            }
        }
    }
    out
}

/// Sub-link ids for a link: the first one inherits every reference.
pub fn sublink_ids(id: &LinkId) -> (LinkId, LinkId) {
    (format!("{id}/a").into(), format!("{id}/b").into())
}

/// Each link becomes two parallel links `{id}/a` and `{id}/b` with half
/// the capacity and the same failure probability.
pub fn split_sublinks(topo: &Topology) -> Topology {
    let mut links = Vec::with_capacity(2 * topo.links.len());
    for l in &topo.links {
        let (a, b) = sublink_ids(&l.id);
        for id in [a, b] {
            links.push(Link {
                id,
                endpoints: l.endpoints.clone(),
                capacity: l.capacity / 2.0,
                fail_prob: l.fail_prob,
            });
        }
    }
    Topology {
        nodes: topo.nodes.clone(),
        links,
    }
}

/// [`split_sublinks`] on an instance; tunnels, conditions and scenarios that
/// name an old link are rewritten to its `/a` sub-link.
pub fn split_instance(inst: &NetworkInstance, scenarios: &[Scenario]) -> (NetworkInstance, Vec<Scenario>) {
    let to_a = |id: &LinkId| sublink_ids(id).0;
    let mut out = inst.clone();
    out.topology = split_sublinks(&inst.topology);
    for t in &mut out.tunnels {
        t.path = t.path.iter().map(to_a).collect();
    }
    for c in &mut out.conditions {
        c.alive_links = c.alive_links.iter().map(to_a).collect();
        c.dead_links = c.dead_links.iter().map(to_a).collect();
    }
    let scenarios = scenarios
        .iter()
        .map(|s| Scenario {
            failed_links: s.failed_links.iter().map(to_a).collect(),
            prob: s.prob,
        })
        .collect();
    (out, scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use resilient_te::fixtures;
    use resilient_te::net::validate_instance;

    fn cycle4() -> Topology {
        Topology::new(
            &["a", "b", "c", "d"],
            vec![
                Link::new("ab", "a", "b", 1.0),
                Link::new("bc", "b", "c", 1.0),
                Link::new("cd", "c", "d", 1.0),
                Link::new("da", "d", "a", 1.0),
            ],
        )
    }

    #[test]
    fn symmetric_cycle_gets_equal_demands() {
        for w in [GravityWeights::Uniform, GravityWeights::Degree] {
            let d = generate_gravity_demands(&cycle4(), w, (0.6, 0.6), 1).unwrap();
            assert_eq!(d.len(), 12);
            for x in &d {
                assert!((x.demand - d[0].demand).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gravity_hits_target_utilization() {
        let topo = cycle4();
        let d = generate_gravity_demands(&topo, GravityWeights::Degree, (0.5, 0.7), 9).unwrap();
        let inst = NetworkInstance {
            topology: topo,
            demands: d,
            ..Default::default()
        };
        let z = solve_mcf(&inst, &Scenario::none(), Objective::DemandScale).unwrap().objective;
        assert!((0.5 - 1e-9..=0.7 + 1e-9).contains(&(1.0 / z)));
    }

    #[test]
    fn gravity_is_seeded() {
        let a = generate_gravity_demands(&cycle4(), GravityWeights::Degree, (0.5, 0.7), 3).unwrap();
        let b = generate_gravity_demands(&cycle4(), GravityWeights::Degree, (0.5, 0.7), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gravity_rejects_disconnected() {
        let mut topo = cycle4();
        topo.nodes.insert("z".into());
        let err = generate_gravity_demands(&topo, GravityWeights::Degree, (0.5, 0.7), 0).unwrap_err();
        assert_eq!(err.code(), "DISCONNECTED");
    }

    #[test]
    fn three_disjoint_paths() {
        let topo = Topology::new(
            &["s", "x", "y", "z", "t"],
            vec![
                Link::new("sx", "s", "x", 1.0),
                Link::new("xt", "x", "t", 1.0),
                Link::new("sy", "s", "y", 1.0),
                Link::new("yt", "y", "t", 1.0),
                Link::new("sz", "s", "z", 1.0),
                Link::new("zt", "z", "t", 1.0),
                Link::new("xy", "x", "y", 1.0),
            ],
        );
        let t = select_tunnels(&topo, &"s".into(), &"t".into(), 3);
        let paths: Vec<Vec<&str>> = t.iter().map(|t| t.path.iter().map(|l| l.as_str()).collect()).collect();
        assert_eq!(paths, vec![vec!["sx", "xt"], vec!["sy", "yt"], vec!["sz", "zt"]]);
        let one = select_tunnels(&topo, &"s".into(), &"t".into(), 1);
        assert_eq!(one[0].path, t[0].path);
    }

    #[test]
    fn four_tunnel_selection_matches_fixture() {
        let four = fixtures::four_tunnel();
        let got: BTreeSet<Vec<LinkId>> = select_tunnels(&four.topology, &"s".into(), &"t".into(), 4)
            .into_iter()
            .map(|t| t.path)
            .collect();
        let want: BTreeSet<Vec<LinkId>> = four.tunnels.iter().map(|t| t.path.clone()).collect();
        assert_eq!(got, want);
        // Asking for more than exists returns every simple path once.
        assert_eq!(select_tunnels(&four.topology, &"s".into(), &"t".into(), 10).len(), 4);
    }

    #[test]
    fn disconnected_pair_has_no_tunnels() {
        let mut topo = cycle4();
        topo.nodes.insert("z".into());
        assert!(select_tunnels(&topo, &"a".into(), &"z".into(), 2).is_empty());
    }

    #[test]
    fn sublinks_halve_capacity_and_keep_probability() {
        let mut topo = cycle4();
        topo.links[0].fail_prob = Some(0.01);
        let s = split_sublinks(&topo);
        assert_eq!(s.links.len(), 8);
        assert_eq!(s.links[0].id.as_str(), "ab/a");
        assert_eq!(s.links[1].id.as_str(), "ab/b");
        assert_eq!(s.links[0].capacity, 0.5);
        assert_eq!(s.links[1].fail_prob, Some(0.01));
    }

    #[test]
    fn split_rewrites_references_to_first_sublink() {
        let hint = fixtures::hint();
        let (split, scen) = split_instance(&hint, &[Scenario::new(&["s-1"])]);
        assert!(validate_instance(&split).is_empty());
        assert!(split.tunnels.iter().all(|t| t.path.iter().all(|l| l.as_str().ends_with("/a"))));
        assert_eq!(scen[0], Scenario::new(&["s-1/a"]));
    }
}
