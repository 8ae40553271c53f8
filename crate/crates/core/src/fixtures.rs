//! Small hand-encoded instances used by tests, the CLI and the acceptance
//! suite.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prob::{connected_selection, enumerate_prob_scenarios, ProbabilisticInstance};
use crate::net::{Condition, FlowDemand, Link, LogicalSequence, NetworkInstance, NodeId, Topology, Tunnel};

fn inst(nodes: &[&str], links: Vec<Link>, demands: Vec<FlowDemand>, tunnels: Vec<Tunnel>) -> NetworkInstance {
    NetworkInstance {
        topology: Topology::new(nodes, links),
        demands,
        tunnels,
        logical_sequences: Vec::new(),
        conditions: Vec::new(),
    }
}

/// Four s-t tunnels; T3 and T4 share link 3-t, T4 also uses 3-4.
/// Demand s→t = 1.
pub fn four_tunnel() -> NetworkInstance {
    inst(
        &["s", "1", "2", "3", "4", "t"],
        vec![
            Link::new("s-1", "s", "1", 1.0),
            Link::new("1-t", "1", "t", 1.0),
            Link::new("s-2", "s", "2", 1.0),
            Link::new("2-t", "2", "t", 1.0),
            Link::new("s-3", "s", "3", 0.5),
            Link::new("3-t", "3", "t", 1.0),
            Link::new("s-4", "s", "4", 0.5),
            Link::new("3-4", "3", "4", 0.5),
        ],
        vec![FlowDemand::new("st", "s", "t", 1.0)],
        vec![
            Tunnel::new("T1", "s", "t", &["s-1", "1-t"]),
            Tunnel::new("T2", "s", "t", &["s-2", "2-t"]),
            Tunnel::new("T3", "s", "t", &["s-3", "3-t"]),
            Tunnel::new("T4", "s", "t", &["s-4", "3-4", "3-t"]),
        ],
    )
}

/// [`four_tunnel`] with only the three disjoint tunnels T1..T3.
pub fn four_tunnel_first_three() -> NetworkInstance {
    let mut i = four_tunnel();
    i.tunnels.truncate(3);
    i
}

/// Three parallel s-u links of capacity 1/3 followed by two parallel u-t
/// links of capacity 1. Carries all six s-t tunnels, per-link s→u and u→t
/// tunnels and the logical sequence (s, u, t).
pub fn parallel() -> NetworkInstance {
    let third = 1.0 / 3.0;
    let su = ["e1", "e2", "e3"];
    let ut = ["e4", "e5"];
    let mut tunnels = Vec::new();
    for a in su {
        for b in ut {
            tunnels.push(Tunnel::new(&format!("st-{a}-{b}"), "s", "t", &[a, b]));
        }
    }
    for a in su {
        tunnels.push(Tunnel::new(&format!("su-{a}"), "s", "u", &[a]));
    }
    for b in ut {
        tunnels.push(Tunnel::new(&format!("ut-{b}"), "u", "t", &[b]));
    }
    let mut i = inst(
        &["s", "u", "t"],
        vec![
            Link::new("e1", "s", "u", third),
            Link::new("e2", "s", "u", third),
            Link::new("e3", "s", "u", third),
            Link::new("e4", "u", "t", 1.0),
            Link::new("e5", "u", "t", 1.0),
        ],
        vec![FlowDemand::new("st", "s", "t", 1.0)],
        tunnels,
    );
    i.logical_sequences.push(LogicalSequence::new("sut", &["s", "u", "t"], None));
    i
}

/// Chain s0..s_m with `p` parallel links of capacity 1/p on the first hop
/// and `n` parallel links of capacity 1 on each later hop. Carries every
/// s0→s_m tunnel, one tunnel per link for each hop pair, and the logical
/// sequence (s0, …, s_m). Demand s0→s_m = 1.
pub fn generalized_family(p: usize, n: usize, m: usize) -> Result<NetworkInstance> {
    if n < 2 || p < n || m < 2 {
        return Err(Error::InvalidParameter(format!(
            "generalized family needs p >= n >= 2 and m >= 2, got p={p} n={n} m={m}"
        )));
    }
    let nodes: Vec<String> = (0..=m).map(|i| format!("s{i}")).collect();
    let node_refs: Vec<&str> = nodes.iter().map(String::as_str).collect();
    let mut links = Vec::new();
    let mut hop_links: Vec<Vec<String>> = Vec::new();
    for h in 0..m {
        let (count, cap) = if h == 0 { (p, 1.0 / p as f64) } else { (n, 1.0) };
        let ids: Vec<String> = (0..count).map(|j| format!("s{h}-s{}#{j}", h + 1)).collect();
        for id in &ids {
            links.push(Link::new(id, &nodes[h], &nodes[h + 1], cap));
        }
        hop_links.push(ids);
    }
    let mut tunnels = Vec::new();
    // Every combination of one link per hop, in lexicographic order.
    let mut choice = vec![0usize; m];
    loop {
        let path: Vec<&str> = choice.iter().enumerate().map(|(h, &j)| hop_links[h][j].as_str()).collect();
        let id = format!("t{}", choice.iter().map(|j| j.to_string()).collect::<Vec<_>>().join("."));
        tunnels.push(Tunnel::new(&id, &nodes[0], &nodes[m], &path));
        let mut h = m;
        loop {
            if h == 0 {
                break;
            }
            h -= 1;
            choice[h] += 1;
            if choice[h] < hop_links[h].len() {
                break;
            }
            choice[h] = 0;
            if h == 0 {
                h = usize::MAX;
                break;
            }
        }
        if h == usize::MAX {
            break;
        }
    }
    for (h, ids) in hop_links.iter().enumerate() {
        for id in ids {
            tunnels.push(Tunnel::new(&format!("seg-{id}"), &nodes[h], &nodes[h + 1], &[id.as_str()]));
        }
    }
    let mut i = inst(
        &node_refs,
        links,
        vec![FlowDemand::new("f", &nodes[0], &nodes[m], 1.0)],
        tunnels,
    );
    i.logical_sequences.push(LogicalSequence::new("chain", &node_refs, None));
    Ok(i)
}

/// Hint example: s reaches t through relays 1-5, 2-6 and 3-7, and node 4
/// connects to s and to 1, 2, 3. Links at s and at 4 have capacity 0.5, the
/// rest capacity 1. Carries the six s→t tunnels, four s→4 tunnels, three
/// 4→t tunnels and the logical sequence (s, 4, t) conditioned on s-4 alive.
pub fn hint() -> NetworkInstance {
    let mut links = Vec::new();
    for (i, r) in [("1", "5"), ("2", "6"), ("3", "7")] {
        links.push(Link::new(&format!("s-{i}"), "s", i, 0.5));
        links.push(Link::new(&format!("{i}-{r}"), i, r, 1.0));
        links.push(Link::new(&format!("{r}-t"), r, "t", 1.0));
        links.push(Link::new(&format!("4-{i}"), "4", i, 0.5));
    }
    links.push(Link::new("s-4", "s", "4", 0.5));
    let mut tunnels = Vec::new();
    for (i, r) in [("1", "5"), ("2", "6"), ("3", "7")] {
        let tail = [format!("{i}-{r}"), format!("{r}-t")];
        tunnels.push(Tunnel::new(
            &format!("s-{i}-{r}-t"),
            "s",
            "t",
            &[&format!("s-{i}"), &tail[0], &tail[1]],
        ));
    }
    for (i, r) in [("1", "5"), ("2", "6"), ("3", "7")] {
        let tail = [format!("4-{i}"), format!("{i}-{r}"), format!("{r}-t")];
        tunnels.push(Tunnel::new(
            &format!("s-4-{i}-{r}-t"),
            "s",
            "t",
            &["s-4", &tail[0], &tail[1], &tail[2]],
        ));
    }
    tunnels.push(Tunnel::new("s-4", "s", "4", &["s-4"]));
    for i in ["1", "2", "3"] {
        tunnels.push(Tunnel::new(
            &format!("s-{i}-4"),
            "s",
            "4",
            &[&format!("s-{i}"), &format!("4-{i}")],
        ));
    }
    for (i, r) in [("1", "5"), ("2", "6"), ("3", "7")] {
        tunnels.push(Tunnel::new(
            &format!("4-{i}-{r}-t"),
            "4",
            "t",
            &[&format!("4-{i}"), &format!("{i}-{r}"), &format!("{r}-t")],
        ));
    }
    let mut i = inst(
        &["s", "1", "2", "3", "4", "5", "6", "7", "t"],
        links,
        vec![FlowDemand::new("st", "s", "t", 1.0)],
        tunnels,
    );
    i.conditions.push(Condition::new("s-4-alive", &["s-4"], &[]));
    i.logical_sequences
        .push(LogicalSequence::new("s4t", &["s", "4", "t"], Some("s-4-alive")));
    i
}

/// Four-node realization example with logical sequences (A,C,D) and
/// (A,D,B), and optionally (D,A,B). Demand A→B = 1, plus D→B = 1 when the
/// third sequence is included.
pub fn realization(with_third: bool) -> NetworkInstance {
    let mut i = inst(
        &["A", "B", "C", "D"],
        vec![
            Link::new("AC", "A", "C", 1.0),
            Link::new("CD", "C", "D", 1.0),
            Link::new("AD", "A", "D", 2.0),
            Link::new("DB", "D", "B", 1.0),
            Link::new("AB", "A", "B", 1.0),
        ],
        vec![FlowDemand::new("AB", "A", "B", 1.0)],
        vec![
            Tunnel::new("T1", "A", "C", &["AC"]),
            Tunnel::new("T2", "C", "D", &["CD"]),
            Tunnel::new("T3", "A", "D", &["AD"]),
            Tunnel::new("T4", "D", "A", &["AD"]),
            Tunnel::new("T5", "D", "B", &["DB"]),
            Tunnel::new("T6", "A", "B", &["AB"]),
        ],
    );
    i.logical_sequences.push(LogicalSequence::new("L1", &["A", "C", "D"], None));
    i.logical_sequences.push(LogicalSequence::new("L2", &["A", "D", "B"], None));
    if with_third {
        i.logical_sequences.push(LogicalSequence::new("L3", &["D", "A", "B"], None));
        i.demands.push(FlowDemand::new("DB", "D", "B", 1.0));
    }
    i
}

fn with_prob(mut link: Link, p: f64) -> Link {
    link.fail_prob = Some(p);
    link
}

/// Square A-B-C-D-A with unit capacities; AD fails with probability 0.01,
/// the other links with 0.001. f1: A→C over ABC or ADC, f2: A→D over AD or
/// ABCD, both with demand 1.
pub fn flow_example() -> NetworkInstance {
    inst(
        &["A", "B", "C", "D"],
        vec![
            with_prob(Link::new("AB", "A", "B", 1.0), 0.001),
            with_prob(Link::new("BC", "B", "C", 1.0), 0.001),
            with_prob(Link::new("CD", "C", "D", 1.0), 0.001),
            with_prob(Link::new("AD", "A", "D", 1.0), 0.01),
        ],
        vec![FlowDemand::new("f1", "A", "C", 1.0), FlowDemand::new("f2", "A", "D", 1.0)],
        vec![
            Tunnel::new("ABC", "A", "C", &["AB", "BC"]),
            Tunnel::new("ADC", "A", "C", &["AD", "CD"]),
            Tunnel::new("AD", "A", "D", &["AD"]),
            Tunnel::new("ABCD", "A", "D", &["AB", "BC", "CD"]),
        ],
    )
}

/// [`flow_example`] with AD capacity `n` and f2 demand `n`.
pub fn flow_example_scaled(n: f64) -> NetworkInstance {
    let mut i = flow_example();
    i.topology.links[3].capacity = n;
    i.demands[1].demand = n;
    i
}

/// Triangle A, B, C with unit capacities and failure probability 0.01 per
/// link. f1: A→B over AB only; f2: A→C over AC or ABC.
pub fn cvar_topo() -> NetworkInstance {
    inst(
        &["A", "B", "C"],
        vec![
            with_prob(Link::new("AB", "A", "B", 1.0), 0.01),
            with_prob(Link::new("AC", "A", "C", 1.0), 0.01),
            with_prob(Link::new("BC", "B", "C", 1.0), 0.01),
        ],
        vec![FlowDemand::new("f1", "A", "B", 1.0), FlowDemand::new("f2", "A", "C", 1.0)],
        vec![
            Tunnel::new("AB", "A", "B", &["AB"]),
            Tunnel::new("AC", "A", "C", &["AC"]),
            Tunnel::new("ABC", "A", "C", &["AB", "BC"]),
        ],
    )
}

/// Knobs for [`random_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomOptions {
    pub nodes: usize,
    /// Links added on top of a random ring through all nodes.
    pub extra_links: usize,
    pub demand_pairs: usize,
    pub tunnels_per_pair: usize,
    /// Two-segment sequences `(s, m, t)` over demand pairs.
    pub sequences: usize,
    /// Conditional copies of sequences, each conditioned on one link being
    /// dead; the unconditional original is always kept.
    pub conditional: usize,
}

impl Default for RandomOptions {
    fn default() -> Self {
        RandomOptions {
            nodes: 6,
            extra_links: 3,
            demand_pairs: 2,
            tunnels_per_pair: 3,
            sequences: 2,
            conditional: 1,
        }
    }
}

/// Simple paths from `src` to `dst` as link indices, shortest first and then
/// by node sequence, at most `limit` of them.
pub fn simple_paths(topo: &Topology, src: &NodeId, dst: &NodeId, limit: usize) -> Vec<Vec<usize>> {
    let mut adj: BTreeMap<&NodeId, Vec<(&NodeId, usize)>> = BTreeMap::new();
    for (e, l) in topo.links.iter().enumerate() {
        adj.entry(&l.endpoints.0).or_default().push((&l.endpoints.1, e));
        adj.entry(&l.endpoints.1).or_default().push((&l.endpoints.0, e));
    }
    for v in adj.values_mut() {
        v.sort();
    }
    let mut found: Vec<(Vec<&NodeId>, Vec<usize>)> = Vec::new();
    let mut stack: Vec<(Vec<&NodeId>, Vec<usize>)> = vec![(vec![src], vec![])];
    while let Some((nodes, links)) = stack.pop() {
        let last = *nodes.last().unwrap();
        if last == dst {
            found.push((nodes, links));
            continue;
        }
        for &(next, e) in adj.get(last).into_iter().flatten() {
            if !nodes.contains(&next) {
                let mut n = nodes.clone();
                n.push(next);
                let mut l = links.clone();
                l.push(e);
                stack.push((n, l));
            }
        }
    }
    found.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(&b.0)).then_with(|| a.1.cmp(&b.1)));
    found.into_iter().take(limit).map(|(_, l)| l).collect()
}

/// Seeded random connected instance with tunnels on demand pairs and on the
/// segments of its sequences.
pub fn random_instance(seed: u64, opts: &RandomOptions) -> NetworkInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = opts.nodes.max(2);
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let caps = [0.5, 1.0, 1.0, 1.5, 2.0];
    // A random ring keeps every instance two-edge-connected.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for w in 0..n {
        let (a, b) = (order[w], order[(w + 1) % n]);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let max_edges = n * (n - 1) / 2;
    let target = (edges.len() + opts.extra_links).min(max_edges);
    while edges.len() < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let links: Vec<Link> = edges
        .iter()
        .map(|&(a, b)| Link::new(&format!("{}-{}", names[a], names[b]), &names[a], &names[b], caps[rng.gen_range(0..caps.len())]))
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut i = inst(&refs, links, Vec::new(), Vec::new());

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut guard = 0;
    while pairs.len() < opts.demand_pairs.min(n * (n - 1)) && guard < 1000 {
        guard += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    for &(a, b) in &pairs {
        let d = [0.5, 1.0, 1.5][rng.gen_range(0..3)];
        i.demands.push(FlowDemand::new(&format!("f{a}-{b}"), &names[a], &names[b], d));
    }

    let mut tunnel_pairs: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
    let mut seqs: Vec<(usize, usize, usize)> = Vec::new();
    if n >= 3 {
        for _ in 0..opts.sequences {
            let (a, b) = pairs[rng.gen_range(0..pairs.len())];
            let m = loop {
                let m = rng.gen_range(0..n);
                if m != a && m != b {
                    break m;
                }
            };
            if !seqs.contains(&(a, m, b)) {
                seqs.push((a, m, b));
                tunnel_pairs.insert((a, m));
                tunnel_pairs.insert((m, b));
            }
        }
    }
    for &(a, b) in &tunnel_pairs {
        let paths = simple_paths(&i.topology, &NodeId::from(names[a].as_str()), &NodeId::from(names[b].as_str()), opts.tunnels_per_pair);
        for (j, p) in paths.into_iter().enumerate() {
            let ids: Vec<&str> = p.iter().map(|&e| i.topology.links[e].id.as_str()).collect();
            let t = Tunnel::new(&format!("t{a}-{b}-{j}"), &names[a], &names[b], &ids);
            i.tunnels.push(t);
        }
    }
    for (q, &(a, m, b)) in seqs.iter().enumerate() {
        i.logical_sequences.push(LogicalSequence::new(&format!("q{q}"), &[&names[a], &names[m], &names[b]], None));
    }
    for c in 0..opts.conditional.min(seqs.len()) {
        let (a, m, b) = seqs[c];
        let e = rng.gen_range(0..i.topology.links.len());
        let link = i.topology.links[e].id.to_string();
        let id = format!("c{c}");
        i.conditions.push(Condition::new(&id, &[], &[&link]));
        i.logical_sequences.push(LogicalSequence::new(&format!("q{c}-if-{link}"), &[&names[a], &names[m], &names[b]], Some(&id)));
    }
    i
}

/// Seeded probabilistic instance: a random ring-based network with
/// `flows` demands, link failure probabilities in [0.005, 0.05], the
/// `scenarios` most likely failure sets, and a target somewhat below the
/// smallest per-flow connected mass that leaves room to drop a few scenarios.
pub fn random_prob_instance(seed: u64, nodes: usize, flows: usize, scenarios: usize) -> Result<ProbabilisticInstance> {
    let mut inst = random_instance(
        seed,
        &RandomOptions {
            nodes,
            extra_links: nodes / 2,
            demand_pairs: flows,
            tunnels_per_pair: 2,
            sequences: 0,
            conditional: 0,
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for l in &mut inst.topology.links {
        l.fail_prob = Some(rng.gen_range(0.005..0.05));
    }
    let mut all = enumerate_prob_scenarios(&inst.topology, 1e-7)?;
    all.sort_by(|a, b| b.prob.unwrap().total_cmp(&a.prob.unwrap()));
    all.truncate(scenarios.max(1));
    let mut pinst = ProbabilisticInstance::with_scenarios(inst, all, 0.5)?;
    let conn = connected_selection(&pinst)?;
    let probs = pinst.probs();
    let worst = conn
        .coverage(&probs)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    pinst.beta = (worst - 0.04).clamp(0.5, 0.999);
    if worst < pinst.beta {
        pinst.beta = worst;
    }
    Ok(pinst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::validate_instance;

    #[test]
    fn fixtures_are_valid() {
        let all = vec![
            four_tunnel(),
            four_tunnel_first_three(),
            parallel(),
            generalized_family(3, 2, 2).unwrap(),
            generalized_family(9, 3, 3).unwrap(),
            hint(),
            realization(false),
            realization(true),
            flow_example(),
            flow_example_scaled(3.0),
            cvar_topo(),
        ];
        for i in &all {
            assert!(validate_instance(i).is_empty(), "{:?}", validate_instance(i));
        }
    }

    #[test]
    fn generalized_family_shape() {
        let g = generalized_family(9, 3, 3).unwrap();
        assert_eq!(g.topology.links.len(), 15);
        assert_eq!(g.tunnels.iter().filter(|t| t.src.as_str() == "s0" && t.dst.as_str() == "s3").count(), 81);
        assert!(generalized_family(2, 3, 2).is_err());
        assert!(generalized_family(3, 2, 1).is_err());
    }

    #[test]
    fn random_instances_are_valid_and_seeded() {
        for seed in 0..20 {
            let a = random_instance(seed, &RandomOptions::default());
            assert!(validate_instance(&a).is_empty(), "seed {seed}: {:?}", validate_instance(&a));
            assert_eq!(a, random_instance(seed, &RandomOptions::default()));
            assert!(!a.tunnels.is_empty());
        }
    }

    #[test]
    fn simple_paths_are_ordered() {
        let four = four_tunnel();
        let paths = simple_paths(&four.topology, &"s".into(), &"t".into(), 10);
        assert_eq!(paths.len(), 4);
        assert_eq!(paths[0].len(), 2);
        assert_eq!(paths[3].len(), 3);
    }
}
