//! Network data model: topology, tunnels, logical sequences, conditions,
//! demands and failure scenarios, plus their status logic.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

id_type!(NodeId);
id_type!(LinkId);
id_type!(TunnelId);
id_type!(LsId);
id_type!(ConditionId);
id_type!(FlowId);

/// Ordered (source, destination) node pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub src: NodeId,
    pub dst: NodeId,
}

impl Pair {
    pub fn new(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Pair {
            src: src.into(),
            dst: dst.into(),
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

/// Undirected link with capacity and an optional failure probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub endpoints: (NodeId, NodeId),
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_prob: Option<f64>,
}

impl Link {
    pub fn new(id: &str, a: &str, b: &str, capacity: f64) -> Self {
        Link {
            id: id.into(),
            endpoints: (a.into(), b.into()),
            capacity,
            fail_prob: None,
        }
    }

    /// The endpoint opposite `node`, if `node` is an endpoint.
    pub fn other(&self, node: &NodeId) -> Option<&NodeId> {
        if &self.endpoints.0 == node {
            Some(&self.endpoints.1)
        } else if &self.endpoints.1 == node {
            Some(&self.endpoints.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: BTreeSet<NodeId>,
    pub links: Vec<Link>,
}

impl Topology {
    pub fn new(nodes: &[&str], links: Vec<Link>) -> Self {
        Topology {
            nodes: nodes.iter().map(|n| NodeId::from(*n)).collect(),
            links,
        }
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.links.iter().find(|l| &l.id == id)
    }

    fn check_link(&self, id: &LinkId) -> Result<()> {
        self.link(id)
            .map(|_| ())
            .ok_or_else(|| Error::UnknownLink(id.to_string()))
    }
}

/// Directed tunnel over an explicit list of links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tunnel {
    pub id: TunnelId,
    pub src: NodeId,
    pub dst: NodeId,
    pub path: Vec<LinkId>,
}

impl Tunnel {
    pub fn new(id: &str, src: &str, dst: &str, path: &[&str]) -> Self {
        Tunnel {
            id: id.into(),
            src: src.into(),
            dst: dst.into(),
            path: path.iter().map(|l| LinkId::from(*l)).collect(),
        }
    }

    pub fn pair(&self) -> Pair {
        Pair::new(self.src.clone(), self.dst.clone())
    }
}

/// Sequence of logical hops; each consecutive hop pair is a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalSequence {
    pub id: LsId,
    pub src: NodeId,
    pub dst: NodeId,
    pub hops: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionId>,
}

impl LogicalSequence {
    pub fn new(id: &str, hops: &[&str], condition: Option<&str>) -> Self {
        LogicalSequence {
            id: id.into(),
            src: hops[0].into(),
            dst: hops[hops.len() - 1].into(),
            hops: hops.iter().map(|h| NodeId::from(*h)).collect(),
            condition: condition.map(ConditionId::from),
        }
    }

    pub fn pair(&self) -> Pair {
        Pair::new(self.src.clone(), self.dst.clone())
    }

    pub fn segments(&self) -> Vec<Pair> {
        self.hops
            .windows(2)
            .map(|w| Pair::new(w[0].clone(), w[1].clone()))
            .collect()
    }
}

/// Activation condition: every alive link up and every dead link down.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: ConditionId,
    #[serde(default)]
    pub alive_links: BTreeSet<LinkId>,
    #[serde(default)]
    pub dead_links: BTreeSet<LinkId>,
}

impl Condition {
    pub fn new(id: &str, alive: &[&str], dead: &[&str]) -> Self {
        Condition {
            id: id.into(),
            alive_links: alive.iter().map(|l| LinkId::from(*l)).collect(),
            dead_links: dead.iter().map(|l| LinkId::from(*l)).collect(),
        }
    }

    pub fn is_unconditional(&self) -> bool {
        self.alive_links.is_empty() && self.dead_links.is_empty()
    }

    /// The single dead link of a "link e is down" condition.
    pub fn single_dead_link(&self) -> Option<&LinkId> {
        if self.alive_links.is_empty() && self.dead_links.len() == 1 {
            self.dead_links.iter().next()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDemand {
    pub flow_id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub demand: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl FlowDemand {
    pub fn new(id: &str, src: &str, dst: &str, demand: f64) -> Self {
        FlowDemand {
            flow_id: id.into(),
            src: src.into(),
            dst: dst.into(),
            demand,
            loss_threshold: None,
            beta: None,
        }
    }

    pub fn pair(&self) -> Pair {
        Pair::new(self.src.clone(), self.dst.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub failed_links: BTreeSet<LinkId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

impl Scenario {
    pub fn new(failed: &[&str]) -> Self {
        Scenario {
            failed_links: failed.iter().map(|l| LinkId::from(*l)).collect(),
            prob: None,
        }
    }

    pub fn none() -> Self {
        Scenario::default()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.failed_links.iter().map(|l| l.as_str()).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

/// Everything a robust model needs: topology, demands, tunnels, logical
/// sequences and the conditions they reference.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub topology: Topology,
    #[serde(default)]
    pub demands: Vec<FlowDemand>,
    #[serde(default)]
    pub tunnels: Vec<Tunnel>,
    #[serde(default)]
    pub logical_sequences: Vec<LogicalSequence>,
    #[serde(default)]
    pub conditions: Vec<Condition>,
}

impl NetworkInstance {
    pub fn condition(&self, id: &ConditionId) -> Option<&Condition> {
        self.conditions.iter().find(|c| &c.id == id)
    }

    /// Aggregate demand per pair; pairs with zero total are omitted.
    pub fn demand_by_pair(&self) -> BTreeMap<Pair, f64> {
        let mut out = BTreeMap::new();
        for d in &self.demands {
            *out.entry(d.pair()).or_insert(0.0) += d.demand;
        }
        out.retain(|_, v| *v > 0.0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticCode {
    UnknownNode,
    UnknownLink,
    UnknownCondition,
    SelfLoop,
    DuplicateLinkId,
    DuplicateTunnelId,
    DuplicateLsId,
    DuplicateConditionId,
    DuplicateFlowId,
    NonpositiveCapacity,
    InvalidFailProb,
    EmptyTunnel,
    TunnelDiscontiguous,
    TunnelEndpointMismatch,
    TunnelRepeatedLink,
    LsTooShort,
    LsEndpointMismatch,
    LsRepeatedHop,
    ConditionOverlap,
    NegativeDemand,
    SelfDemand,
    InvalidThreshold,
    InvalidBeta,
    InvalidScenarioProb,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Matches the serde rendering: CamelCase variant to SCREAMING_SNAKE.
        let debug = format!("{self:?}");
        for (i, c) in debug.chars().enumerate() {
            if c.is_ascii_uppercase() && i > 0 {
                f.write_str("_")?;
            }
            write!(f, "{}", c.to_ascii_uppercase())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// Checks every structural invariant of the instance. One diagnostic per
/// violation; an empty list means the instance is well formed.
pub fn validate_instance(inst: &NetworkInstance) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let mut out = Vec::new();
    let topo = &inst.topology;
    let mut links: HashMap<&LinkId, &Link> = HashMap::new();
    for link in &topo.links {
        if links.insert(&link.id, link).is_some() {
            out.push(Diagnostic::new(DuplicateLinkId, format!("link id {} repeats", link.id)));
        }
        for end in [&link.endpoints.0, &link.endpoints.1] {
            if !topo.nodes.contains(end) {
                out.push(Diagnostic::new(UnknownNode, format!("link {} endpoint {end}", link.id)));
            }
        }
        if link.endpoints.0 == link.endpoints.1 {
            out.push(Diagnostic::new(SelfLoop, format!("link {} is a self-loop", link.id)));
        }
        if !(link.capacity.is_finite() && link.capacity > 0.0) {
            out.push(Diagnostic::new(
                NonpositiveCapacity,
                format!("link {} capacity {}", link.id, link.capacity),
            ));
        }
        if let Some(p) = link.fail_prob {
            if !(0.0..1.0).contains(&p) {
                out.push(Diagnostic::new(InvalidFailProb, format!("link {} fail_prob {p}", link.id)));
            }
        }
    }

    let mut tunnel_ids = HashSet::new();
    for t in &inst.tunnels {
        if !tunnel_ids.insert(&t.id) {
            out.push(Diagnostic::new(DuplicateTunnelId, format!("tunnel id {} repeats", t.id)));
        }
        for end in [&t.src, &t.dst] {
            if !topo.nodes.contains(end) {
                out.push(Diagnostic::new(UnknownNode, format!("tunnel {} endpoint {end}", t.id)));
            }
        }
        if t.path.is_empty() {
            out.push(Diagnostic::new(EmptyTunnel, format!("tunnel {} has no links", t.id)));
            continue;
        }
        let mut seen = HashSet::new();
        let mut cur = t.src.clone();
        let mut walk_ok = true;
        for (i, lid) in t.path.iter().enumerate() {
            if !seen.insert(lid) {
                out.push(Diagnostic::new(TunnelRepeatedLink, format!("tunnel {} repeats link {lid}", t.id)));
                walk_ok = false;
                break;
            }
            let Some(link) = links.get(lid) else {
                out.push(Diagnostic::new(UnknownLink, format!("tunnel {} uses link {lid}", t.id)));
                walk_ok = false;
                break;
            };
            match link.other(&cur) {
                Some(next) => cur = next.clone(),
                None => {
                    let code = if i == 0 { TunnelEndpointMismatch } else { TunnelDiscontiguous };
                    out.push(Diagnostic::new(
                        code,
                        format!("tunnel {}: link {lid} does not touch node {cur}", t.id),
                    ));
                    walk_ok = false;
                    break;
                }
            }
        }
        if walk_ok && cur != t.dst {
            out.push(Diagnostic::new(
                TunnelEndpointMismatch,
                format!("tunnel {} ends at {cur}, expected {}", t.id, t.dst),
            ));
        }
    }

    let mut cond_ids = HashSet::new();
    for c in &inst.conditions {
        if !cond_ids.insert(&c.id) {
            out.push(Diagnostic::new(DuplicateConditionId, format!("condition id {} repeats", c.id)));
        }
        for l in c.alive_links.iter().chain(&c.dead_links) {
            if !links.contains_key(l) {
                out.push(Diagnostic::new(UnknownLink, format!("condition {} uses link {l}", c.id)));
            }
        }
        if c.alive_links.intersection(&c.dead_links).next().is_some() {
            out.push(Diagnostic::new(
                ConditionOverlap,
                format!("condition {} has links both alive and dead", c.id),
            ));
        }
    }

    let mut ls_ids = HashSet::new();
    for q in &inst.logical_sequences {
        if !ls_ids.insert(&q.id) {
            out.push(Diagnostic::new(DuplicateLsId, format!("LS id {} repeats", q.id)));
        }
        if q.hops.len() < 2 {
            out.push(Diagnostic::new(LsTooShort, format!("LS {} needs at least two hops", q.id)));
            continue;
        }
        if q.hops[0] != q.src || q.hops[q.hops.len() - 1] != q.dst {
            out.push(Diagnostic::new(
                LsEndpointMismatch,
                format!("LS {} hops do not run from {} to {}", q.id, q.src, q.dst),
            ));
        }
        for h in &q.hops {
            if !topo.nodes.contains(h) {
                out.push(Diagnostic::new(UnknownNode, format!("LS {} hop {h}", q.id)));
            }
        }
        if q.hops.windows(2).any(|w| w[0] == w[1]) {
            out.push(Diagnostic::new(LsRepeatedHop, format!("LS {} repeats a hop", q.id)));
        }
        if let Some(c) = &q.condition {
            if !cond_ids.contains(c) {
                out.push(Diagnostic::new(UnknownCondition, format!("LS {} condition {c}", q.id)));
            }
        }
    }

    let mut flow_ids = HashSet::new();
    for d in &inst.demands {
        if !flow_ids.insert(&d.flow_id) {
            out.push(Diagnostic::new(DuplicateFlowId, format!("flow id {} repeats", d.flow_id)));
        }
        for end in [&d.src, &d.dst] {
            if !topo.nodes.contains(end) {
                out.push(Diagnostic::new(UnknownNode, format!("flow {} endpoint {end}", d.flow_id)));
            }
        }
        if d.src == d.dst {
            out.push(Diagnostic::new(SelfDemand, format!("flow {} has src = dst", d.flow_id)));
        }
        if !(d.demand.is_finite() && d.demand >= 0.0) {
            out.push(Diagnostic::new(NegativeDemand, format!("flow {} demand {}", d.flow_id, d.demand)));
        }
        if let Some(th) = d.loss_threshold {
            if !(0.0..=1.0).contains(&th) {
                out.push(Diagnostic::new(InvalidThreshold, format!("flow {} threshold {th}", d.flow_id)));
            }
        }
        if let Some(b) = d.beta {
            if !(0.0..=1.0).contains(&b) {
                out.push(Diagnostic::new(InvalidBeta, format!("flow {} beta {b}", d.flow_id)));
            }
        }
    }
    out
}

/// Checks a scenario against a topology.
pub fn validate_scenario(topo: &Topology, scenario: &Scenario) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for l in &scenario.failed_links {
        if topo.link(l).is_none() {
            out.push(Diagnostic::new(DiagnosticCode::UnknownLink, format!("scenario fails link {l}")));
        }
    }
    if let Some(p) = scenario.prob {
        if !(p > 0.0 && p <= 1.0) {
            out.push(Diagnostic::new(DiagnosticCode::InvalidScenarioProb, format!("probability {p}")));
        }
    }
    out
}

fn check_scenario(topo: &Topology, scenario: &Scenario) -> Result<()> {
    scenario.failed_links.iter().try_for_each(|l| topo.check_link(l))
}

/// A tunnel survives iff none of its links failed.
pub fn tunnel_alive(topo: &Topology, tunnel: &Tunnel, scenario: &Scenario) -> Result<bool> {
    tunnel.path.iter().try_for_each(|l| topo.check_link(l))?;
    check_scenario(topo, scenario)?;
    Ok(!tunnel.path.iter().any(|l| scenario.failed_links.contains(l)))
}

/// A condition holds iff its alive links survive and its dead links failed.
pub fn condition_active(topo: &Topology, cond: &Condition, scenario: &Scenario) -> Result<bool> {
    cond.alive_links
        .iter()
        .chain(&cond.dead_links)
        .try_for_each(|l| topo.check_link(l))?;
    check_scenario(topo, scenario)?;
    Ok(cond.alive_links.iter().all(|l| !scenario.failed_links.contains(l))
        && cond.dead_links.iter().all(|l| scenario.failed_links.contains(l)))
}

/// Default cap on enumerated scenarios.
pub const SCENARIO_LIMIT: u128 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of link subsets of size `0..=k`.
pub fn scenario_count(num_links: usize, k: usize) -> u128 {
    (0..=k.min(num_links)).map(|i| binomial(num_links, i)).sum()
}

/// Link index order used for deterministic enumeration: by link id.
pub fn sorted_link_order(topo: &Topology) -> Vec<usize> {
    let mut order: Vec<usize> = (0..topo.links.len()).collect();
    order.sort_by(|&a, &b| topo.links[a].id.cmp(&topo.links[b].id));
    order
}

/// All subsets of `order` with size `0..=k`, by size and then
/// lexicographically by position in `order`. Fails above `limit`.
pub fn link_subsets(order: &[usize], k: usize, limit: u128) -> Result<Vec<Vec<usize>>> {
    let n = order.len();
    let k = k.min(n);
    let count = scenario_count(n, k);
    if count > limit {
        return Err(Error::ScenarioBlowup { count, limit });
    }
    let mut out = Vec::with_capacity(count as usize);
    for size in 0..=k {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.iter().map(|&i| order[i]).collect());
            // Advance to the next combination.
            let mut pos = size;
            let mut advanced = false;
            while pos > 0 {
                pos -= 1;
                if idx[pos] < n - size + pos {
                    idx[pos] += 1;
                    for q in pos + 1..size {
                        idx[q] = idx[q - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(out)
}

/// Every scenario with at most `k` failed links, ordered by size and then by
/// the lexicographic tuple of link ids. `k` larger than the link count is
/// clamped.
pub fn enumerate_scenarios(topo: &Topology, k: usize) -> Result<Vec<Scenario>> {
    let order = sorted_link_order(topo);
    let subsets = link_subsets(&order, k, SCENARIO_LIMIT)?;
    Ok(subsets
        .into_iter()
        .map(|s| Scenario {
            failed_links: s.iter().map(|&i| topo.links[i].id.clone()).collect(),
            prob: None,
        })
        .collect())
}

/// Index-based view of an instance for model builders.
#[derive(Debug, Clone)]
pub struct IndexedInstance<'a> {
    pub inst: &'a NetworkInstance,
    pub node_index: HashMap<NodeId, usize>,
    pub link_index: HashMap<LinkId, usize>,
    pub tunnel_links: Vec<Vec<usize>>,
    pub tunnel_pairs: Vec<Pair>,
    pub tunnels_by_pair: BTreeMap<Pair, Vec<usize>>,
    pub condition_index: HashMap<ConditionId, usize>,
    pub condition_alive: Vec<Vec<usize>>,
    pub condition_dead: Vec<Vec<usize>>,
    pub ls_pairs: Vec<Pair>,
    pub ls_segments: Vec<Vec<Pair>>,
    pub ls_condition: Vec<Option<usize>>,
    pub demand: BTreeMap<Pair, f64>,
}

impl<'a> IndexedInstance<'a> {
    pub fn new(inst: &'a NetworkInstance) -> Result<Self> {
        let node_index: HashMap<NodeId, usize> = inst
            .topology
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let link_index: HashMap<LinkId, usize> = inst
            .topology
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.clone(), i))
            .collect();
        let lookup_link = |l: &LinkId| {
            link_index
                .get(l)
                .copied()
                .ok_or_else(|| Error::UnknownLink(l.to_string()))
        };
        let check_node = |n: &NodeId| {
            if node_index.contains_key(n) {
                Ok(())
            } else {
                Err(Error::UnknownNode(n.to_string()))
            }
        };
        let mut tunnel_links = Vec::new();
        let mut tunnel_pairs = Vec::new();
        let mut tunnels_by_pair: BTreeMap<Pair, Vec<usize>> = BTreeMap::new();
        for (i, t) in inst.tunnels.iter().enumerate() {
            check_node(&t.src)?;
            check_node(&t.dst)?;
            tunnel_links.push(t.path.iter().map(lookup_link).collect::<Result<Vec<_>>>()?);
            tunnel_pairs.push(t.pair());
            tunnels_by_pair.entry(t.pair()).or_default().push(i);
        }
        let mut condition_index = HashMap::new();
        let mut condition_alive = Vec::new();
        let mut condition_dead = Vec::new();
        for (i, c) in inst.conditions.iter().enumerate() {
            if c.alive_links.intersection(&c.dead_links).next().is_some() {
                return Err(Error::InvalidCondition(c.id.to_string()));
            }
            condition_index.insert(c.id.clone(), i);
            condition_alive.push(c.alive_links.iter().map(lookup_link).collect::<Result<Vec<_>>>()?);
            condition_dead.push(c.dead_links.iter().map(lookup_link).collect::<Result<Vec<_>>>()?);
        }
        let mut ls_pairs = Vec::new();
        let mut ls_segments = Vec::new();
        let mut ls_condition = Vec::new();
        for q in &inst.logical_sequences {
            q.hops.iter().try_for_each(check_node)?;
            if q.hops.len() < 2 {
                return Err(Error::InvalidParameter(format!("LS {} has fewer than two hops", q.id)));
            }
            ls_pairs.push(q.pair());
            ls_segments.push(q.segments());
            ls_condition.push(match &q.condition {
                None => None,
                Some(c) => Some(
                    *condition_index
                        .get(c)
                        .ok_or_else(|| Error::UnknownCondition(c.to_string()))?,
                ),
            });
        }
        for d in &inst.demands {
            check_node(&d.src)?;
            check_node(&d.dst)?;
        }
        Ok(IndexedInstance {
            inst,
            node_index,
            link_index,
            tunnel_links,
            tunnel_pairs,
            tunnels_by_pair,
            condition_index,
            condition_alive,
            condition_dead,
            ls_pairs,
            ls_segments,
            ls_condition,
            demand: inst.demand_by_pair(),
        })
    }

    pub fn num_links(&self) -> usize {
        self.inst.topology.links.len()
    }

    /// Failed-link mask for a scenario.
    pub fn failed_mask(&self, scenario: &Scenario) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.num_links()];
        for l in &scenario.failed_links {
            let i = self
                .link_index
                .get(l)
                .ok_or_else(|| Error::UnknownLink(l.to_string()))?;
            mask[*i] = true;
        }
        Ok(mask)
    }

    pub fn mask_from_indices(&self, failed: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.num_links()];
        for &i in failed {
            mask[i] = true;
        }
        mask
    }

    pub fn tunnel_alive(&self, tunnel: usize, failed: &[bool]) -> bool {
        self.tunnel_links[tunnel].iter().all(|&e| !failed[e])
    }

    pub fn condition_active(&self, cond: usize, failed: &[bool]) -> bool {
        self.condition_alive[cond].iter().all(|&e| !failed[e])
            && self.condition_dead[cond].iter().all(|&e| failed[e])
    }

    /// Whether LS `q` is active; `honor_conditions = false` treats every LS as
    /// unconditional.
    pub fn ls_active(&self, q: usize, failed: &[bool], honor_conditions: bool) -> bool {
        match self.ls_condition[q] {
            Some(c) if honor_conditions => self.condition_active(c, failed),
            _ => true,
        }
    }

    pub fn scenario_from_indices(&self, failed: &[usize]) -> Scenario {
        Scenario {
            failed_links: failed
                .iter()
                .map(|&i| self.inst.topology.links[i].id.clone())
                .collect(),
            prob: None,
        }
    }
}
