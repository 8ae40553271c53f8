//! Turning a reservation plan into per-scenario tunnel flows.
//!
//! For a scenario, the reservation matrix `M` over the pairs of interest
//! couples each pair's live reservations (diagonal) with the logical
//! sequences it has to carry for other pairs (off-diagonal). Solving
//! `M·U_t = D_t` per destination gives utilizations whose products with the
//! tunnel reservations form a valid routing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{IndexedInstance, LogicalSequence, NetworkInstance, NodeId, Pair, Scenario, TunnelId};
use crate::robust::{LogicalFlowPlan, ModelKind, ReservationPlan};
use crate::scalar::Scalar;

/// Reservation matrix of one scenario over the pairs of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservationMatrix<T> {
    /// Pairs of interest, sorted.
    pub pairs: Vec<Pair>,
    pub m: Vec<Vec<T>>,
    /// `z_ij·d_ij` per pair.
    pub demand: Vec<T>,
    /// Demand restricted to pairs ending at each destination.
    pub demand_by_dest: BTreeMap<NodeId, Vec<T>>,
}

impl<T: Scalar> ReservationMatrix<T> {
    pub fn position(&self, pair: &Pair) -> Option<usize> {
        self.pairs.binary_search(pair).ok()
    }

    pub fn entry(&self, row: &Pair, col: &Pair) -> T {
        match (self.position(row), self.position(col)) {
            (Some(i), Some(j)) => self.m[i][j].clone(),
            _ => T::zero(),
        }
    }
}

/// Per-scenario view of a plan: live tunnels and active sequences.
struct Active<'a> {
    idx: IndexedInstance<'a>,
    live: Vec<bool>,
    /// Active sequences with positive reservation.
    ls: Vec<usize>,
}

impl<'a> Active<'a> {
    fn new(plan: &ReservationPlan, inst: &'a NetworkInstance, scenario: &Scenario) -> Result<Self> {
        let idx = IndexedInstance::new(inst)?;
        if plan.tunnel_reservations.len() != inst.tunnels.len() || plan.ls_reservations.len() != inst.logical_sequences.len() {
            return Err(Error::InvalidParameter("plan does not match the instance".into()));
        }
        let failed = idx.failed_mask(scenario)?;
        let live = (0..inst.tunnels.len()).map(|l| idx.tunnel_alive(l, &failed)).collect();
        let honor = plan.model == ModelKind::Cls;
        let ls = (0..inst.logical_sequences.len())
            .filter(|&q| plan.ls_reservations[q] > 0.0 && idx.ls_active(q, &failed, honor))
            .collect();
        Ok(Active { idx, live, ls })
    }

    /// Pairs with positive scaled demand, closed under segments of active
    /// sequences whose own pair is of interest.
    fn pairs_of_interest(&self, plan: &ReservationPlan) -> BTreeSet<Pair> {
        let mut set: BTreeSet<Pair> = plan
            .pair_scale
            .iter()
            .filter(|(p, z)| z * self.idx.demand.get(p).copied().unwrap_or(0.0) > 0.0)
            .map(|(p, _)| p.clone())
            .collect();
        loop {
            let before = set.len();
            for &q in &self.ls {
                if set.contains(&self.idx.ls_pairs[q]) {
                    set.extend(self.idx.ls_segments[q].iter().cloned());
                }
            }
            if set.len() == before {
                return set;
            }
        }
    }

    fn live_tunnels(&self, pair: &Pair) -> Vec<usize> {
        self.idx
            .tunnels_by_pair
            .get(pair)
            .map(|ts| ts.iter().copied().filter(|&l| self.live[l]).collect())
            .unwrap_or_default()
    }
}

fn scaled_demand(plan: &ReservationPlan, idx: &IndexedInstance, pair: &Pair) -> f64 {
    plan.scale_of(pair) * idx.demand.get(pair).copied().unwrap_or(0.0)
}

fn build_from_active<T: Scalar>(plan: &ReservationPlan, act: &Active) -> ReservationMatrix<T> {
    let pairs: Vec<Pair> = act.pairs_of_interest(plan).into_iter().collect();
    let n = pairs.len();
    let pos = |p: &Pair| pairs.binary_search(p).ok();
    let mut m = vec![vec![T::zero(); n]; n];
    for (i, p) in pairs.iter().enumerate() {
        for l in act.live_tunnels(p) {
            m[i][i] = m[i][i].clone() + T::lit(plan.tunnel_reservations[l]);
        }
    }
    for &q in &act.ls {
        let b = T::lit(plan.ls_reservations[q]);
        let Some(owner) = pos(&act.idx.ls_pairs[q]) else { continue };
        m[owner][owner] = m[owner][owner].clone() + b.clone();
        for seg in &act.idx.ls_segments[q] {
            if let Some(i) = pos(seg) {
                m[i][owner] = m[i][owner].clone() - b.clone();
            }
        }
    }
    let demand: Vec<T> = pairs.iter().map(|p| T::lit(scaled_demand(plan, &act.idx, p))).collect();
    let mut demand_by_dest: BTreeMap<NodeId, Vec<T>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        if demand[i] != T::zero() {
            demand_by_dest
                .entry(p.dst.clone())
                .or_insert_with(|| vec![T::zero(); n])[i] = demand[i].clone();
        }
    }
    ReservationMatrix {
        pairs,
        m,
        demand,
        demand_by_dest,
    }
}

/// Reservation matrix of `plan` under `scenario`, in any scalar type.
pub fn build_reservation_matrix_in<T: Scalar>(
    plan: &ReservationPlan,
    inst: &NetworkInstance,
    scenario: &Scenario,
) -> Result<ReservationMatrix<T>> {
    let act = Active::new(plan, inst, scenario)?;
    Ok(build_from_active(plan, &act))
}

pub fn build_reservation_matrix(
    plan: &ReservationPlan,
    inst: &NetworkInstance,
    scenario: &Scenario,
) -> Result<ReservationMatrix<f64>> {
    build_reservation_matrix_in(plan, inst, scenario)
}

/// Checks weak chained diagonal dominance with non-positive off-diagonals.
pub fn check_wcdd<T: Scalar>(m: &[Vec<T>]) -> Result<()> {
    let n = m.len();
    let slack = |diag: &T| T::eps() * (T::one() + diag.abs());
    let mut strict = vec![false; n];
    for i in 0..n {
        let mut off = T::zero();
        for j in 0..n {
            if i != j {
                if m[i][j] > T::zero() {
                    return Err(Error::MatrixNotWcdd(format!("positive off-diagonal entry in row {i}")));
                }
                off = off + m[i][j].abs();
            }
        }
        let margin = m[i][i].clone() - off;
        if margin < -slack(&m[i][i]) {
            return Err(Error::MatrixNotWcdd(format!("row {i} is not diagonally dominant")));
        }
        strict[i] = margin > slack(&m[i][i]);
    }
    // Every row must reach a strictly dominant row through nonzero entries.
    let mut reach = strict.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !reach[i] && (0..n).any(|j| j != i && reach[j] && m[i][j] != T::zero()) {
                reach[i] = true;
                changed = true;
            }
        }
    }
    match reach.iter().position(|r| !r) {
        Some(i) => Err(Error::MatrixNotWcdd(format!("row {i} does not chain to a strictly dominant row"))),
        None => Ok(()),
    }
}

/// Gaussian elimination with partial pivoting. `None` when singular.
pub fn gaussian_solve<T: Scalar>(m: &[Vec<T>], rhs: &[T]) -> Option<Vec<T>> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m
        .iter()
        .zip(rhs)
        .map(|(row, r)| {
            let mut row = row.clone();
            row.push(r.clone());
            row
        })
        .collect();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() <= T::drop_tol() {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for r in col + 1..n {
            if a[r][col] == T::zero() {
                continue;
            }
            let f = a[r][col].clone() / p.clone();
            for c in col..=n {
                let v = a[col][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = a[r][n].clone();
        for c in r + 1..n {
            acc = acc - a[r][c].clone() * x[c].clone();
        }
        x[r] = acc / a[r][r].clone();
    }
    Some(x)
}

/// Jacobi iteration; converges on WCDD matrices with positive diagonal.
pub fn jacobi_solve(m: &[Vec<f64>], rhs: &[f64], tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let n = m.len();
    if (0..n).any(|i| m[i][i] <= 0.0) {
        return None;
    }
    let mut x = vec![0.0; n];
    for _ in 0..max_iter {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[i][j] * x[j]).sum();
                (rhs[i] - off) / m[i][i]
            })
            .collect();
        let delta = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if delta <= tol {
            return Some(x);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    #[default]
    Gaussian,
    Jacobi,
}

fn solve_checked<T: Scalar>(m: &[Vec<T>], rhs: &[T], method: SolveMethod) -> Result<Vec<T>> {
    let x = match method {
        SolveMethod::Gaussian => gaussian_solve(m, rhs),
        SolveMethod::Jacobi => {
            let mf: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(Scalar::to_f64_lossy).collect()).collect();
            let rf: Vec<f64> = rhs.iter().map(Scalar::to_f64_lossy).collect();
            jacobi_solve(&mf, &rf, 1e-13, 100_000).map(|x| x.into_iter().map(T::lit).collect())
        }
    };
    x.ok_or_else(|| Error::MatrixNotWcdd("singular reservation matrix".into()))
}

/// Aggregate utilization `U*` with `M·U* = D`, after checking the matrix.
pub fn solve_reservation_system<T: Scalar>(matrix: &ReservationMatrix<T>) -> Result<Vec<T>> {
    solve_reservation_system_with(matrix, SolveMethod::Gaussian)
}

pub fn solve_reservation_system_with<T: Scalar>(matrix: &ReservationMatrix<T>, method: SolveMethod) -> Result<Vec<T>> {
    check_wcdd(&matrix.m)?;
    solve_checked(&matrix.m, &matrix.demand, method)
}

/// Per-destination utilizations `U_t` with `M·U_t = D_t`, solved in parallel.
pub fn solve_per_destination<T: Scalar>(
    matrix: &ReservationMatrix<T>,
    method: SolveMethod,
) -> Result<BTreeMap<NodeId, Vec<T>>> {
    check_wcdd(&matrix.m)?;
    let dests: Vec<(&NodeId, &Vec<T>)> = matrix.demand_by_dest.iter().collect();
    dests
        .par_iter()
        .map(|(t, d)| solve_checked(&matrix.m, d, method).map(|u| ((*t).clone(), u)))
        .collect()
}

/// Flow toward `dest` carried by one tunnel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelFlow {
    pub tunnel: TunnelId,
    pub dest: NodeId,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRouting {
    pub scenario: Scenario,
    /// Positive flows, by tunnel order and then destination.
    pub flows: Vec<TunnelFlow>,
    /// Scaled demand delivered per pair.
    pub delivered: Vec<(Pair, f64)>,
}

/// Worst violations of a routing's invariants (all ≤ tolerance when valid).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RoutingCheck {
    pub balance_residual: f64,
    pub tunnel_excess: f64,
    pub link_excess: f64,
    pub dead_tunnel_flow: f64,
}

impl RoutingCheck {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.balance_residual <= tol && self.tunnel_excess <= tol && self.link_excess <= tol && self.dead_tunnel_flow <= tol
    }
}

impl ScenarioRouting {
    /// Checks flow balance per destination, per-tunnel reservations, link
    /// capacities and that dead tunnels carry nothing.
    pub fn check(&self, plan: &ReservationPlan, inst: &NetworkInstance) -> Result<RoutingCheck> {
        let idx = IndexedInstance::new(inst)?;
        let failed = idx.failed_mask(&self.scenario)?;
        let tpos: BTreeMap<&TunnelId, usize> = inst.tunnels.iter().enumerate().map(|(i, t)| (&t.id, i)).collect();
        let mut out = RoutingCheck::default();
        let mut per_tunnel = vec![0.0; inst.tunnels.len()];
        let mut balance: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for f in &self.flows {
            let l = tpos[&f.tunnel];
            per_tunnel[l] += f.amount;
            if !idx.tunnel_alive(l, &failed) {
                out.dead_tunnel_flow = out.dead_tunnel_flow.max(f.amount.abs());
            }
            let t = &inst.tunnels[l];
            *balance.entry((f.dest.clone(), t.src.clone())).or_insert(0.0) += f.amount;
            *balance.entry((f.dest.clone(), t.dst.clone())).or_insert(0.0) -= f.amount;
        }
        for (p, _) in &plan.pair_scale {
            let d = scaled_demand(plan, &idx, p);
            *balance.entry((p.dst.clone(), p.src.clone())).or_insert(0.0) -= d;
        }
        for ((dest, node), v) in &balance {
            if dest != node {
                out.balance_residual = out.balance_residual.max(v.abs());
            }
        }
        let mut load = vec![0.0; idx.num_links()];
        for (l, amount) in per_tunnel.iter().enumerate() {
            out.tunnel_excess = out.tunnel_excess.max(amount - plan.tunnel_reservations[l]);
            for &e in &idx.tunnel_links[l] {
                load[e] += amount;
            }
        }
        for (e, link) in inst.topology.links.iter().enumerate() {
            out.link_excess = out.link_excess.max(load[e] - link.capacity);
        }
        Ok(out)
    }
}

/// Repeatedly cancels directed cycles in each destination's tunnel-level
/// flow graph. `flows[l]` maps destination to amount.
fn remove_cycles(inst: &NetworkInstance, flows: &mut [BTreeMap<NodeId, f64>]) {
    const TINY: f64 = 1e-12;
    let dests: BTreeSet<NodeId> = flows.iter().flat_map(|m| m.keys().cloned()).collect();
    for dest in dests {
        loop {
            // Adjacency: node -> [(tunnel, head)] for tunnels with flow.
            let mut adj: BTreeMap<&NodeId, Vec<(usize, &NodeId)>> = BTreeMap::new();
            for (l, t) in inst.tunnels.iter().enumerate() {
                if flows[l].get(&dest).copied().unwrap_or(0.0) > TINY {
                    adj.entry(&t.src).or_default().push((l, &t.dst));
                }
            }
            let Some(cycle) = find_cycle(&adj) else { break };
            let amount = cycle
                .iter()
                .map(|&l| flows[l][&dest])
                .fold(f64::INFINITY, f64::min);
            for &l in &cycle {
                let v = flows[l].get_mut(&dest).expect("cycle edge has flow");
                *v -= amount;
                if *v <= TINY {
                    flows[l].remove(&dest);
                }
            }
        }
    }
}

/// First directed cycle found by DFS in node order; returned as tunnel indices.
fn find_cycle(adj: &BTreeMap<&NodeId, Vec<(usize, &NodeId)>>) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut mark: BTreeMap<&NodeId, Mark> = BTreeMap::new();
    for &start in adj.keys() {
        if mark.contains_key(start) {
            continue;
        }
        // Stack of (node, next edge position); path of tunnels taken.
        let mut stack: Vec<(&NodeId, usize)> = vec![(start, 0)];
        let mut path: Vec<usize> = Vec::new();
        mark.insert(start, Mark::Open);
        while let Some((node, pos)) = stack.last().copied() {
            let edges = adj.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if pos == edges.len() {
                mark.insert(node, Mark::Done);
                stack.pop();
                path.pop();
                continue;
            }
            stack.last_mut().unwrap().1 += 1;
            let (l, head) = edges[pos];
            match mark.get(head) {
                Some(Mark::Open) => {
                    let from = stack.iter().position(|(n, _)| *n == head).unwrap();
                    let mut cycle: Vec<usize> = path[from..].to_vec();
                    cycle.push(l);
                    return Some(cycle);
                }
                Some(Mark::Done) => {}
                None => {
                    mark.insert(head, Mark::Open);
                    stack.push((head, 0));
                    path.push(l);
                }
            }
        }
    }
    None
}

fn routing_from(
    inst: &NetworkInstance,
    plan: &ReservationPlan,
    idx: &IndexedInstance,
    scenario: &Scenario,
    mut flows: Vec<BTreeMap<NodeId, f64>>,
) -> ScenarioRouting {
    remove_cycles(inst, &mut flows);
    ScenarioRouting {
        scenario: scenario.clone(),
        flows: flows
            .into_iter()
            .enumerate()
            .flat_map(|(l, m)| {
                m.into_iter().filter(|(_, v)| *v > 1e-12).map(move |(dest, amount)| TunnelFlow {
                    tunnel: inst.tunnels[l].id.clone(),
                    dest,
                    amount,
                })
            })
            .collect(),
        delivered: plan
            .pair_scale
            .iter()
            .map(|(p, _)| (p.clone(), scaled_demand(plan, idx, p)))
            .collect(),
    }
}

/// Routing `r_lt = U_t(ij)·a_l` from the per-destination systems, with flow
/// cycles cancelled.
pub fn extract_routing(plan: &ReservationPlan, inst: &NetworkInstance, scenario: &Scenario) -> Result<ScenarioRouting> {
    extract_routing_with(plan, inst, scenario, SolveMethod::Gaussian)
}

pub fn extract_routing_with(
    plan: &ReservationPlan,
    inst: &NetworkInstance,
    scenario: &Scenario,
    method: SolveMethod,
) -> Result<ScenarioRouting> {
    let act = Active::new(plan, inst, scenario)?;
    let matrix: ReservationMatrix<f64> = build_from_active(plan, &act);
    let per_dest = solve_per_destination(&matrix, method)?;
    let mut flows: Vec<BTreeMap<NodeId, f64>> = vec![BTreeMap::new(); inst.tunnels.len()];
    for (i, pair) in matrix.pairs.iter().enumerate() {
        for l in act.live_tunnels(pair) {
            for (t, u) in &per_dest {
                let r = u[i] * plan.tunnel_reservations[l];
                if r > 0.0 {
                    flows[l].insert(t.clone(), r);
                }
            }
        }
    }
    Ok(routing_from(inst, plan, &act.idx, scenario, flows))
}

/// Outcome of a topological-sort check over logical sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopoOrder {
    /// Segment pairs come before the pairs whose sequences use them.
    Sorted(Vec<Pair>),
    /// A shortest cycle `p0 → p1 → … → p0` of "uses as segment".
    Cycle(Vec<Pair>),
}

fn usage_graph(sequences: &[(Pair, Vec<Pair>)]) -> BTreeMap<Pair, BTreeSet<Pair>> {
    let mut g: BTreeMap<Pair, BTreeSet<Pair>> = BTreeMap::new();
    for (pair, segs) in sequences {
        g.entry(pair.clone()).or_default().extend(segs.iter().cloned());
        for s in segs {
            g.entry(s.clone()).or_default();
        }
    }
    g
}

fn shortest_cycle(g: &BTreeMap<Pair, BTreeSet<Pair>>) -> Option<Vec<Pair>> {
    let mut best: Option<Vec<Pair>> = None;
    for start in g.keys() {
        let mut prev: BTreeMap<&Pair, &Pair> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut found = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for v in &g[u] {
                if v == start {
                    found = Some(u);
                    break 'bfs;
                }
                if !prev.contains_key(v) {
                    prev.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        if let Some(mut u) = found {
            let mut cycle = vec![u.clone()];
            while u != start {
                u = prev[u];
                cycle.push(u.clone());
            }
            cycle.reverse();
            if best.as_ref().map_or(true, |b| cycle.len() < b.len()) {
                best = Some(cycle);
            }
        }
    }
    best
}

fn topo_sort(sequences: &[(Pair, Vec<Pair>)]) -> TopoOrder {
    let g = usage_graph(sequences);
    let mut remaining: BTreeMap<&Pair, usize> = g.iter().map(|(p, s)| (p, s.len())).collect();
    let mut users: BTreeMap<&Pair, Vec<&Pair>> = BTreeMap::new();
    for (p, segs) in &g {
        for s in segs {
            users.entry(s).or_default().push(p);
        }
    }
    let mut ready: BTreeSet<&Pair> = remaining.iter().filter(|(_, &c)| c == 0).map(|(p, _)| *p).collect();
    let mut order = Vec::new();
    while let Some(p) = ready.pop_first() {
        order.push(p.clone());
        for u in users.get(p).into_iter().flatten() {
            let c = remaining.get_mut(u).unwrap();
            *c -= 1;
            if *c == 0 {
                ready.insert(u);
            }
        }
    }
    if order.len() == g.len() {
        TopoOrder::Sorted(order)
    } else {
        TopoOrder::Cycle(shortest_cycle(&g).expect("unsorted graph has a cycle"))
    }
}

/// Checks whether the sequences active in `scenario` are topologically
/// sorted. Conditions are looked up in `inst`; with `honor_conditions =
/// false` every sequence counts as active.
pub fn check_topological_sort(
    inst: &NetworkInstance,
    sequences: &[LogicalSequence],
    scenario: &Scenario,
    honor_conditions: bool,
) -> Result<TopoOrder> {
    let idx = IndexedInstance::new(inst)?;
    let failed = idx.failed_mask(scenario)?;
    let mut active = Vec::new();
    for q in sequences {
        let on = match (&q.condition, honor_conditions) {
            (Some(c), true) => {
                let ci = *idx
                    .condition_index
                    .get(c)
                    .ok_or_else(|| Error::UnknownCondition(c.to_string()))?;
                idx.condition_active(ci, &failed)
            }
            _ => true,
        };
        if on {
            active.push((q.pair(), q.segments()));
        }
    }
    Ok(topo_sort(&active))
}

/// Local proportional splitting: each pair forwards its offered traffic
/// (own demand plus sequence traffic it carries) over live tunnels and
/// active sequences in proportion to their reservations.
pub fn proportional_routing(plan: &ReservationPlan, inst: &NetworkInstance, scenario: &Scenario) -> Result<ScenarioRouting> {
    let act = Active::new(plan, inst, scenario)?;
    let seqs: Vec<(Pair, Vec<Pair>)> = act
        .ls
        .iter()
        .map(|&q| (act.idx.ls_pairs[q].clone(), act.idx.ls_segments[q].clone()))
        .collect();
    let order = match topo_sort(&seqs) {
        TopoOrder::Sorted(o) => o,
        TopoOrder::Cycle(c) => return Err(Error::NotTopologicallySorted(c)),
    };
    let interest = act.pairs_of_interest(plan);
    // Users before their segments.
    let mut pairs: Vec<Pair> = order.into_iter().rev().filter(|p| interest.contains(p)).collect();
    pairs.extend(interest.iter().filter(|p| !pairs.contains(p)).cloned().collect::<Vec<_>>());

    let mut offered: BTreeMap<Pair, BTreeMap<NodeId, f64>> = BTreeMap::new();
    for p in &interest {
        let d = scaled_demand(plan, &act.idx, p);
        if d > 0.0 {
            offered.entry(p.clone()).or_default().insert(p.dst.clone(), d);
        }
    }
    let mut flows: Vec<BTreeMap<NodeId, f64>> = vec![BTreeMap::new(); inst.tunnels.len()];
    for p in &pairs {
        let Some(traffic) = offered.get(p).cloned() else { continue };
        let tunnels = act.live_tunnels(p);
        let own: Vec<usize> = act.ls.iter().copied().filter(|&q| &act.idx.ls_pairs[q] == p).collect();
        let total: f64 = tunnels.iter().map(|&l| plan.tunnel_reservations[l]).sum::<f64>()
            + own.iter().map(|&q| plan.ls_reservations[q]).sum::<f64>();
        if total <= 0.0 {
            if traffic.values().any(|&v| v > 1e-12) {
                return Err(Error::MatrixNotWcdd(format!("pair {p} has traffic but no usable reservation")));
            }
            continue;
        }
        for (t, amount) in &traffic {
            let u = amount / total;
            for &l in &tunnels {
                let r = u * plan.tunnel_reservations[l];
                if r > 0.0 {
                    *flows[l].entry(t.clone()).or_insert(0.0) += r;
                }
            }
            for &q in &own {
                let carried = u * plan.ls_reservations[q];
                for seg in &act.idx.ls_segments[q] {
                    *offered.entry(seg.clone()).or_default().entry(t.clone()).or_insert(0.0) += carried;
                }
            }
        }
    }
    Ok(routing_from(inst, plan, &act.idx, scenario, flows))
}

/// Greedy pass in input order keeping each sequence only if the kept set
/// stays topologically sorted in every scenario. Returns kept indices.
pub fn prune_ls(
    inst: &NetworkInstance,
    sequences: &[LogicalSequence],
    scenarios: &[Scenario],
    honor_conditions: bool,
) -> Result<Vec<usize>> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..sequences.len() {
        let mut trial: Vec<LogicalSequence> = kept.iter().map(|&k| sequences[k].clone()).collect();
        trial.push(sequences[i].clone());
        let mut ok = true;
        for s in scenarios {
            if matches!(check_topological_sort(inst, &trial, s, honor_conditions)?, TopoOrder::Cycle(_)) {
                ok = false;
                break;
            }
        }
        if ok {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// One sequence per logical flow with positive reservation, following the
/// widest path through its segment loads. Ties prefer fewer hops and then
/// the lexicographically smallest node sequence.
pub fn widest_path_decompose(plan: &LogicalFlowPlan) -> Result<Vec<LogicalSequence>> {
    let mut out = Vec::new();
    for (w, flow) in plan.flows.iter().enumerate() {
        if flow.reservation <= 0.0 {
            continue;
        }
        let edges: Vec<(&NodeId, &NodeId, f64)> = flow
            .loads
            .iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(p, v)| (&p.src, &p.dst, *v))
            .collect();
        let (s, t) = (&flow.pair.src, &flow.pair.dst);
        // Largest bottleneck: try thresholds from the widest edge down.
        let mut widths: Vec<f64> = edges.iter().map(|e| e.2).collect();
        widths.sort_by(|a, b| b.partial_cmp(a).unwrap());
        widths.dedup();
        let mut hops = None;
        for &b in &widths {
            if let Some(path) = fewest_hops(&edges, s, t, b) {
                hops = Some(path);
                break;
            }
        }
        let hops = hops.ok_or_else(|| {
            Error::InternalModel(format!("logical flow {w} for {} has no path through its loads", flow.pair))
        })?;
        let names: Vec<&str> = hops.iter().map(|n| n.as_str()).collect();
        let cond = (!flow.condition.is_unconditional()).then(|| flow.condition.id.as_str());
        out.push(LogicalSequence::new(&format!("lf{w}"), &names, cond));
    }
    Ok(out)
}

/// Lexicographically smallest shortest s→t path using edges of width ≥ `min`.
fn fewest_hops(edges: &[(&NodeId, &NodeId, f64)], s: &NodeId, t: &NodeId, min: f64) -> Option<Vec<NodeId>> {
    let mut rev: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    let mut fwd: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
    for &(a, b, w) in edges {
        if w >= min {
            rev.entry(b).or_default().push(a);
            fwd.entry(a).or_default().insert(b);
        }
    }
    // Distance to t.
    let mut dist: BTreeMap<&NodeId, usize> = BTreeMap::from([(t, 0)]);
    let mut queue = VecDeque::from([t]);
    while let Some(v) = queue.pop_front() {
        for &u in rev.get(v).into_iter().flatten() {
            if !dist.contains_key(u) {
                dist.insert(u, dist[v] + 1);
                queue.push_back(u);
            }
        }
    }
    let mut cur = s;
    let mut path = vec![s.clone()];
    let mut left = *dist.get(s)?;
    while left > 0 {
        cur = fwd[cur].iter().copied().find(|n| dist.get(n) == Some(&(left - 1)))?;
        path.push(cur.clone());
        left -= 1;
    }
    Some(path)
}
