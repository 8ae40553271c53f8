//! Probabilistic traffic engineering: minimizing the worst per-flow
//! percentile loss over a weighted scenario set.
//!
//! Each flow set `a` picks critical scenarios `z_aq` covering at least its
//! target probability; the objective `α` bounds the loss of every flow set
//! in each of its critical scenarios. Routing is chosen per scenario. The
//! problem is solved either as one MIP or by Benders decomposition with one
//! LP subproblem per scenario.

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::mip::{solve_mip_with, MipOptions};
use crate::lp::{solve_lp, LinearProgram, LpError, RowId, Sense, Solution, Status, VarId};
use crate::net::{FlowId, IndexedInstance, LinkId, NetworkInstance, Pair, Scenario, Topology};

/// Scenario-count ceiling for [`enumerate_prob_scenarios`].
pub const SCENARIO_LIMIT: u128 = 1_000_000;
/// Default probability below which scenarios are discarded.
pub const DEFAULT_CUTOFF: f64 = 1e-6;
/// Slack on probability coverage comparisons, absorbing summation error.
pub const COVERAGE_TOL: f64 = 1e-9;

/// Weibull parameters for per-link failure probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullParams {
    /// Parameters whose median equals `median` for the given shape.
    pub fn with_median(shape: f64, median: f64) -> Self {
        WeibullParams {
            shape,
            scale: median / std::f64::consts::LN_2.powf(1.0 / shape),
        }
    }
}

impl Default for WeibullParams {
    fn default() -> Self {
        WeibullParams::with_median(0.8, 1e-3)
    }
}

/// Copy of `topo` with i.i.d. Weibull failure probabilities clamped into (0, 0.5).
pub fn sample_link_probs(topo: &Topology, params: WeibullParams, seed: u64) -> Result<Topology> {
    if !(params.shape > 0.0 && params.scale > 0.0) {
        return Err(Error::InvalidParameter("Weibull shape and scale must be positive".into()));
    }
    let dist = Weibull::new(params.scale, params.shape)
        .map_err(|e| Error::InvalidParameter(format!("Weibull parameters: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = topo.clone();
    for link in &mut out.links {
        let p: f64 = dist.sample(&mut rng);
        link.fail_prob = Some(p.clamp(f64::MIN_POSITIVE, 0.5 - 1e-12));
    }
    Ok(out)
}

/// All failure sets whose independent-failure probability is at least
/// `cutoff`, ordered by size and then link order. Includes the empty set.
pub fn enumerate_prob_scenarios(topo: &Topology, cutoff: f64) -> Result<Vec<Scenario>> {
    let probs: Vec<f64> = topo
        .links
        .iter()
        .map(|l| {
            l.fail_prob
                .filter(|p| (0.0..=1.0).contains(p))
                .ok_or_else(|| Error::InvalidParameter(format!("link {} has no valid fail_prob", l.id)))
        })
        .collect::<Result<_>>()?;
    let n = probs.len();
    // Best achievable factor from link i onward, for pruning.
    let mut best_tail = vec![1.0; n + 1];
    for i in (0..n).rev() {
        best_tail[i] = best_tail[i + 1] * probs[i].max(1.0 - probs[i]);
    }
    let mut found: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>, f64)> = vec![(0, Vec::new(), 1.0)];
    while let Some((i, failed, p)) = stack.pop() {
        if p * best_tail[i] < cutoff {
            continue;
        }
        if i == n {
            found.push((failed, p));
            if found.len() as u128 > SCENARIO_LIMIT {
                return Err(Error::ScenarioBlowup {
                    count: found.len() as u128,
                    limit: SCENARIO_LIMIT,
                });
            }
            continue;
        }
        let mut with = failed.clone();
        with.push(i);
        stack.push((i + 1, with, p * probs[i]));
        stack.push((i + 1, failed, p * (1.0 - probs[i])));
    }
    found.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(found
        .into_iter()
        .map(|(failed, p)| Scenario {
            failed_links: failed.iter().map(|&e| topo.links[e].id.clone()).collect(),
            prob: Some(p),
        })
        .collect())
}

/// Flows whose losses are judged together: the set's loss in a scenario is
/// the largest loss among its flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSet {
    pub id: String,
    pub flows: Vec<FlowId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticInstance {
    pub instance: NetworkInstance,
    /// Scenarios with `prob` set.
    pub scenarios: Vec<Scenario>,
    /// Default availability target.
    pub beta: f64,
    /// Flow sets; when absent every demand is its own set, carrying the
    /// demand's `beta` and `loss_threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_sets: Option<Vec<FlowSet>>,
}

impl ProbabilisticInstance {
    /// Builds the instance from independent link failure probabilities.
    pub fn from_link_probs(instance: NetworkInstance, beta: f64, cutoff: f64) -> Result<Self> {
        let scenarios = enumerate_prob_scenarios(&instance.topology, cutoff)?;
        Self::with_scenarios(instance, scenarios, beta)
    }

    pub fn with_scenarios(instance: NetworkInstance, scenarios: Vec<Scenario>, beta: f64) -> Result<Self> {
        let pinst = ProbabilisticInstance {
            instance,
            scenarios,
            beta,
            flow_sets: None,
        };
        pinst.check()?;
        Ok(pinst)
    }

    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!("beta {} outside [0, 1]", self.beta)));
        }
        let mut total = 0.0;
        for s in &self.scenarios {
            match s.prob {
                Some(p) if p > 0.0 => total += p,
                _ => return Err(Error::InvalidParameter(format!("scenario {s} needs a positive probability"))),
            }
        }
        if total > 1.0 + COVERAGE_TOL {
            return Err(Error::InvalidParameter(format!("scenario probabilities sum to {total}")));
        }
        Ok(())
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.prob.unwrap_or(0.0)).collect()
    }
}

/// Per-scenario routing with the loss each flow set sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRouting {
    /// Tunnel allocation per scenario, `alloc[q][t]`.
    pub alloc: Vec<Vec<f64>>,
    /// Loss per flow set and scenario, `loss[a][q]`.
    pub loss: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub beta: f64,
    /// `FlowLoss(a, β_a)` per flow set.
    pub flow_loss: Vec<(String, f64)>,
    pub max_flow_pct_loss: f64,
    /// Largest flow-set loss per scenario.
    pub scen_loss: Vec<f64>,
    pub scen_pct_loss: f64,
    /// `max_a (FlowLoss(a) − th_a)⁺`; equals `max_flow_pct_loss` without thresholds.
    pub threshold_excess: f64,
    pub flow_cvar: Vec<(String, f64)>,
    pub max_flow_cvar: f64,
}

/// Smallest `v` with `Σ_{q: loss_q ≤ v} p_q ≥ β`.
pub fn value_at_risk(losses: &[f64], probs: &[f64], beta: f64) -> Option<f64> {
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
    let mut acc = 0.0;
    for i in order {
        acc += probs[i];
        if acc >= beta - COVERAGE_TOL {
            return Some(losses[i]);
        }
    }
    None
}

/// Conditional value at risk: `VaR + Σ p_q (loss_q − VaR)⁺ / (1 − β)`.
pub fn conditional_value_at_risk(losses: &[f64], probs: &[f64], beta: f64) -> Option<f64> {
    let var = value_at_risk(losses, probs, beta)?;
    if beta >= 1.0 {
        return Some(losses.iter().copied().fold(var, f64::max));
    }
    let tail: f64 = losses.iter().zip(probs).map(|(l, p)| p * (l - var).max(0.0)).sum();
    Some(var + tail / (1.0 - beta))
}

/// Resolved flow set: demand per pair index, target and threshold.
#[derive(Debug, Clone)]
struct SetInfo {
    id: String,
    demand: Vec<(usize, f64)>,
    beta: f64,
    threshold: f64,
}

/// Index structures shared by all formulations.
struct Prepared<'a> {
    pinst: &'a ProbabilisticInstance,
    idx: IndexedInstance<'a>,
    sets: Vec<SetInfo>,
    pair_tunnels: Vec<Vec<usize>>,
    probs: Vec<f64>,
    failed: Vec<Vec<bool>>,
    alive: Vec<Vec<bool>>,
    /// `connected[a][q]`: every pair of set `a` has a live tunnel in `q`.
    connected: Vec<Vec<bool>>,
}

impl<'a> Prepared<'a> {
    fn new(pinst: &'a ProbabilisticInstance) -> Result<Self> {
        pinst.check()?;
        let inst = &pinst.instance;
        let idx = IndexedInstance::new(inst)?;
        let mut pair_pos: BTreeMap<Pair, usize> = BTreeMap::new();
        let mut pairs = Vec::new();
        let mut pair_of = |p: Pair, pairs: &mut Vec<Pair>| {
            *pair_pos.entry(p.clone()).or_insert_with(|| {
                pairs.push(p);
                pairs.len() - 1
            })
        };
        let by_id: HashMap<&FlowId, usize> = inst.demands.iter().enumerate().map(|(i, d)| (&d.flow_id, i)).collect();
        let mut sets = Vec::new();
        match &pinst.flow_sets {
            None => {
                for d in inst.demands.iter().filter(|d| d.demand > 0.0) {
                    let pi = pair_of(d.pair(), &mut pairs);
                    sets.push(SetInfo {
                        id: d.flow_id.to_string(),
                        demand: vec![(pi, d.demand)],
                        beta: d.beta.unwrap_or(pinst.beta),
                        threshold: d.loss_threshold.unwrap_or(0.0),
                    });
                }
            }
            Some(fs) => {
                for s in fs {
                    let mut demand: Vec<(usize, f64)> = Vec::new();
                    for f in &s.flows {
                        let d = &inst.demands[*by_id
                            .get(f)
                            .ok_or_else(|| Error::InvalidParameter(format!("flow set {} names unknown flow {f}", s.id)))?];
                        let pi = pair_of(d.pair(), &mut pairs);
                        match demand.iter_mut().find(|(p, _)| *p == pi) {
                            Some(e) => e.1 += d.demand,
                            None => demand.push((pi, d.demand)),
                        }
                    }
                    demand.retain(|(_, d)| *d > 0.0);
                    if demand.is_empty() {
                        continue;
                    }
                    sets.push(SetInfo {
                        id: s.id.clone(),
                        demand,
                        beta: s.beta.unwrap_or(pinst.beta),
                        threshold: s.threshold.unwrap_or(0.0),
                    });
                }
            }
        }
        if sets.is_empty() {
            return Err(Error::NoDemand);
        }
        let pair_tunnels = pairs
            .iter()
            .map(|p| idx.tunnels_by_pair.get(p).cloned().unwrap_or_default())
            .collect::<Vec<_>>();
        let failed = pinst
            .scenarios
            .iter()
            .map(|s| idx.failed_mask(s))
            .collect::<Result<Vec<_>>>()?;
        let alive: Vec<Vec<bool>> = failed
            .iter()
            .map(|f| (0..inst.tunnels.len()).map(|t| idx.tunnel_alive(t, f)).collect())
            .collect();
        let connected = sets
            .iter()
            .map(|s| {
                alive
                    .iter()
                    .map(|al| s.demand.iter().all(|(pi, _)| pair_tunnels[*pi].iter().any(|&t| al[t])))
                    .collect()
            })
            .collect();
        Ok(Prepared {
            pinst,
            idx,
            sets,
            pair_tunnels,
            probs: pinst.probs(),
            failed,
            alive,
            connected,
        })
    }

    fn num_scenarios(&self) -> usize {
        self.probs.len()
    }

    fn check_targets(&self) -> Result<()> {
        for (a, s) in self.sets.iter().enumerate() {
            let mass: f64 = (0..self.num_scenarios())
                .filter(|&q| self.connected[a][q])
                .map(|q| self.probs[q])
                .sum();
            if mass < s.beta - COVERAGE_TOL {
                return Err(Error::InfeasibleTarget { flow: s.id.clone() });
            }
        }
        Ok(())
    }

    /// Adds scenario `q`'s routing variables and rows. `loss_row(a, l)`
    /// returns the terms and right-hand side of set `a`'s loss-bound row.
    fn scenario_block(
        &self,
        lp: &mut LinearProgram<f64>,
        q: usize,
        mut loss_row: impl FnMut(usize, VarId) -> (Vec<(VarId, f64)>, f64),
    ) -> Block {
        let links = &self.pinst.instance.topology.links;
        let x: Vec<Option<VarId>> = (0..self.pinst.instance.tunnels.len())
            .map(|t| self.alive[q][t].then(|| lp.add_nonneg(format!("x_{t}_{q}"))))
            .collect();
        let l: Vec<VarId> = (0..self.sets.len())
            .map(|a| lp.add_var(format!("l_{a}_{q}"), Some(0.0), Some(1.0)))
            .collect();
        let loss_rows = (0..self.sets.len())
            .map(|a| {
                let (terms, rhs) = loss_row(a, l[a]);
                lp.add_row(format!("loss_{a}_{q}"), terms, Sense::Le, rhs)
            })
            .collect();
        for (pi, tunnels) in self.pair_tunnels.iter().enumerate() {
            let mut terms: Vec<(VarId, f64)> = tunnels.iter().filter_map(|&t| x[t].map(|v| (v, 1.0))).collect();
            let mut total = 0.0;
            for (a, s) in self.sets.iter().enumerate() {
                for &(p, d) in &s.demand {
                    if p == pi {
                        terms.push((l[a], d));
                        total += d;
                    }
                }
            }
            lp.add_row(format!("dem_{pi}_{q}"), terms, Sense::Ge, total);
        }
        for (e, link) in links.iter().enumerate() {
            if self.failed[q][e] {
                continue;
            }
            let terms: Vec<(VarId, f64)> = x
                .iter()
                .enumerate()
                .filter_map(|(t, v)| v.filter(|_| self.idx.tunnel_links[t].contains(&e)).map(|v| (v, 1.0)))
                .collect();
            if !terms.is_empty() {
                lp.add_row(format!("cap_{e}_{q}"), terms, Sense::Le, link.capacity);
            }
        }
        Block { x, l, loss_rows }
    }

    fn read_block(&self, sol: &Solution<f64>, block: &Block) -> (Vec<f64>, Vec<f64>) {
        let alloc = block.x.iter().map(|v| v.map_or(0.0, |v| sol.value(v).max(0.0))).collect();
        let loss = block.l.iter().map(|&v| sol.value(v).clamp(0.0, 1.0)).collect();
        (alloc, loss)
    }

    /// Losses implied by an allocation, lowering LP losses where a pair is
    /// used by a single set and the allocation serves more than the LP value.
    fn tighten(&self, q: usize, alloc: &[f64], loss: &mut [f64]) {
        for (pi, tunnels) in self.pair_tunnels.iter().enumerate() {
            let users: Vec<(usize, f64)> = self
                .sets
                .iter()
                .enumerate()
                .flat_map(|(a, s)| s.demand.iter().filter(|(p, _)| *p == pi).map(move |(_, d)| (a, *d)))
                .collect();
            let single_pair_single_user = users.len() == 1 && self.sets[users[0].0].demand.len() == 1;
            if single_pair_single_user {
                let (a, d) = users[0];
                let supply: f64 = tunnels.iter().filter(|&&t| self.alive[q][t]).map(|&t| alloc[t]).sum();
                loss[a] = loss[a].min((1.0 - supply / d).clamp(0.0, 1.0));
            }
        }
    }

    /// Losses of a static allocation used in every scenario, splitting a
    /// pair's live supply so all its flow sets see the same loss.
    fn static_losses(&self, alloc: &[f64]) -> ProbRouting {
        let nq = self.num_scenarios();
        let mut loss = vec![vec![0.0; nq]; self.sets.len()];
        let mut per_q = Vec::with_capacity(nq);
        for q in 0..nq {
            let live: Vec<f64> = alloc
                .iter()
                .enumerate()
                .map(|(t, &x)| if self.alive[q][t] { x } else { 0.0 })
                .collect();
            for (pi, tunnels) in self.pair_tunnels.iter().enumerate() {
                let supply: f64 = tunnels.iter().map(|&t| live[t]).sum();
                let total: f64 = self
                    .sets
                    .iter()
                    .flat_map(|s| s.demand.iter().filter(|(p, _)| *p == pi).map(|(_, d)| *d))
                    .sum();
                let pair_loss = if total > 0.0 { (1.0 - supply / total).clamp(0.0, 1.0) } else { 0.0 };
                for (a, s) in self.sets.iter().enumerate() {
                    if s.demand.iter().any(|(p, _)| *p == pi) {
                        loss[a][q] = f64::max(loss[a][q], pair_loss);
                    }
                }
            }
            per_q.push(live);
        }
        ProbRouting { alloc: per_q, loss }
    }

    fn report(&self, routing: &ProbRouting, beta: f64) -> Result<LossReport> {
        let nq = self.num_scenarios();
        if routing.loss.len() != self.sets.len() || routing.loss.iter().any(|l| l.len() != nq) {
            return Err(Error::InvalidParameter("routing does not cover every flow set and scenario".into()));
        }
        let mut flow_loss = Vec::new();
        let mut flow_cvar = Vec::new();
        let mut excess: f64 = 0.0;
        for (a, s) in self.sets.iter().enumerate() {
            let v = value_at_risk(&routing.loss[a], &self.probs, s.beta)
                .ok_or_else(|| Error::InfeasibleTarget { flow: s.id.clone() })?;
            let c = conditional_value_at_risk(&routing.loss[a], &self.probs, s.beta).unwrap_or(v);
            excess = excess.max(v - s.threshold);
            flow_loss.push((s.id.clone(), v));
            flow_cvar.push((s.id.clone(), c));
        }
        let scen_loss: Vec<f64> = (0..nq)
            .map(|q| routing.loss.iter().map(|l| l[q]).fold(0.0, f64::max))
            .collect();
        let scen_pct_loss = value_at_risk(&scen_loss, &self.probs, beta).ok_or_else(|| Error::InfeasibleTarget {
            flow: "all flows".into(),
        })?;
        Ok(LossReport {
            beta,
            max_flow_pct_loss: flow_loss.iter().map(|f| f.1).fold(0.0, f64::max),
            flow_loss,
            scen_loss,
            scen_pct_loss,
            threshold_excess: excess.max(0.0),
            max_flow_cvar: flow_cvar.iter().map(|f| f.1).fold(0.0, f64::max),
            flow_cvar,
        })
    }
}

struct Block {
    x: Vec<Option<VarId>>,
    l: Vec<VarId>,
    loss_rows: Vec<RowId>,
}

fn optimal(sol: Solution<f64>, what: &str) -> Result<Solution<f64>> {
    if sol.status == Status::Optimal {
        Ok(sol)
    } else {
        Err(Error::InternalModel(format!("{what} solved as {:?}", sol.status)))
    }
}

/// Loss report of `routing` at availability target `beta` (flow sets with
/// their own target use it instead).
pub fn percentile_analysis(routing: &ProbRouting, pinst: &ProbabilisticInstance, beta: f64) -> Result<LossReport> {
    Prepared::new(pinst)?.report(routing, beta)
}

/// Flow-set ids in the order used by `ProbRouting::loss` and selections.
pub fn flow_set_ids(pinst: &ProbabilisticInstance) -> Result<Vec<String>> {
    Ok(Prepared::new(pinst)?.sets.into_iter().map(|s| s.id).collect())
}

/// Critical scenarios per flow set, `z[a][q]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalSelection {
    pub z: Vec<Vec<bool>>,
}

impl CriticalSelection {
    /// Selected probability mass per flow set.
    pub fn coverage(&self, probs: &[f64]) -> Vec<f64> {
        self.z
            .iter()
            .map(|row| row.iter().zip(probs).filter(|(z, _)| **z).map(|(_, p)| p).sum())
            .collect()
    }

    fn column(&self, q: usize) -> Vec<bool> {
        self.z.iter().map(|row| row[q]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectResult {
    pub alpha: f64,
    pub routing: ProbRouting,
    pub selection: CriticalSelection,
    pub report: LossReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectOptions {
    pub node_budget: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            node_budget: MipOptions::default().node_budget,
        }
    }
}

/// Solves the full selection-and-routing MIP.
pub fn solve_direct_mip(pinst: &ProbabilisticInstance, options: &DirectOptions) -> Result<DirectResult> {
    let prep = Prepared::new(pinst)?;
    let nq = prep.num_scenarios();
    let mut lp = LinearProgram::minimize();
    let alpha = lp.add_nonneg("alpha");
    lp.set_objective(vec![(alpha, 1.0)]);
    let z: Vec<Vec<VarId>> = (0..prep.sets.len())
        .map(|a| (0..nq).map(|q| lp.add_binary(format!("z_{a}_{q}"))).collect())
        .collect();
    for (a, s) in prep.sets.iter().enumerate() {
        let terms = (0..nq).map(|q| (z[a][q], prep.probs[q])).collect();
        lp.add_row(format!("avail_{a}"), terms, Sense::Ge, s.beta - COVERAGE_TOL);
    }
    let blocks: Vec<Block> = (0..nq)
        .map(|q| {
            prep.scenario_block(&mut lp, q, |a, l| {
                (vec![(l, 1.0), (alpha, -1.0), (z[a][q], 1.0)], 1.0 + prep.sets[a].threshold)
            })
        })
        .collect();
    let sol = match solve_mip_with(
        &lp,
        &MipOptions {
            node_budget: options.node_budget,
        },
    ) {
        Ok(sol) => optimal(sol, "selection MIP")?,
        Err(e) => return Err(e.into()),
    };
    let mut routing = ProbRouting {
        alloc: Vec::with_capacity(nq),
        loss: vec![vec![0.0; nq]; prep.sets.len()],
    };
    for (q, b) in blocks.iter().enumerate() {
        let (alloc, mut loss) = prep.read_block(&sol, b);
        prep.tighten(q, &alloc, &mut loss);
        for (a, l) in loss.into_iter().enumerate() {
            routing.loss[a][q] = l;
        }
        routing.alloc.push(alloc);
    }
    let selection = CriticalSelection {
        z: z.iter()
            .map(|row| row.iter().map(|&v| sol.value(v) > 0.5).collect())
            .collect(),
    };
    let report = prep.report(&routing, pinst.beta)?;
    Ok(DirectResult {
        alpha: sol.value(alpha).max(0.0),
        routing,
        selection,
        report,
    })
}

/// Affine lower bound `constant + Σ coeffs[a]·z_aq` on the optimal loss
/// bound, from one scenario's subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub scenario: usize,
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

impl Cut {
    pub fn eval_column(&self, z: &[bool]) -> f64 {
        self.constant + self.coeffs.iter().zip(z).filter(|(_, z)| **z).map(|(c, _)| c).sum::<f64>()
    }

    pub fn eval(&self, selection: &CriticalSelection) -> f64 {
        self.eval_column(&selection.column(self.scenario))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subproblem {
    pub alpha: f64,
    pub alloc: Vec<f64>,
    pub loss: Vec<f64>,
    pub cut: Cut,
}

fn subproblem(prep: &Prepared, q: usize, z: &[bool]) -> Result<Subproblem> {
    if z.len() != prep.sets.len() {
        return Err(Error::InvalidParameter("selection column has the wrong length".into()));
    }
    let mut lp = LinearProgram::minimize();
    let alpha = lp.add_nonneg("alpha");
    lp.set_objective(vec![(alpha, 1.0)]);
    let zf = |a: usize| if z[a] { 1.0 } else { 0.0 };
    let block = prep.scenario_block(&mut lp, q, |a, l| {
        (vec![(l, 1.0), (alpha, -1.0)], 1.0 - zf(a) + prep.sets[a].threshold)
    });
    let sol = optimal(solve_lp(&lp)?, "scenario subproblem")?;
    let value = sol.value(alpha).max(0.0);
    // Shadow prices of the loss rows: raising z_a lowers the row's rhs by one.
    let duals: Vec<f64> = block.loss_rows.iter().map(|&r| sol.dual(r)).collect();
    let coeffs: Vec<f64> = duals.iter().map(|d| (-d).max(0.0)).collect();
    let constant = value - (0..z.len()).map(|a| coeffs[a] * zf(a)).sum::<f64>();
    let (alloc, mut loss) = prep.read_block(&sol, &block);
    prep.tighten(q, &alloc, &mut loss);
    Ok(Subproblem {
        alpha: value,
        alloc,
        loss,
        cut: Cut {
            scenario: q,
            constant,
            coeffs,
        },
    })
}

/// Solves scenario `q`'s routing LP for a fixed selection column and
/// returns its optimum with the resulting cut.
pub fn benders_subproblem(pinst: &ProbabilisticInstance, q: usize, z: &[bool]) -> Result<Subproblem> {
    let prep = Prepared::new(pinst)?;
    if q >= prep.num_scenarios() {
        return Err(Error::InvalidParameter(format!("scenario index {q} out of range")));
    }
    subproblem(&prep, q, z)
}

/// Restrictions applied to the master problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MasterHeuristics {
    /// Bound on the Hamming distance from `previous`.
    pub hamming_limit: Option<usize>,
    pub previous: Option<CriticalSelection>,
    /// Entries fixed to a value, `(set, scenario, value)`.
    pub fixed: Vec<(usize, usize, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterResult {
    pub selection: CriticalSelection,
    pub bound: f64,
}

/// Node budget for the Hamming-restricted master.
const STEP_NODE_BUDGET: usize = 2_000;

/// Cut `eta >= constant + sum(w_a * z_a)` with fixed entries folded into the
/// constant and each coefficient lowered as far as `eta >= 0` allows.
fn tighten_cut(cut: &Cut, fixed: &BTreeMap<(usize, usize), bool>) -> (f64, Vec<(usize, f64)>) {
    let mut constant = cut.constant;
    let mut coeffs = Vec::new();
    for (a, &w) in cut.coeffs.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        match fixed.get(&(a, cut.scenario)) {
            Some(true) => constant += w,
            Some(false) => {}
            None => coeffs.push((a, w)),
        }
    }
    let mut total: f64 = coeffs.iter().map(|(_, w)| w).sum();
    for (_, w) in coeffs.iter_mut() {
        // With this entry at zero the row is implied by eta >= 0 whenever
        // constant + (total - w) <= 0; shift that slack out of the coefficient.
        let slack = -(constant + total - *w);
        if slack > 0.0 {
            let d = slack.min(*w);
            *w -= d;
            constant += d;
            total -= d;
        }
    }
    coeffs.retain(|(_, w)| *w > 0.0);
    (constant, coeffs)
}

fn master(prep: &Prepared, cuts: &[Cut], heur: &MasterHeuristics) -> Result<Option<MasterResult>> {
    let nq = prep.num_scenarios();
    let mut lp = LinearProgram::minimize();
    let eta = lp.add_nonneg("eta");
    lp.set_objective(vec![(eta, 1.0)]);
    let z: Vec<Vec<VarId>> = (0..prep.sets.len())
        .map(|a| (0..nq).map(|q| lp.add_binary(format!("z_{a}_{q}"))).collect())
        .collect();
    for &(a, q, v) in &heur.fixed {
        let b = if v { 1.0 } else { 0.0 };
        lp.add_row(format!("fix_{a}_{q}"), vec![(z[a][q], 1.0)], Sense::Eq, b);
    }
    for (a, s) in prep.sets.iter().enumerate() {
        let terms = (0..nq).map(|q| (z[a][q], prep.probs[q])).collect();
        lp.add_row(format!("avail_{a}"), terms, Sense::Ge, s.beta - COVERAGE_TOL);
    }
    let fixed_value: BTreeMap<(usize, usize), bool> = heur.fixed.iter().map(|&(a, q, v)| ((a, q), v)).collect();
    for (i, c) in cuts.iter().enumerate() {
        let (constant, coeffs) = tighten_cut(c, &fixed_value);
        if constant + coeffs.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            continue;
        }
        let mut terms = vec![(eta, 1.0)];
        terms.extend(coeffs.into_iter().map(|(a, w)| (z[a][c.scenario], -w)));
        lp.add_row(format!("cut_{i}"), terms, Sense::Ge, constant);
    }
    if let (Some(limit), Some(prev)) = (heur.hamming_limit, &heur.previous) {
        let mut terms = Vec::new();
        let mut ones = 0.0;
        for (a, row) in prev.z.iter().enumerate() {
            for (q, &on) in row.iter().enumerate() {
                if on {
                    terms.push((z[a][q], -1.0));
                    ones += 1.0;
                } else {
                    terms.push((z[a][q], 1.0));
                }
            }
        }
        lp.add_row("hamming", terms, Sense::Le, limit as f64 - ones);
    }
    // The Hamming-restricted master only picks the next step, so its best
    // point after a limited search is good enough.
    let restricted = heur.hamming_limit.is_some() && heur.previous.is_some();
    let options = if restricted {
        MipOptions {
            node_budget: STEP_NODE_BUDGET,
        }
    } else {
        MipOptions::default()
    };
    let sol = match solve_mip_with(&lp, &options) {
        Ok(sol) => sol,
        Err(LpError::BudgetExceeded {
            incumbent: Some(best), ..
        }) if restricted => *best,
        Err(LpError::BudgetExceeded { incumbent: None, .. }) if restricted => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    if sol.status != Status::Optimal {
        return Ok(None);
    }
    Ok(Some(MasterResult {
        selection: CriticalSelection {
            z: z.iter()
                .map(|row| row.iter().map(|&v| sol.value(v) > 0.5).collect())
                .collect(),
        },
        bound: sol.value(eta).max(0.0),
    }))
}

/// Minimizes the cut envelope over selections meeting every availability
/// target. Returns `None` when the heuristic restrictions leave no
/// feasible selection.
pub fn benders_master(pinst: &ProbabilisticInstance, cuts: &[Cut], heur: &MasterHeuristics) -> Result<Option<MasterResult>> {
    let prep = Prepared::new(pinst)?;
    prep.check_targets()?;
    master(&prep, cuts, heur)
}

/// Selection with `z_aq = 1` exactly where set `a` is connected in `q`.
pub fn connected_selection(pinst: &ProbabilisticInstance) -> Result<CriticalSelection> {
    Ok(CriticalSelection {
        z: Prepared::new(pinst)?.connected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersOptions {
    pub max_iterations: usize,
    /// Hamming-ball step limit as a fraction of the free selection entries;
    /// doubled whenever an iteration does not improve the incumbent.
    pub hamming_fraction: Option<f64>,
    /// Fix all entries of lossless scenarios to one and skip their subproblems.
    pub prune_perfect: bool,
    /// Fix entries of disconnected flow sets to zero.
    pub fix_disconnected: bool,
    pub tolerance: f64,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions {
            max_iterations: 50,
            hamming_fraction: Some(0.1),
            prune_perfect: true,
            fix_disconnected: true,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersState {
    pub cuts: Vec<Cut>,
    pub incumbent: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub incumbent_history: Vec<f64>,
    pub lower_bound_history: Vec<f64>,
    /// Selection whose subproblems produced the incumbent.
    pub selection: CriticalSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersResult {
    pub routing: ProbRouting,
    pub report: LossReport,
    pub state: BendersState,
}

fn solve_all(prep: &Prepared, sel: &CriticalSelection, skip: &[bool]) -> Result<Vec<Option<Subproblem>>> {
    (0..prep.num_scenarios())
        .into_par_iter()
        .map(|q| {
            if skip[q] {
                Ok(None)
            } else {
                subproblem(prep, q, &sel.column(q)).map(Some)
            }
        })
        .collect()
}

/// Benders decomposition. Iteration zero solves every subproblem with all
/// flow sets selected; later iterations alternate master and subproblems
/// until the master bound meets the incumbent or the iteration limit.
pub fn benders_run(pinst: &ProbabilisticInstance, options: &BendersOptions) -> Result<BendersResult> {
    if options.max_iterations == 0 {
        return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
    }
    let prep = Prepared::new(pinst)?;
    prep.check_targets()?;
    let nq = prep.num_scenarios();
    let ns = prep.sets.len();
    let tol = options.tolerance;

    let all = CriticalSelection { z: vec![vec![true; nq]; ns] };
    let first = solve_all(&prep, &all, &vec![false; nq])?;
    let mut cuts: Vec<Cut> = Vec::new();
    let mut alloc: Vec<Vec<f64>> = Vec::with_capacity(nq);
    let mut loss = vec![vec![0.0; nq]; ns];
    let mut perfect = vec![false; nq];
    for (q, sub) in first.into_iter().enumerate() {
        let sub = sub.expect("solved");
        perfect[q] = options.prune_perfect && sub.alpha <= tol;
        for a in 0..ns {
            loss[a][q] = sub.loss[a];
        }
        alloc.push(sub.alloc);
        if !perfect[q] {
            cuts.push(sub.cut);
        }
    }
    let mut best = ProbRouting { alloc, loss };
    let mut incumbent = prep.report(&best, pinst.beta)?.threshold_excess;
    let mut best_sel = all;

    let mut fixed = Vec::new();
    for q in 0..nq {
        for a in 0..ns {
            if perfect[q] {
                fixed.push((a, q, true));
            } else if options.fix_disconnected && !prep.connected[a][q] {
                fixed.push((a, q, false));
            }
        }
    }
    let free = ns * nq - fixed.len();
    let mut hamming = options
        .hamming_fraction
        .map(|f| ((f * free as f64).ceil() as usize).max(1));
    let mut previous = CriticalSelection {
        z: (0..ns)
            .map(|a| (0..nq).map(|q| perfect[q] || prep.connected[a][q]).collect())
            .collect(),
    };

    let mut lower_bound: f64 = 0.0;
    let mut incumbent_history = vec![incumbent];
    let mut lower_bound_history = vec![lower_bound];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let free_heur = MasterHeuristics {
            fixed: fixed.clone(),
            ..Default::default()
        };
        let Some(relaxed) = master(&prep, &cuts, &free_heur)? else {
            let flow = prep.sets.first().map(|s| s.id.clone()).unwrap_or_default();
            return Err(Error::InfeasibleTarget { flow });
        };
        lower_bound = lower_bound.max(relaxed.bound);
        if lower_bound >= incumbent - tol {
            converged = true;
            lower_bound = lower_bound.min(incumbent);
            incumbent_history.push(incumbent);
            lower_bound_history.push(lower_bound);
            break;
        }
        let step = match hamming {
            Some(limit) if limit < free => {
                let heur = MasterHeuristics {
                    hamming_limit: Some(limit),
                    previous: Some(previous.clone()),
                    fixed: fixed.clone(),
                };
                master(&prep, &cuts, &heur)?.map(|m| m.selection).unwrap_or(relaxed.selection)
            }
            _ => relaxed.selection,
        };
        let subs = solve_all(&prep, &step, &perfect)?;
        let mut routing = best.clone();
        for (q, sub) in subs.into_iter().enumerate() {
            if let Some(sub) = sub {
                for a in 0..ns {
                    routing.loss[a][q] = sub.loss[a];
                }
                routing.alloc[q] = sub.alloc;
                cuts.push(sub.cut);
            }
        }
        let value = prep.report(&routing, pinst.beta)?.threshold_excess;
        if value < incumbent - tol {
            incumbent = value;
            best = routing;
            best_sel = step.clone();
        } else if let Some(h) = hamming.as_mut() {
            *h = h.saturating_mul(2);
        }
        previous = step;
        incumbent_history.push(incumbent);
        lower_bound_history.push(lower_bound);
    }
    let report = prep.report(&best, pinst.beta)?;
    Ok(BendersResult {
        routing: best,
        report,
        state: BendersState {
            cuts,
            incumbent,
            lower_bound,
            iterations,
            converged,
            incumbent_history,
            lower_bound_history,
            selection: best_sel,
        },
    })
}

/// Per-scenario baseline: each scenario minimizes its largest flow-set loss,
/// then the total loss at that level.
pub fn solve_min_max(pinst: &ProbabilisticInstance) -> Result<(ProbRouting, LossReport)> {
    let prep = Prepared::new(pinst)?;
    let ns = prep.sets.len();
    let per_q: Vec<(Vec<f64>, Vec<f64>)> = (0..prep.num_scenarios())
        .into_par_iter()
        .map(|q| {
            let first = subproblem(&prep, q, &vec![true; ns])?;
            let mut lp = LinearProgram::minimize();
            let block = prep.scenario_block(&mut lp, q, |_, l| (vec![(l, 1.0)], first.alpha + 1e-9));
            lp.set_objective(block.l.iter().map(|&l| (l, 1.0)).collect());
            let sol = optimal(solve_lp(&lp)?, "min-max secondary")?;
            let (alloc, mut loss) = prep.read_block(&sol, &block);
            prep.tighten(q, &alloc, &mut loss);
            Ok((alloc, loss))
        })
        .collect::<Result<_>>()?;
    let mut routing = ProbRouting {
        alloc: Vec::new(),
        loss: vec![Vec::new(); ns],
    };
    for (alloc, loss) in per_q {
        routing.alloc.push(alloc);
        for (a, l) in loss.into_iter().enumerate() {
            routing.loss[a].push(l);
        }
    }
    let report = prep.report(&routing, pinst.beta)?;
    Ok((routing, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvarVariant {
    /// Per-flow CVaR, routing chosen per scenario.
    FlowAdaptive,
    /// Per-flow CVaR, one allocation for every scenario.
    FlowStatic,
    /// CVaR of the per-scenario maximum loss, one allocation with
    /// proportional rescaling onto live tunnels.
    ScenStatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarResult {
    pub routing: ProbRouting,
    pub report: LossReport,
    /// Optimal objective of the CVaR program.
    pub cvar: f64,
}

/// CVaR-minimizing routing (Rockafellar–Uryasev linearization).
pub fn solve_cvar(pinst: &ProbabilisticInstance, variant: CvarVariant) -> Result<CvarResult> {
    let prep = Prepared::new(pinst)?;
    let nq = prep.num_scenarios();
    let ns = prep.sets.len();
    let nt = pinst.instance.tunnels.len();
    let links = &pinst.instance.topology.links;
    let mut lp = LinearProgram::minimize();
    let theta = lp.add_var("theta", None, None);
    lp.set_objective(vec![(theta, 1.0)]);

    let static_x: Option<Vec<VarId>> = (variant != CvarVariant::FlowAdaptive).then(|| {
        let x: Vec<VarId> = (0..nt).map(|t| lp.add_nonneg(format!("x_{t}"))).collect();
        for (e, link) in links.iter().enumerate() {
            let terms: Vec<(VarId, f64)> = (0..nt)
                .filter(|&t| prep.idx.tunnel_links[t].contains(&e))
                .map(|t| (x[t], 1.0))
                .collect();
            if !terms.is_empty() {
                lp.add_row(format!("cap_{e}"), terms, Sense::Le, link.capacity);
            }
        }
        x
    });

    let mut blocks = Vec::new();
    let mut losses: Vec<Vec<VarId>> = vec![Vec::new(); ns];
    for q in 0..nq {
        match &static_x {
            None => {
                let b = prep.scenario_block(&mut lp, q, |_, l| (vec![(l, 1.0)], 1.0));
                for a in 0..ns {
                    losses[a].push(b.l[a]);
                }
                blocks.push(b);
            }
            Some(x) => {
                let l: Vec<VarId> = (0..ns)
                    .map(|a| lp.add_var(format!("l_{a}_{q}"), Some(0.0), Some(1.0)))
                    .collect();
                for (pi, tunnels) in prep.pair_tunnels.iter().enumerate() {
                    let mut terms: Vec<(VarId, f64)> = tunnels
                        .iter()
                        .filter(|&&t| prep.alive[q][t])
                        .map(|&t| (x[t], 1.0))
                        .collect();
                    let mut total = 0.0;
                    for (a, s) in prep.sets.iter().enumerate() {
                        for &(p, d) in &s.demand {
                            if p == pi {
                                terms.push((l[a], d));
                                total += d;
                            }
                        }
                    }
                    lp.add_row(format!("dem_{pi}_{q}"), terms, Sense::Ge, total);
                }
                for a in 0..ns {
                    losses[a].push(l[a]);
                }
            }
        }
    }

    let tail = |beta: f64| if beta < 1.0 { 1.0 / (1.0 - beta) } else { 1e9 };
    match variant {
        CvarVariant::FlowAdaptive | CvarVariant::FlowStatic => {
            for (a, s) in prep.sets.iter().enumerate() {
                let var = lp.add_var(format!("var_{a}"), None, None);
                let mut terms = vec![(theta, 1.0), (var, -1.0)];
                for q in 0..nq {
                    let sv = lp.add_nonneg(format!("s_{a}_{q}"));
                    lp.add_row(format!("tail_{a}_{q}"), vec![(var, 1.0), (sv, 1.0), (losses[a][q], -1.0)], Sense::Ge, 0.0);
                    terms.push((sv, -tail(s.beta) * prep.probs[q]));
                }
                lp.add_row(format!("theta_{a}"), terms, Sense::Ge, 0.0);
            }
        }
        CvarVariant::ScenStatic => {
            let var = lp.add_var("var", None, None);
            let mut terms = vec![(theta, 1.0), (var, -1.0)];
            for q in 0..nq {
                let sv = lp.add_nonneg(format!("s_{q}"));
                for a in 0..ns {
                    lp.add_row(format!("tail_{a}_{q}"), vec![(var, 1.0), (sv, 1.0), (losses[a][q], -1.0)], Sense::Ge, 0.0);
                }
                terms.push((sv, -tail(pinst.beta) * prep.probs[q]));
            }
            lp.add_row("theta", terms, Sense::Ge, 0.0);
        }
    }

    let sol = optimal(solve_lp(&lp)?, "CVaR program")?;
    let routing = match &static_x {
        None => {
            let mut r = ProbRouting {
                alloc: Vec::new(),
                loss: vec![vec![0.0; nq]; ns],
            };
            for (q, b) in blocks.iter().enumerate() {
                let (alloc, mut loss) = prep.read_block(&sol, b);
                prep.tighten(q, &alloc, &mut loss);
                for (a, l) in loss.into_iter().enumerate() {
                    r.loss[a][q] = l;
                }
                r.alloc.push(alloc);
            }
            r
        }
        Some(x) => {
            let alloc: Vec<f64> = x.iter().map(|&v| sol.value(v).max(0.0)).collect();
            prep.static_losses(&alloc)
        }
    };
    let report = prep.report(&routing, pinst.beta)?;
    Ok(CvarResult {
        routing,
        report,
        cvar: sol.value(theta),
    })
}

/// Largest target in {0.9, 0.99, 0.999, 0.9999} for which every flow set is
/// connected in scenarios carrying at least that much probability.
pub fn auto_beta(pinst: &ProbabilisticInstance) -> Result<Option<f64>> {
    let prep = Prepared::new(pinst)?;
    let worst = prep
        .connected
        .iter()
        .map(|row| row.iter().zip(&prep.probs).filter(|(c, _)| **c).map(|(_, p)| p).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok([0.9999, 0.999, 0.99, 0.9]
        .into_iter()
        .find(|b| worst >= b - COVERAGE_TOL))
}

/// Scenario ids as link lists, for reports.
pub fn scenario_labels(pinst: &ProbabilisticInstance) -> Vec<String> {
    pinst.scenarios.iter().map(|s| s.to_string()).collect()
}

/// Links failed in a scenario, in topology order.
pub fn failed_links(pinst: &ProbabilisticInstance, q: usize) -> Vec<LinkId> {
    pinst.scenarios[q].failed_links.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;
    use crate::net::Link;

    fn flow_pinst(n: f64) -> ProbabilisticInstance {
        ProbabilisticInstance::from_link_probs(fixtures::flow_example_scaled(n), 0.99, DEFAULT_CUTOFF).unwrap()
    }

    /// Every failure set kept, so probabilities sum to one.
    fn flow_pinst_complete(n: f64) -> ProbabilisticInstance {
        ProbabilisticInstance::from_link_probs(fixtures::flow_example_scaled(n), 0.99, 1e-12).unwrap()
    }

    fn index_of(pinst: &ProbabilisticInstance, failed: &[&str]) -> usize {
        let want = Scenario::new(failed).failed_links;
        pinst.scenarios.iter().position(|s| s.failed_links == want).unwrap()
    }

    #[test]
    fn independent_scenarios() {
        let topo = Topology::new(
            &["a", "b"],
            vec![
                {
                    let mut l = Link::new("x", "a", "b", 1.0);
                    l.fail_prob = Some(0.01);
                    l
                },
                {
                    let mut l = Link::new("y", "a", "b", 1.0);
                    l.fail_prob = Some(0.01);
                    l
                },
            ],
        );
        let s = enumerate_prob_scenarios(&topo, DEFAULT_CUTOFF).unwrap();
        let probs: Vec<f64> = s.iter().map(|s| s.prob.unwrap()).collect();
        assert_eq!(s.len(), 4);
        for (got, want) in probs.iter().zip([0.9801, 0.0099, 0.0099, 0.0001]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let mut small = topo.clone();
        for l in &mut small.links {
            l.fail_prob = Some(1e-4);
        }
        let s = enumerate_prob_scenarios(&small, DEFAULT_CUTOFF).unwrap();
        assert_eq!(s.len(), 3);
        let total: f64 = s.iter().map(|s| s.prob.unwrap()).sum();
        assert!(total <= 1.0 && total >= 1.0 - 1e-7);

        let mut missing = topo;
        missing.links[0].fail_prob = None;
        assert!(enumerate_prob_scenarios(&missing, DEFAULT_CUTOFF).is_err());
    }

    #[test]
    fn weibull_sampling() {
        let topo = Topology::new(
            &["a", "b"],
            (0..1000).map(|i| Link::new(&format!("l{i}"), "a", "b", 1.0)).collect(),
        );
        let a = sample_link_probs(&topo, WeibullParams::default(), 7).unwrap();
        let b = sample_link_probs(&topo, WeibullParams::default(), 7).unwrap();
        assert_eq!(a, b);
        let mut p: Vec<f64> = a.links.iter().map(|l| l.fail_prob.unwrap()).collect();
        assert!(p.iter().all(|&x| x > 0.0 && x < 0.5));
        p.sort_by(f64::total_cmp);
        let median = p[500];
        assert!((5e-4..=2e-3).contains(&median), "median {median}");
        let tiny = sample_link_probs(&topo, WeibullParams { shape: 0.8, scale: 1e-12 }, 7).unwrap();
        assert!(tiny.links.iter().all(|l| l.fail_prob.unwrap() < 1e-6));
        assert!(sample_link_probs(&topo, WeibullParams { shape: 0.0, scale: 1.0 }, 1).is_err());
    }

    #[test]
    fn risk_measures() {
        let losses = [0.0, 0.05, 0.10];
        let probs = [0.9, 0.09, 0.01];
        assert_eq!(value_at_risk(&losses, &probs, 0.9), Some(0.0));
        assert_abs_diff_eq!(conditional_value_at_risk(&losses, &probs, 0.9).unwrap(), 0.055, epsilon = 1e-12);
        assert_eq!(value_at_risk(&[0.3], &[1.0], 0.99), Some(0.3));
        assert_eq!(value_at_risk(&[0.3], &[0.5], 0.99), None);
    }

    #[test]
    fn direct_mip_beats_min_max_on_flow_example() {
        let pinst = flow_pinst(1.0);
        assert_eq!(pinst.scenarios.len(), 8);
        let direct = solve_direct_mip(&pinst, &DirectOptions::default()).unwrap();
        assert_abs_diff_eq!(direct.alpha, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(direct.report.max_flow_pct_loss, 0.0, epsilon = 1e-9);
        for c in direct.selection.coverage(&pinst.probs()) {
            assert!(c >= 0.99 - COVERAGE_TOL);
        }
        let (_, base) = solve_min_max(&pinst).unwrap();
        assert_abs_diff_eq!(base.flow_loss[0].1, 0.5, epsilon = 1e-7);
        assert!(base.max_flow_pct_loss <= base.scen_pct_loss + 1e-12);
    }

    #[test]
    fn scaled_flow_example() {
        let n = 3.0;
        let pinst = flow_pinst_complete(n);
        assert_eq!(pinst.scenarios.len(), 16);
        let (base, _) = solve_min_max(&pinst).unwrap();
        let q = index_of(&pinst, &["AD"]);
        let worst = base.loss.iter().map(|l| l[q]).fold(0.0, f64::max);
        assert_abs_diff_eq!(worst, 1.0 - 1.0 / (n + 1.0), epsilon = 1e-7);
        let direct = solve_direct_mip(&pinst, &DirectOptions::default()).unwrap();
        assert_abs_diff_eq!(direct.alpha, 0.0, epsilon = 1e-9);
        // f2 must give up every AD failure, so the mass dropped by the
        // default cutoff leaves it just short of 0.99.
        let trimmed = solve_direct_mip(&flow_pinst(n), &DirectOptions::default()).unwrap();
        assert!(trimmed.alpha > 0.1);
    }

    #[test]
    fn subproblem_values_and_tight_cuts() {
        let pinst = flow_pinst(1.0);
        let none = index_of(&pinst, &[]);
        let s = benders_subproblem(&pinst, none, &[true, true]).unwrap();
        assert_abs_diff_eq!(s.alpha, 0.0, epsilon = 1e-9);
        let q = index_of(&pinst, &["AD"]);
        let s = benders_subproblem(&pinst, q, &[false, false]).unwrap();
        assert_abs_diff_eq!(s.alpha, 0.0, epsilon = 1e-9);
        let s = benders_subproblem(&pinst, q, &[true, false]).unwrap();
        assert_abs_diff_eq!(s.alpha, 0.0, epsilon = 1e-9);
        let s = benders_subproblem(&pinst, q, &[true, true]).unwrap();
        assert_abs_diff_eq!(s.alpha, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s.cut.eval_column(&[true, true]), 0.5, epsilon = 1e-9);
        // The cut underestimates the value at every other column.
        for z in [[false, false], [true, false], [false, true]] {
            let v = benders_subproblem(&pinst, q, &z).unwrap().alpha;
            assert!(s.cut.eval_column(&z) <= v + 1e-9);
        }
    }

    #[test]
    fn master_basics() {
        let pinst = flow_pinst(1.0);
        let start = connected_selection(&pinst).unwrap();
        let q = index_of(&pinst, &["AD", "AB"]);
        assert!(!start.z[0][q]);
        assert!(start.z[1][index_of(&pinst, &["AD"])]);

        let nq = pinst.scenarios.len();
        let constant = Cut {
            scenario: 0,
            constant: 0.3,
            coeffs: vec![0.0; 2],
        };
        let m = benders_master(&pinst, &[constant.clone()], &MasterHeuristics::default()).unwrap().unwrap();
        assert_abs_diff_eq!(m.bound, 0.3, epsilon = 1e-9);
        let negative = Cut { constant: -0.4, ..constant };
        let m = benders_master(&pinst, &[negative], &MasterHeuristics::default()).unwrap().unwrap();
        assert_abs_diff_eq!(m.bound, 0.0, epsilon = 1e-9);

        let prev = CriticalSelection { z: vec![vec![true; nq]; 2] };
        let heur = MasterHeuristics {
            hamming_limit: Some(0),
            previous: Some(prev.clone()),
            fixed: vec![],
        };
        let m = benders_master(&pinst, &[], &heur).unwrap().unwrap();
        assert_eq!(m.selection, prev);
    }

    #[test]
    fn unreachable_target_is_reported() {
        let mut pinst = flow_pinst(1.0);
        pinst.beta = 0.99999;
        assert!(matches!(
            benders_run(&pinst, &BendersOptions::default()),
            Err(Error::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn benders_on_fixtures() {
        let pinst = flow_pinst(1.0);
        let r = benders_run(
            &pinst,
            &BendersOptions {
                max_iterations: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(r.state.incumbent, 0.0, epsilon = 1e-9);
        assert!(r.state.converged);
        assert!(r.state.lower_bound >= r.state.incumbent - 1e-9);

        let cvar = ProbabilisticInstance::from_link_probs(fixtures::cvar_topo(), 0.99, DEFAULT_CUTOFF).unwrap();
        let r = benders_run(&cvar, &BendersOptions::default()).unwrap();
        assert_abs_diff_eq!(r.report.max_flow_pct_loss, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn cvar_on_cvar_topo() {
        let pinst = ProbabilisticInstance::from_link_probs(fixtures::cvar_topo(), 0.99, DEFAULT_CUTOFF).unwrap();
        for v in [CvarVariant::FlowAdaptive, CvarVariant::FlowStatic] {
            let r = solve_cvar(&pinst, v).unwrap();
            assert_abs_diff_eq!(r.cvar, 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(r.report.max_flow_cvar, 1.0, epsilon = 1e-6);
        }
        let direct = solve_direct_mip(&pinst, &DirectOptions::default()).unwrap();
        assert_abs_diff_eq!(direct.alpha, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn lossless_single_scenario_has_zero_cvar() {
        let inst = fixtures::cvar_topo();
        let pinst = ProbabilisticInstance::with_scenarios(
            inst,
            vec![Scenario {
                failed_links: Default::default(),
                prob: Some(1.0),
            }],
            0.9,
        )
        .unwrap();
        for v in [CvarVariant::FlowAdaptive, CvarVariant::FlowStatic, CvarVariant::ScenStatic] {
            assert_abs_diff_eq!(solve_cvar(&pinst, v).unwrap().cvar, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn thresholds_and_per_flow_targets() {
        let mut inst = fixtures::flow_example();
        // Both flows tolerate half loss: the min-max split already suffices.
        for d in &mut inst.demands {
            d.loss_threshold = Some(0.5);
        }
        let mut pinst = ProbabilisticInstance::from_link_probs(inst, 0.999, DEFAULT_CUTOFF).unwrap();
        let r = solve_direct_mip(&pinst, &DirectOptions::default()).unwrap();
        assert_abs_diff_eq!(r.alpha, 0.0, epsilon = 1e-9);

        pinst.instance.demands[0].loss_threshold = None;
        pinst.instance.demands[1].loss_threshold = None;
        pinst.instance.demands[1].beta = Some(0.9);
        let r = solve_direct_mip(&pinst, &DirectOptions::default()).unwrap();
        let cover = r.selection.coverage(&pinst.probs());
        assert!(cover[0] >= 0.999 - COVERAGE_TOL);
        assert!(cover[1] >= 0.9 - COVERAGE_TOL);
    }

    #[test]
    fn flow_sets_take_the_worst_member() {
        let mut pinst = flow_pinst(1.0);
        pinst.flow_sets = Some(vec![FlowSet {
            id: "both".into(),
            flows: vec!["f1".into(), "f2".into()],
            beta: None,
            threshold: None,
        }]);
        let r = solve_direct_mip(&pinst, &DirectOptions::default()).unwrap();
        // Both flows must now be whole in the same 99% of mass, which rules
        // out giving the AD-failure scenarios to f2 alone.
        assert_abs_diff_eq!(r.alpha, 0.5, epsilon = 1e-7);
        assert_eq!(flow_set_ids(&pinst).unwrap(), vec!["both".to_string()]);
    }

    #[test]
    fn auto_target() {
        // Connectivity, not loss, decides: f1 is cut off only by double failures.
        assert_eq!(auto_beta(&flow_pinst(1.0)).unwrap(), Some(0.9999));
        let cvar = ProbabilisticInstance::from_link_probs(fixtures::cvar_topo(), 0.99, DEFAULT_CUTOFF).unwrap();
        assert_eq!(auto_beta(&cvar).unwrap(), Some(0.99));
    }
}
