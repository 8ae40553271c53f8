//! Failure polytopes over link (x), tunnel (y), condition (h) and group
//! indicators, plus their enumerated integral counterparts.
//!
//! Every indicator lives in `[0, 1]`; the bounds are implicit and not stored
//! as rows.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{link_subsets, sorted_link_order, Condition, IndexedInstance, NetworkInstance, Pair, Scenario, SCENARIO_LIMIT};

/// A failure indicator variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Indicator {
    /// `x_e`: link failed.
    Link(usize),
    /// `y_l`: tunnel failed.
    Tunnel(usize),
    /// `h_c`: condition active, indexed into the condition list given to the builder.
    Condition(usize),
    /// `h_g`: shared-risk group failed.
    Group(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolySense {
    Le,
    Eq,
}

/// What a row belongs to; used when restricting a polytope to a subset of
/// tunnels and conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowOwner {
    Budget,
    Pair(Pair),
    Tunnel(usize),
    Condition(usize),
    Link(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRow {
    /// Coefficients by position in [`FailurePolytope::variables`].
    pub coeffs: Vec<(usize, f64)>,
    pub sense: PolySense,
    pub rhs: f64,
    pub owner: RowOwner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailurePolytope {
    pub variables: Vec<Indicator>,
    pub rows: Vec<PolyRow>,
    pub budget: usize,
    #[serde(skip)]
    index: HashMap<Indicator, usize>,
}

impl FailurePolytope {
    fn empty(budget: usize) -> Self {
        FailurePolytope {
            variables: Vec::new(),
            rows: Vec::new(),
            budget,
            index: HashMap::new(),
        }
    }

    fn var(&mut self, ind: Indicator) -> usize {
        if let Some(&i) = self.index.get(&ind) {
            return i;
        }
        self.variables.push(ind);
        self.index.insert(ind, self.variables.len() - 1);
        self.variables.len() - 1
    }

    fn row(&mut self, terms: Vec<(Indicator, f64)>, sense: PolySense, rhs: f64, owner: RowOwner) {
        let coeffs = terms.into_iter().map(|(ind, c)| (self.var(ind), c)).collect();
        self.rows.push(PolyRow {
            coeffs,
            sense,
            rhs,
            owner,
        });
    }

    /// An empty polytope (only the `[0, 1]` bounds) to be filled by hand.
    pub fn new(budget: usize) -> Self {
        Self::empty(budget)
    }

    /// Appends `Σ coeff·indicator (sense) rhs`, registering new indicators.
    pub fn push_row(&mut self, terms: Vec<(Indicator, f64)>, sense: PolySense, rhs: f64, owner: RowOwner) {
        self.row(terms, sense, rhs, owner);
    }

    /// Registers an indicator without constraining it beyond `[0, 1]`.
    pub fn push_var(&mut self, ind: Indicator) -> usize {
        self.var(ind)
    }

    pub fn position(&self, ind: Indicator) -> Option<usize> {
        self.index.get(&ind).copied()
    }

    /// Whether `point` (values by variable position) lies in the polytope.
    pub fn contains(&self, point: &[f64]) -> bool {
        const TOL: f64 = 1e-9;
        if point.iter().any(|&v| !(-TOL..=1.0 + TOL).contains(&v)) {
            return false;
        }
        self.rows.iter().all(|r| {
            let lhs: f64 = r.coeffs.iter().map(|&(i, c)| c * point[i]).sum();
            match r.sense {
                PolySense::Le => lhs <= r.rhs + TOL,
                PolySense::Eq => (lhs - r.rhs).abs() <= TOL,
            }
        })
    }

    /// Evaluates an indicator assignment given as a closure.
    pub fn point(&self, value: impl Fn(Indicator) -> f64) -> Vec<f64> {
        self.variables.iter().map(|&ind| value(ind)).collect()
    }

    /// All 0/1 points of the polytope. Only for tiny polytopes.
    pub fn integral_points(&self) -> Vec<Vec<f64>> {
        let n = self.variables.len();
        assert!(n <= 22, "integral_points is meant for tiny polytopes");
        (0u64..1 << n)
            .map(|mask| (0..n).map(|i| ((mask >> i) & 1) as f64).collect::<Vec<_>>())
            .filter(|p| self.contains(p))
            .collect()
    }

    /// Projection-preserving restriction to the given tunnels and conditions
    /// (and groups, which are always kept).
    ///
    /// Dropped tunnel and condition indicators are only linked to the rest
    /// through rows that always admit a completion, and dropped link
    /// indicators can be set to zero, so the projection onto the kept
    /// indicators is unchanged.
    pub fn restrict(&self, tunnels: &BTreeSet<usize>, conditions: &BTreeSet<usize>) -> FailurePolytope {
        let mut links = BTreeSet::new();
        for row in &self.rows {
            let owner_kept = match &row.owner {
                RowOwner::Tunnel(l) => tunnels.contains(l),
                RowOwner::Condition(c) => conditions.contains(c),
                _ => false,
            };
            if owner_kept {
                for &(i, _) in &row.coeffs {
                    if let Indicator::Link(e) = self.variables[i] {
                        links.insert(e);
                    }
                }
            }
        }
        let keep_var = |ind: &Indicator| match ind {
            Indicator::Link(e) => links.contains(e),
            Indicator::Tunnel(l) => tunnels.contains(l),
            Indicator::Condition(c) => conditions.contains(c),
            Indicator::Group(_) => true,
        };
        let mut out = FailurePolytope::empty(self.budget);
        for row in &self.rows {
            let keep = match &row.owner {
                RowOwner::Budget => true,
                RowOwner::Pair(_) => row.coeffs.iter().all(|&(i, _)| keep_var(&self.variables[i])),
                RowOwner::Tunnel(l) => tunnels.contains(l),
                RowOwner::Condition(c) => conditions.contains(c),
                RowOwner::Link(e) => links.contains(e),
            };
            if !keep {
                continue;
            }
            let terms: Vec<(Indicator, f64)> = row
                .coeffs
                .iter()
                .filter(|(i, _)| keep_var(&self.variables[*i]))
                .map(|&(i, c)| (self.variables[i], c))
                .collect();
            if terms.is_empty() {
                continue;
            }
            out.row(terms, row.sense, row.rhs, row.owner.clone());
        }
        out
    }
}

/// How many simultaneous failures the polytope admits.
#[derive(Debug, Clone, PartialEq)]
pub enum FailureBudget {
    /// At most `k` links fail.
    Links(usize),
    /// At most `k` of the given dead-link groups fail; links outside every
    /// group never fail.
    Groups { groups: Vec<Condition>, k: usize },
}

/// `p_st`: the largest number of the pair's tunnels sharing one link.
pub fn max_shared(idx: &IndexedInstance, tunnels: &[usize]) -> usize {
    let mut count: HashMap<usize, usize> = HashMap::new();
    for &l in tunnels {
        for &e in &idx.tunnel_links[l] {
            *count.entry(e).or_insert(0) += 1;
        }
    }
    count.values().copied().max().unwrap_or(0)
}

/// Per pair, `Σ_{l∈T(s,t)} y_l ≤ k·p_st`. No link variables.
pub fn build_ffc_polytope(inst: &NetworkInstance, k: usize) -> Result<FailurePolytope> {
    let idx = IndexedInstance::new(inst)?;
    let mut poly = FailurePolytope::empty(k);
    for (pair, tunnels) in &idx.tunnels_by_pair {
        let p = max_shared(&idx, tunnels);
        let terms = tunnels.iter().map(|&l| (Indicator::Tunnel(l), 1.0)).collect();
        poly.row(terms, PolySense::Le, (k * p) as f64, RowOwner::Pair(pair.clone()));
    }
    Ok(poly)
}

fn add_tunnel_rows(poly: &mut FailurePolytope, idx: &IndexedInstance) {
    for (l, links) in idx.tunnel_links.iter().enumerate() {
        for &e in links {
            poly.row(
                vec![(Indicator::Link(e), 1.0), (Indicator::Tunnel(l), -1.0)],
                PolySense::Le,
                0.0,
                RowOwner::Tunnel(l),
            );
        }
        let mut terms = vec![(Indicator::Tunnel(l), 1.0)];
        terms.extend(links.iter().map(|&e| (Indicator::Link(e), -1.0)));
        poly.row(terms, PolySense::Le, 0.0, RowOwner::Tunnel(l));
    }
}

fn add_condition_rows(poly: &mut FailurePolytope, idx: &IndexedInstance, conditions: &[Condition]) -> Result<()> {
    for (c, cond) in conditions.iter().enumerate() {
        if cond.alive_links.intersection(&cond.dead_links).next().is_some() {
            return Err(Error::InvalidCondition(cond.id.to_string()));
        }
        let link = |l| {
            idx.link_index
                .get(l)
                .copied()
                .ok_or_else(|| Error::UnknownLink(l.to_string()))
        };
        let alive = cond.alive_links.iter().map(link).collect::<Result<Vec<_>>>()?;
        let dead = cond.dead_links.iter().map(link).collect::<Result<Vec<_>>>()?;
        let h = Indicator::Condition(c);
        let owner = RowOwner::Condition(c);
        if alive.is_empty() && dead.len() == 1 {
            poly.row(
                vec![(h, 1.0), (Indicator::Link(dead[0]), -1.0)],
                PolySense::Eq,
                0.0,
                owner,
            );
            continue;
        }
        for &e in &alive {
            poly.row(vec![(h, 1.0), (Indicator::Link(e), 1.0)], PolySense::Le, 1.0, owner.clone());
        }
        for &e in &dead {
            poly.row(vec![(h, 1.0), (Indicator::Link(e), -1.0)], PolySense::Le, 0.0, owner.clone());
        }
        // (1 − h) − Σ_alive x − Σ_dead (1 − x) ≤ 0
        let mut terms = vec![(h, -1.0)];
        terms.extend(alive.iter().map(|&e| (Indicator::Link(e), -1.0)));
        terms.extend(dead.iter().map(|&e| (Indicator::Link(e), 1.0)));
        poly.row(terms, PolySense::Le, dead.len() as f64 - 1.0, owner);
    }
    Ok(())
}

/// General builder: exact link-to-tunnel rows, a link or group budget, and
/// activation rows for `conditions`.
pub fn build_polytope(inst: &NetworkInstance, budget: &FailureBudget, conditions: &[Condition]) -> Result<FailurePolytope> {
    let idx = IndexedInstance::new(inst)?;
    let mut poly;
    match budget {
        FailureBudget::Links(k) => {
            poly = FailurePolytope::empty(*k);
            let terms = (0..idx.num_links()).map(|e| (Indicator::Link(e), 1.0)).collect();
            poly.row(terms, PolySense::Le, *k as f64, RowOwner::Budget);
        }
        FailureBudget::Groups { groups, k } => {
            poly = FailurePolytope::empty(*k);
            let mut member: Vec<Vec<usize>> = vec![Vec::new(); idx.num_links()];
            for (g, group) in groups.iter().enumerate() {
                if !group.alive_links.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "failure group {} must list dead links only",
                        group.id
                    )));
                }
                if group.dead_links.is_empty() {
                    return Err(Error::EmptyGroup(group.id.to_string()));
                }
                for l in &group.dead_links {
                    let e = *idx
                        .link_index
                        .get(l)
                        .ok_or_else(|| Error::UnknownLink(l.to_string()))?;
                    member[e].push(g);
                }
            }
            let terms = (0..groups.len()).map(|g| (Indicator::Group(g), 1.0)).collect();
            poly.row(terms, PolySense::Le, *k as f64, RowOwner::Budget);
            for (e, gs) in member.iter().enumerate() {
                for &g in gs {
                    poly.row(
                        vec![(Indicator::Group(g), 1.0), (Indicator::Link(e), -1.0)],
                        PolySense::Le,
                        0.0,
                        RowOwner::Link(e),
                    );
                }
                let mut terms = vec![(Indicator::Link(e), 1.0)];
                terms.extend(gs.iter().map(|&g| (Indicator::Group(g), -1.0)));
                poly.row(terms, PolySense::Le, 0.0, RowOwner::Link(e));
            }
        }
    }
    add_tunnel_rows(&mut poly, &idx);
    add_condition_rows(&mut poly, &idx, conditions)?;
    Ok(poly)
}

/// `Σ x_e ≤ k` with exact link-to-tunnel coupling.
pub fn build_exact_polytope(inst: &NetworkInstance, k: usize) -> Result<FailurePolytope> {
    build_polytope(inst, &FailureBudget::Links(k), &[])
}

/// Exact polytope extended with activation rows for `conditions`.
pub fn build_hint_polytope(inst: &NetworkInstance, k: usize, conditions: &[Condition]) -> Result<FailurePolytope> {
    build_polytope(inst, &FailureBudget::Links(k), conditions)
}

/// At most `k_groups` shared-risk groups fail; group members fail together.
pub fn build_srlg_polytope(inst: &NetworkInstance, groups: &[Condition], k_groups: usize) -> Result<FailurePolytope> {
    build_polytope(
        inst,
        &FailureBudget::Groups {
            groups: groups.to_vec(),
            k: k_groups,
        },
        &[],
    )
}

/// Integral failure pattern induced by one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelFailurePattern {
    /// Per tunnel (instance order): failed?
    pub tunnel_failed: Vec<bool>,
    /// Per condition (builder order): active?
    pub condition_active: Vec<bool>,
    /// Per group (when groups are used): failed?
    pub group_failed: Vec<bool>,
    pub failed_links: Vec<bool>,
    pub scenario: Scenario,
}

impl TunnelFailurePattern {
    /// The pattern as a point of `poly`.
    pub fn as_point(&self, poly: &FailurePolytope) -> Vec<f64> {
        poly.point(|ind| {
            let b = match ind {
                Indicator::Link(e) => self.failed_links[e],
                Indicator::Tunnel(l) => self.tunnel_failed[l],
                Indicator::Condition(c) => self.condition_active[c],
                Indicator::Group(g) => self.group_failed[g],
            };
            if b {
                1.0
            } else {
                0.0
            }
        })
    }
}

fn condition_mask(idx: &IndexedInstance, cond: &Condition, failed: &[bool]) -> Result<bool> {
    let link = |l| {
        idx.link_index
            .get(l)
            .copied()
            .ok_or_else(|| Error::UnknownLink(l.to_string()))
    };
    for l in &cond.alive_links {
        if failed[link(l)?] {
            return Ok(false);
        }
    }
    for l in &cond.dead_links {
        if !failed[link(l)?] {
            return Ok(false);
        }
    }
    Ok(true)
}

fn pattern_for(idx: &IndexedInstance, failed_idx: &[usize], conditions: &[Condition], group_failed: Vec<bool>) -> Result<TunnelFailurePattern> {
    let mask = idx.mask_from_indices(failed_idx);
    Ok(TunnelFailurePattern {
        tunnel_failed: (0..idx.tunnel_links.len()).map(|l| !idx.tunnel_alive(l, &mask)).collect(),
        condition_active: conditions
            .iter()
            .map(|c| condition_mask(idx, c, &mask))
            .collect::<Result<Vec<_>>>()?,
        group_failed,
        scenario: idx.scenario_from_indices(failed_idx),
        failed_links: mask,
    })
}

/// One pattern per scenario of `enumerate_scenarios(k)`, in that order.
pub fn enumerate_patterns(inst: &NetworkInstance, k: usize, conditions: &[Condition]) -> Result<Vec<TunnelFailurePattern>> {
    let idx = IndexedInstance::new(inst)?;
    let order = sorted_link_order(&inst.topology);
    link_subsets(&order, k, SCENARIO_LIMIT)?
        .iter()
        .map(|failed| pattern_for(&idx, failed, conditions, Vec::new()))
        .collect()
}

/// Patterns for every union of at most `k` groups, ordered by group-index
/// tuples (by size, then lexicographic).
pub fn enumerate_group_patterns(inst: &NetworkInstance, groups: &[Condition], k: usize, conditions: &[Condition]) -> Result<Vec<TunnelFailurePattern>> {
    let idx = IndexedInstance::new(inst)?;
    let order: Vec<usize> = (0..groups.len()).collect();
    let mut out = Vec::new();
    for chosen in link_subsets(&order, k, SCENARIO_LIMIT)? {
        let mut failed = BTreeSet::new();
        for &g in &chosen {
            for l in &groups[g].dead_links {
                let e = *idx
                    .link_index
                    .get(l)
                    .ok_or_else(|| Error::UnknownLink(l.to_string()))?;
                failed.insert(e);
            }
        }
        let failed: Vec<usize> = failed.into_iter().collect();
        let group_failed = (0..groups.len()).map(|g| chosen.contains(&g)).collect();
        out.push(pattern_for(&idx, &failed, conditions, group_failed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn y_of(poly: &FailurePolytope, point: &[f64], l: usize) -> f64 {
        point[poly.position(Indicator::Tunnel(l)).unwrap()]
    }

    #[test]
    fn ffc_rows_on_four_tunnel_example() {
        let inst = fixtures::four_tunnel();
        let poly = build_ffc_polytope(&inst, 1).unwrap();
        assert_eq!(poly.rows.len(), 1);
        assert_eq!(poly.rows[0].rhs, 2.0);
        assert_eq!(poly.rows[0].coeffs.len(), 4);

        let three = fixtures::four_tunnel_first_three();
        assert_eq!(build_ffc_polytope(&three, 1).unwrap().rows[0].rhs, 1.0);
        assert_eq!(build_ffc_polytope(&three, 0).unwrap().rows[0].rhs, 0.0);
    }

    #[test]
    fn exact_polytope_rules_out_t1_t2_together() {
        let inst = fixtures::four_tunnel();
        let patterns = enumerate_patterns(&inst, 1, &[]).unwrap();
        assert_eq!(patterns.len(), 9);
        assert!(!patterns.iter().any(|p| p.tunnel_failed[0] && p.tunnel_failed[1]));
        let poly = build_exact_polytope(&inst, 1).unwrap();
        for p in &patterns {
            assert!(poly.contains(&p.as_point(&poly)));
        }
    }

    #[test]
    fn zero_budget_leaves_only_all_alive() {
        let inst = fixtures::four_tunnel_first_three();
        let poly = build_exact_polytope(&inst, 0).unwrap();
        let pts = poly.integral_points();
        assert_eq!(pts, vec![vec![0.0; poly.variables.len()]]);
    }

    #[test]
    fn single_link_tunnel_tracks_its_link() {
        let inst = fixtures::parallel();
        let idx = IndexedInstance::new(&inst).unwrap();
        let poly = build_exact_polytope(&inst, 2).unwrap();
        let singles: Vec<usize> = (0..inst.tunnels.len()).filter(|&l| idx.tunnel_links[l].len() == 1).collect();
        assert!(!singles.is_empty());
        let mut sub = BTreeSet::new();
        sub.insert(singles[0]);
        let small = poly.restrict(&sub, &BTreeSet::new());
        let e = idx.tunnel_links[singles[0]][0];
        for pt in small.integral_points() {
            let x = pt[small.position(Indicator::Link(e)).unwrap()];
            assert_eq!(x, y_of(&small, &pt, singles[0]));
        }
    }

    #[test]
    fn hint_rows_match_condition_semantics() {
        let inst = fixtures::hint();
        let s4 = inst.topology.links.iter().position(|l| l.id.as_str() == "s-4").unwrap();
        let t1 = inst.topology.links.iter().position(|l| l.id.as_str() == "5-t").unwrap();
        let dead = Condition::new("d", &[], &["s-4"]);
        let alive = Condition::new("a", &["s-4"], &[]);
        let poly = build_hint_polytope(&inst, 2, &[dead, alive]).unwrap();
        let h0 = poly.position(Indicator::Condition(0)).unwrap();
        let h1 = poly.position(Indicator::Condition(1)).unwrap();
        // Fix x to a scenario and check which h values are admissible.
        let admissible = |failed: &[usize], h: usize| -> Vec<f64> {
            let mut out = Vec::new();
            for v in [0.0, 1.0] {
                for other in [0.0, 1.0] {
                    let mut pt = vec![0.0; poly.variables.len()];
                    for (i, ind) in poly.variables.iter().enumerate() {
                        if let Indicator::Link(e) = ind {
                            if failed.contains(e) {
                                pt[i] = 1.0;
                            }
                        }
                    }
                    let idx = IndexedInstance::new(&inst).unwrap();
                    let mask = idx.mask_from_indices(failed);
                    for (i, ind) in poly.variables.iter().enumerate() {
                        if let Indicator::Tunnel(l) = ind {
                            pt[i] = if idx.tunnel_alive(*l, &mask) { 0.0 } else { 1.0 };
                        }
                    }
                    pt[h] = v;
                    pt[if h == h0 { h1 } else { h0 }] = other;
                    if poly.contains(&pt) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            out
        };
        assert_eq!(admissible(&[s4, t1], h0), vec![1.0]);
        assert_eq!(admissible(&[s4], h1), vec![0.0]);
        assert_eq!(admissible(&[t1], h1), vec![1.0]);
    }

    #[test]
    fn mixed_condition_integral_points() {
        // Oracle: enumerate the three rows over (x_a, x_b, h).
        let inst = crate::net::NetworkInstance {
            topology: crate::net::Topology::new(
                &["u", "v"],
                vec![crate::net::Link::new("a", "u", "v", 1.0), crate::net::Link::new("b", "u", "v", 1.0)],
            ),
            ..Default::default()
        };
        let c = Condition::new("c", &["a"], &["b"]);
        let poly = build_hint_polytope(&inst, 2, &[c]).unwrap();
        let pts = poly.integral_points();
        let xa = poly.position(Indicator::Link(0)).unwrap();
        let xb = poly.position(Indicator::Link(1)).unwrap();
        let h = poly.position(Indicator::Condition(0)).unwrap();
        assert_eq!(pts.len(), 4);
        for p in pts {
            let expect = p[xa] == 0.0 && p[xb] == 1.0;
            assert_eq!(p[h] == 1.0, expect);
        }
    }

    #[test]
    fn overlapping_condition_is_rejected() {
        let inst = fixtures::hint();
        let bad = Condition::new("bad", &["s-4"], &["s-4"]);
        assert!(matches!(
            build_hint_polytope(&inst, 1, &[bad]),
            Err(Error::InvalidCondition(_))
        ));
    }

    #[test]
    fn srlg_groups_fail_together() {
        let inst = fixtures::hint();
        let node4 = Condition::new("node-4", &[], &["s-4", "4-1", "4-2", "4-3"]);
        let other = Condition::new("g2", &[], &["5-t"]);
        let poly = build_srlg_polytope(&inst, &[node4.clone(), other.clone()], 1).unwrap();
        let pats = enumerate_group_patterns(&inst, &[node4.clone(), other.clone()], 1, &[]).unwrap();
        assert_eq!(pats.len(), 3);
        assert_eq!(pats[1].scenario.failed_links.len(), 4);
        for p in &pats {
            assert!(poly.contains(&p.as_point(&poly)));
        }
        // Failing links of both groups violates the budget.
        let both = enumerate_group_patterns(&inst, &[node4, other], 2, &[]).unwrap();
        assert!(!poly.contains(&both.last().unwrap().as_point(&poly)));

        let zero = build_srlg_polytope(&inst, &[Condition::new("g", &[], &["5-t"])], 0).unwrap();
        let pats0 = enumerate_group_patterns(&inst, &[Condition::new("g", &[], &["5-t"])], 0, &[]).unwrap();
        assert_eq!(pats0.len(), 1);
        assert!(zero.contains(&pats0[0].as_point(&zero)));
        assert!(matches!(
            build_srlg_polytope(&inst, &[Condition::new("e", &[], &[])], 1),
            Err(Error::EmptyGroup(_))
        ));
    }

    #[test]
    fn duplicate_patterns_keep_scenarios() {
        let inst = fixtures::four_tunnel();
        let pats = enumerate_patterns(&inst, 1, &[]).unwrap();
        let first_three_links: Vec<_> = pats.iter().map(|p| p.scenario.clone()).collect();
        let unique: BTreeSet<String> = first_three_links.iter().map(|s| s.to_string()).collect();
        assert_eq!(unique.len(), pats.len());
        assert_eq!(enumerate_patterns(&inst, 0, &[]).unwrap().len(), 1);
    }
}
