//! Best-bound branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::solve_lp_with_bounds;
use super::{LinearProgram, LpError, ObjectiveSense, Sense, Solution, Status};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct MipOptions {
    pub node_budget: usize,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            node_budget: 100_000,
        }
    }
}

/// Solves a program with binary variables to proven optimality.
pub fn solve_mip<T: Scalar>(lp: &LinearProgram<T>) -> Result<Solution<T>, LpError<T>> {
    solve_mip_with(lp, &MipOptions::default())
}

struct Node<T> {
    /// Relaxation bound in minimization form.
    bound: T,
    depth: usize,
    seq: usize,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Node<T> {}
impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Node<T> {
    // BinaryHeap pops the maximum: smallest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Nodes between rounding-heuristic attempts (the root always tries).
const ROUNDING_PERIOD: usize = 16;

/// Node bounds with every binary fixed: to the nearest integer, or upward
/// for any fractional value when `up` is set.
fn rounded_bounds<T: Scalar>(
    node: &Node<T>,
    primal: &[T],
    binaries: &[usize],
    up: bool,
    int_tol: &T,
) -> (Vec<Option<T>>, Vec<Option<T>>) {
    let mut lower = node.lower.clone();
    let mut upper = node.upper.clone();
    for &j in binaries {
        let v = primal[j].clone();
        let r = if up && v > int_tol.clone() {
            T::one()
        } else {
            v.round_nearest()
        };
        lower[j] = Some(r.clone());
        upper[j] = Some(r);
    }
    (lower, upper)
}

/// Largest value of `a * x` over `x` in `[lo, hi]`, `None` when unbounded.
fn max_term<T: Scalar>(a: &T, lo: &Option<T>, hi: &Option<T>) -> Option<T> {
    if *a > T::zero() {
        hi.as_ref().map(|h| a.clone() * h.clone())
    } else {
        lo.as_ref().map(|l| a.clone() * l.clone())
    }
}

/// Fixes binaries that a single row forces to one value given the current
/// bounds, repeating until nothing changes. Returns `false` when some row
/// cannot be satisfied at all.
fn propagate_binaries<T: Scalar>(lp: &LinearProgram<T>, lower: &mut [Option<T>], upper: &mut [Option<T>]) -> bool {
    let tol = T::feas_tol();
    loop {
        let mut changed = false;
        for row in &lp.rows {
            let signs: &[T] = match row.sense {
                Sense::Ge => &[T::one()],
                Sense::Le => &[-T::one()],
                Sense::Eq => &[T::one(), -T::one()],
            };
            for sign in signs {
                // Row as sum(c * x) >= rhs with c = sign * a.
                let rhs = sign.clone() * row.rhs.clone();
                let mut max_act = T::zero();
                let mut bounded = true;
                for (v, a) in &row.coeffs {
                    let c = sign.clone() * a.clone();
                    match max_term(&c, &lower[v.0], &upper[v.0]) {
                        Some(t) => max_act = max_act + t,
                        None => {
                            bounded = false;
                            break;
                        }
                    }
                }
                if !bounded {
                    continue;
                }
                if max_act < rhs.clone() - tol.clone() {
                    return false;
                }
                for (v, a) in &row.coeffs {
                    let j = v.0;
                    if !lp.variables[j].binary || lower[j] == upper[j] {
                        continue;
                    }
                    let c = sign.clone() * a.clone();
                    // Moving x_j off its best value costs |c|.
                    if max_act.clone() - c.clone().abs() < rhs.clone() - tol.clone() {
                        let forced = if c > T::zero() { T::one() } else { T::zero() };
                        lower[j] = Some(forced.clone());
                        upper[j] = Some(forced);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

pub fn solve_mip_with<T: Scalar>(
    lp: &LinearProgram<T>,
    options: &MipOptions,
) -> Result<Solution<T>, LpError<T>> {
    if !lp.has_binaries() {
        return Err(LpError::Invalid("solve_mip called without binary variables".into()));
    }
    lp.check()?;
    let sign = match lp.sense {
        ObjectiveSense::Minimize => T::one(),
        ObjectiveSense::Maximize => -T::one(),
    };
    let binaries: Vec<usize> = lp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.binary)
        .map(|(i, _)| i)
        .collect();
    let int_tol = T::int_tol();
    let obj_tol = T::eps() * T::lit(1e3);

    let mut incumbent: Option<Solution<T>> = None;
    let mut incumbent_key: Option<T> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut nodes = 0usize;
    heap.push(Node {
        bound: T::zero(),
        depth: 0,
        seq,
        lower: lp.variables.iter().map(|v| v.lower.clone()).collect(),
        upper: lp.variables.iter().map(|v| v.upper.clone()).collect(),
    });
    let mut root = true;

    while let Some(node) = heap.pop() {
        if let Some(best) = &incumbent_key {
            if !root && node.bound >= best.clone() - obj_tol.clone() {
                continue;
            }
        }
        nodes += 1;
        if nodes > options.node_budget {
            return Err(LpError::BudgetExceeded {
                nodes: nodes - 1,
                incumbent: incumbent.map(Box::new),
            });
        }
        let mut node = node;
        if !propagate_binaries(lp, &mut node.lower, &mut node.upper) {
            root = false;
            continue;
        }
        let relax = solve_lp_with_bounds(lp, &node.lower, &node.upper)?;
        let was_root = root;
        root = false;
        match relax.status {
            Status::Infeasible => continue,
            Status::Unbounded => {
                if was_root {
                    return Ok(Solution::without_point(Status::Unbounded));
                }
                continue;
            }
            Status::Optimal => {}
        }
        let key = sign.clone() * relax.objective.clone();
        if let Some(best) = &incumbent_key {
            if key >= best.clone() - obj_tol.clone() {
                continue;
            }
        }

        // Most fractional binary; ties go to the lowest index.
        let half = T::one() / (T::one() + T::one());
        let mut branch: Option<(usize, T)> = None;
        for &j in &binaries {
            let v = relax.primal[j].clone();
            let frac = (v.clone() - v.round_nearest()).abs();
            if frac > int_tol {
                let dist = (v - half.clone()).abs();
                if branch.as_ref().map_or(true, |(_, d)| dist < *d) {
                    branch = Some((j, dist));
                }
            }
        }

        if branch.is_some() && (was_root || nodes % ROUNDING_PERIOD == 0) {
            for up in [false, true] {
                let (lower, upper) = rounded_bounds(&node, &relax.primal, &binaries, up, &int_tol);
                let fixed = solve_lp_with_bounds(lp, &lower, &upper)?;
                if fixed.status != Status::Optimal {
                    continue;
                }
                let k = sign.clone() * fixed.objective.clone();
                if incumbent_key.as_ref().map_or(true, |b| k < b.clone() - obj_tol.clone()) {
                    incumbent_key = Some(k);
                    incumbent = Some(fixed);
                }
            }
            if let Some(best) = &incumbent_key {
                if key >= best.clone() - obj_tol.clone() {
                    continue;
                }
            }
        }

        match branch {
            None => {
                let mut primal = relax.primal.clone();
                for &j in &binaries {
                    primal[j] = primal[j].round_nearest();
                }
                let objective = lp.objective_at(&primal);
                incumbent_key = Some(sign.clone() * objective.clone());
                incumbent = Some(Solution {
                    status: Status::Optimal,
                    primal,
                    duals: Vec::new(),
                    reduced_costs: Vec::new(),
                    objective,
                });
            }
            Some((j, _)) => {
                for value in [T::zero(), T::one()] {
                    let mut lower = node.lower.clone();
                    let mut upper = node.upper.clone();
                    lower[j] = Some(value.clone());
                    upper[j] = Some(value);
                    seq += 1;
                    heap.push(Node {
                        bound: key.clone(),
                        depth: node.depth + 1,
                        seq,
                        lower,
                        upper,
                    });
                }
            }
        }
    }

    Ok(incumbent.unwrap_or_else(|| Solution::without_point(Status::Infeasible)))
}
