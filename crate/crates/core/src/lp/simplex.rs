//! Bounded-variable primal simplex on a dense tableau.
//!
//! Rows become equalities `A x + s = b` with one slack per row whose bounds
//! encode the row sense. Rows whose slack cannot start feasible get an
//! artificial variable, removed by a phase-one pass. Pricing is Dantzig's rule;
//! after a run of degenerate pivots the solver switches to Bland's rule until
//! the objective moves again.

use super::{LinearProgram, LpError, ObjectiveSense, Sense, Solution, Status};
use crate::scalar::Scalar;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

/// Solves a continuous program. Binary flags are rejected.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<Solution<T>, LpError<T>> {
    if lp.has_binaries() {
        return Err(LpError::Invalid(
            "solve_lp called on a program with binary variables".into(),
        ));
    }
    lp.check()?;
    let lower: Vec<_> = lp.variables.iter().map(|v| v.lower.clone()).collect();
    let upper: Vec<_> = lp.variables.iter().map(|v| v.upper.clone()).collect();
    solve_lp_with_bounds(lp, &lower, &upper)
}

/// Solves the continuous relaxation of `lp` with the given variable bounds
/// in place of the declared ones. Binary flags are ignored.
pub fn solve_lp_with_bounds<T: Scalar>(
    lp: &LinearProgram<T>,
    lower: &[Option<T>],
    upper: &[Option<T>],
) -> Result<Solution<T>, LpError<T>> {
    let n = lp.variables.len();
    for j in 0..n {
        if let (Some(l), Some(u)) = (&lower[j], &upper[j]) {
            if l.clone() - u.clone() > T::feas_tol() {
                return Ok(Solution::without_point(Status::Infeasible));
            }
        }
    }

    // Merge duplicate coefficients and drop empty rows.
    let mut kept = Vec::new();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    for (idx, row) in lp.rows.iter().enumerate() {
        let mut coeffs: Vec<(usize, T)> = Vec::with_capacity(row.coeffs.len());
        let mut sorted: Vec<(usize, T)> = row.coeffs.iter().map(|(v, c)| (v.0, c.clone())).collect();
        sorted.sort_by_key(|(v, _)| *v);
        for (v, c) in sorted {
            match coeffs.last_mut() {
                Some((lv, lc)) if *lv == v => *lc = lc.clone() + c,
                _ => coeffs.push((v, c)),
            }
        }
        coeffs.retain(|(_, c)| !c.is_zero());
        if coeffs.is_empty() {
            let ok = match row.sense {
                Sense::Le => row.rhs >= -T::feas_tol(),
                Sense::Ge => row.rhs <= T::feas_tol(),
                Sense::Eq => row.rhs.abs() <= T::feas_tol(),
            };
            if !ok {
                return Ok(Solution::without_point(Status::Infeasible));
            }
            continue;
        }
        kept.push(idx);
        rows.push(coeffs);
    }

    let sign = match lp.sense {
        ObjectiveSense::Minimize => T::one(),
        ObjectiveSense::Maximize => -T::one(),
    };
    let mut cost = vec![T::zero(); n];
    for (v, c) in &lp.objective {
        cost[v.0] = cost[v.0].clone() + sign.clone() * c.clone();
    }

    let senses: Vec<Sense> = kept.iter().map(|&i| lp.rows[i].sense).collect();
    let rhs: Vec<T> = kept.iter().map(|&i| lp.rows[i].rhs.clone()).collect();
    let mut tab = Tableau::build(n, &rows, &senses, &rhs, lower, upper);

    if tab.num_artificial > 0 {
        let mut c1 = vec![T::zero(); tab.ncols];
        for c in c1.iter_mut().skip(tab.n + tab.m) {
            *c = T::one();
        }
        tab.set_costs(c1);
        tab.run()?;
        let infeas = tab
            .x
            .iter()
            .skip(tab.n + tab.m)
            .fold(T::zero(), |acc, v| acc + v.clone());
        let scale = rhs.iter().fold(T::one(), |acc, b| {
            let a = b.abs();
            if a > acc {
                a
            } else {
                acc
            }
        });
        if infeas > T::feas_tol() * scale {
            return Ok(Solution::without_point(Status::Infeasible));
        }
        tab.retire_artificials();
    }

    let mut c2 = vec![T::zero(); tab.ncols];
    c2[..n].clone_from_slice(&cost);
    tab.set_costs(c2);
    if tab.run()? == Outcome::Unbounded {
        return Ok(Solution::without_point(Status::Unbounded));
    }
    tab.refresh_basic_values(&rows, &rhs);

    let primal: Vec<T> = tab.x[..n].to_vec();
    let mut duals = vec![T::zero(); lp.rows.len()];
    for (i, &orig) in kept.iter().enumerate() {
        duals[orig] = -(sign.clone() * tab.d[n + i].clone());
    }
    let reduced_costs: Vec<T> = tab.d[..n].iter().map(|d| sign.clone() * d.clone()).collect();
    let objective = lp.objective_at(&primal);
    Ok(Solution {
        status: Status::Optimal,
        primal,
        duals,
        reduced_costs,
        objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    m: usize,
    n: usize,
    ncols: usize,
    num_artificial: usize,
    /// Row-major `B⁻¹ [A | I | art]`.
    a: Vec<T>,
    /// Reduced costs for the current cost vector.
    d: Vec<T>,
    cost: Vec<T>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    x: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Sign of each artificial column's single nonzero, indexed by row.
    art_sign: Vec<Option<(usize, T)>>,
    iterations: usize,
    max_iterations: usize,
}

impl<T: Scalar> Tableau<T> {
    fn build(
        n: usize,
        rows: &[Vec<(usize, T)>],
        senses: &[Sense],
        rhs: &[T],
        lower: &[Option<T>],
        upper: &[Option<T>],
    ) -> Self {
        let m = rows.len();
        let mut x: Vec<T> = (0..n)
            .map(|j| match (&lower[j], &upper[j]) {
                (Some(l), _) => l.clone(),
                (None, Some(u)) => u.clone(),
                (None, None) => T::zero(),
            })
            .collect();
        let mut lo: Vec<Option<T>> = lower.to_vec();
        let mut up: Vec<Option<T>> = upper.to_vec();
        for s in senses {
            let (l, u) = match s {
                Sense::Le => (Some(T::zero()), None),
                Sense::Ge => (None, Some(T::zero())),
                Sense::Eq => (Some(T::zero()), Some(T::zero())),
            };
            lo.push(l);
            up.push(u);
            x.push(T::zero());
        }

        let residual: Vec<T> = rows
            .iter()
            .zip(rhs)
            .map(|(row, b)| {
                row.iter()
                    .fold(b.clone(), |acc, (j, c)| acc - c.clone() * x[*j].clone())
            })
            .collect();
        let mut art_sign = vec![None; m];
        let mut num_artificial = 0;
        for i in 0..m {
            let r = &residual[i];
            let fits = lo[n + i].as_ref().map_or(true, |l| r >= l)
                && up[n + i].as_ref().map_or(true, |u| r <= u);
            if !fits {
                let s = if *r > T::zero() { T::one() } else { -T::one() };
                art_sign[i] = Some((n + m + num_artificial, s));
                num_artificial += 1;
            }
        }
        let ncols = n + m + num_artificial;
        for _ in 0..num_artificial {
            lo.push(Some(T::zero()));
            up.push(None);
            x.push(T::zero());
        }

        let mut a = vec![T::zero(); m * ncols];
        let mut basis = vec![0; m];
        let mut is_basic = vec![false; ncols];
        for i in 0..m {
            let base = i * ncols;
            match &art_sign[i] {
                None => {
                    for (j, c) in &rows[i] {
                        a[base + j] = c.clone();
                    }
                    a[base + n + i] = T::one();
                    basis[i] = n + i;
                    x[n + i] = residual[i].clone();
                }
                Some((col, s)) => {
                    for (j, c) in &rows[i] {
                        a[base + j] = s.clone() * c.clone();
                    }
                    a[base + n + i] = s.clone();
                    a[base + col] = T::one();
                    basis[i] = *col;
                    x[*col] = s.clone() * residual[i].clone();
                }
            }
            is_basic[basis[i]] = true;
        }
        let max_iterations = 50 * (m + ncols) + 10_000;
        Tableau {
            m,
            n,
            ncols,
            num_artificial,
            a,
            d: vec![T::zero(); ncols],
            cost: vec![T::zero(); ncols],
            lower: lo,
            upper: up,
            x,
            basis,
            is_basic,
            art_sign,
            iterations: 0,
            max_iterations,
        }
    }

    fn set_costs(&mut self, cost: Vec<T>) {
        let mut d = cost.clone();
        for i in 0..self.m {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            let base = i * self.ncols;
            for (k, dk) in d.iter_mut().enumerate() {
                let v = &self.a[base + k];
                if !v.is_zero() {
                    *dk = dk.clone() - cb.clone() * v.clone();
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = T::zero();
        }
        self.d = d;
        self.cost = cost;
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if l == u)
    }

    fn can_increase(&self, j: usize) -> bool {
        self.upper[j].as_ref().map_or(true, |u| self.x[j] < *u)
    }

    fn can_decrease(&self, j: usize) -> bool {
        self.lower[j].as_ref().map_or(true, |l| self.x[j] > *l)
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, bool)> {
        let eps = T::eps();
        let neg_eps = -eps.clone();
        let mut best: Option<(usize, bool, T)> = None;
        for j in 0..self.ncols {
            if self.is_basic[j] || self.is_fixed(j) {
                continue;
            }
            let dj = &self.d[j];
            let increase = if *dj < neg_eps && self.can_increase(j) {
                true
            } else if *dj > eps && self.can_decrease(j) {
                false
            } else {
                continue;
            };
            if bland {
                return Some((j, increase));
            }
            let score = dj.abs();
            if best.as_ref().map_or(true, |(_, _, s)| score > *s) {
                best = Some((j, increase, score));
            }
        }
        best.map(|(j, inc, _)| (j, inc))
    }

    fn run(&mut self) -> Result<Outcome, LpError<T>> {
        let eps = T::eps();
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::Stall {
                    iterations: self.iterations,
                });
            }
            let Some((j, increase)) = self.choose_entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            let dir = if increase { T::one() } else { -T::one() };

            // Ratio test: `None` row means the entering variable flips bounds.
            let mut step: Option<T> = if increase {
                self.upper[j].as_ref().map(|u| u.clone() - self.x[j].clone())
            } else {
                self.lower[j].as_ref().map(|l| self.x[j].clone() - l.clone())
            };
            let mut leave: Option<(usize, bool, T)> = None;
            for i in 0..self.m {
                let aij = &self.a[i * self.ncols + j];
                if aij.abs() <= eps {
                    continue;
                }
                let alpha = dir.clone() * aij.clone();
                let b = self.basis[i];
                let (ratio, to_lower) = if alpha > T::zero() {
                    match &self.lower[b] {
                        Some(l) => ((self.x[b].clone() - l.clone()) / alpha.clone(), true),
                        None => continue,
                    }
                } else {
                    match &self.upper[b] {
                        Some(u) => ((u.clone() - self.x[b].clone()) / (-alpha.clone()), false),
                        None => continue,
                    }
                };
                let ratio = if ratio < T::zero() { T::zero() } else { ratio };
                let better = match &step {
                    None => true,
                    Some(t) => {
                        if ratio < t.clone() - eps.clone() {
                            true
                        } else if ratio <= t.clone() + eps.clone() {
                            match &leave {
                                None => false,
                                Some((r, _, best_alpha)) => {
                                    if bland {
                                        b < self.basis[*r]
                                    } else {
                                        alpha.abs() > *best_alpha
                                    }
                                }
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = Some(ratio);
                    leave = Some((i, to_lower, alpha.abs()));
                }
            }
            let Some(t) = step else {
                return Ok(Outcome::Unbounded);
            };

            if t > eps {
                degenerate = 0;
                bland = false;
            } else {
                degenerate += 1;
                if degenerate > DEGENERATE_LIMIT {
                    bland = true;
                }
            }

            if !t.is_zero() {
                let delta = dir.clone() * t.clone();
                for i in 0..self.m {
                    let aij = &self.a[i * self.ncols + j];
                    if !aij.is_zero() {
                        let b = self.basis[i];
                        self.x[b] = self.x[b].clone() - aij.clone() * delta.clone();
                    }
                }
                self.x[j] = self.x[j].clone() + delta;
            }
            match leave {
                Some((r, to_lower, _)) => {
                    let b = self.basis[r];
                    let bound = if to_lower {
                        self.lower[b].clone()
                    } else {
                        self.upper[b].clone()
                    };
                    if let Some(v) = bound {
                        self.x[b] = v;
                    }
                    self.pivot(r, j);
                }
                None => {
                    let bound = if increase {
                        self.upper[j].clone()
                    } else {
                        self.lower[j].clone()
                    };
                    if let Some(v) = bound {
                        self.x[j] = v;
                    }
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let p = self.a[r * nc + j].clone();
        let drop = T::drop_tol();
        let mut pivot_row: Vec<(usize, T)> = Vec::new();
        for k in 0..nc {
            let v = &self.a[r * nc + k];
            if !v.is_zero() {
                let nv = v.clone() / p.clone();
                pivot_row.push((k, nv.clone()));
                self.a[r * nc + k] = nv;
            }
        }
        self.a[r * nc + j] = T::one();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * nc + j].clone();
            if f.is_zero() {
                continue;
            }
            let base = i * nc;
            for (k, v) in &pivot_row {
                let nv = self.a[base + k].clone() - f.clone() * v.clone();
                self.a[base + k] = if nv.abs() < drop { T::zero() } else { nv };
            }
            self.a[base + j] = T::zero();
        }
        let f = self.d[j].clone();
        if !f.is_zero() {
            for (k, v) in &pivot_row {
                let nv = self.d[*k].clone() - f.clone() * v.clone();
                self.d[*k] = if nv.abs() < drop { T::zero() } else { nv };
            }
        }
        self.d[j] = T::zero();
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// Pivots zero-valued artificials out of the basis where possible and
    /// fixes every artificial at zero.
    fn retire_artificials(&mut self) {
        let first_art = self.n + self.m;
        for r in 0..self.m {
            if self.basis[r] < first_art {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for k in 0..first_art {
                if self.is_basic[k] {
                    continue;
                }
                let v = self.a[r * self.ncols + k].abs();
                if v > T::eps() && best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                    best = Some((k, v));
                }
            }
            if let Some((k, _)) = best {
                let art = self.basis[r];
                self.x[art] = T::zero();
                self.pivot(r, k);
            }
        }
        for c in first_art..self.ncols {
            self.upper[c] = Some(T::zero());
            self.x[c] = T::zero();
        }
    }

    /// Recomputes basic values as `B⁻¹ (b − N x_N)` to shed accumulated drift.
    fn refresh_basic_values(&mut self, rows: &[Vec<(usize, T)>], rhs: &[T]) {
        let n = self.n;
        let mut resid: Vec<T> = rhs.to_vec();
        for (i, row) in rows.iter().enumerate() {
            for (j, c) in row {
                if !self.is_basic[*j] {
                    resid[i] = resid[i].clone() - c.clone() * self.x[*j].clone();
                }
            }
            if !self.is_basic[n + i] {
                resid[i] = resid[i].clone() - self.x[n + i].clone();
            }
            if let Some((col, s)) = &self.art_sign[i] {
                if !self.is_basic[*col] {
                    resid[i] = resid[i].clone() - s.clone() * self.x[*col].clone();
                }
            }
        }
        for i in 0..self.m {
            let base = i * self.ncols + n;
            let mut v = T::zero();
            for (k, rk) in resid.iter().enumerate() {
                let binv = &self.a[base + k];
                if !binv.is_zero() {
                    v = v + binv.clone() * rk.clone();
                }
            }
            let b = self.basis[i];
            self.x[b] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinearProgram, Sense, VarId};
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn single_bounded_variable() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_nonneg("x");
        lp.add_row("c", vec![(x, 1.0)], Sense::Le, 1.0);
        lp.set_objective(vec![(x, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!(close(s.value(x), 1.0));
        assert!(close(s.objective, 1.0));
    }

    #[test]
    fn degenerate_optimum_face() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_nonneg("x");
        let y = lp.add_nonneg("y");
        lp.add_row("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        lp.set_objective(vec![(x, 1.0), (y, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.objective, 1.0));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_nonneg("x");
        lp.add_row("lo", vec![(x, 1.0)], Sense::Ge, 2.0);
        lp.add_row("hi", vec![(x, 1.0)], Sense::Le, 1.0);
        lp.set_objective(vec![(x, 1.0)]);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn unbounded_ray_detected() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_nonneg("x");
        let y = lp.add_nonneg("y");
        lp.add_row("c", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        lp.set_objective(vec![(x, 1.0)]);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + 2y, x − y = 1, x + y ≥ 3, x, y free → x=2, y=1, obj=4.
        let mut lp = LinearProgram::<f64>::minimize();
        let x = lp.add_var("x", None, None);
        let y = lp.add_var("y", None, None);
        lp.add_row("eq", vec![(x, 1.0), (y, -1.0)], Sense::Eq, 1.0);
        lp.add_row("ge", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 3.0);
        lp.set_objective(vec![(x, 1.0), (y, 2.0)]);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.objective, 4.0));
        assert!(close(s.value(x), 2.0));
        assert!(close(s.value(y), 1.0));
        // Shadow prices: obj = 1.5·(x+y) − 0.5·(x−y) → duals (−0.5, 1.5).
        assert!(close(s.duals[0], -0.5));
        assert!(close(s.duals[1], 1.5));
    }

    #[test]
    fn duals_certify_objective() {
        // max 3x + 2y, x + y ≤ 4, x + 3y ≤ 6, x ≤ 3.
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_nonneg("x");
        let y = lp.add_nonneg("y");
        lp.add_row("a", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        lp.add_row("b", vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
        lp.add_row("c", vec![(x, 1.0)], Sense::Le, 3.0);
        lp.set_objective(vec![(x, 3.0), (y, 2.0)]);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.objective, 11.0));
        let dual_obj: f64 = s.duals.iter().zip([4.0, 6.0, 3.0]).map(|(y, b)| y * b).sum();
        assert!(close(dual_obj, 11.0));
        assert!(s.duals.iter().all(|&y| y >= -1e-12));
    }

    #[test]
    fn upper_bounds_without_rows() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_var("x", Some(-1.0), Some(2.5));
        let y = lp.add_var("y", Some(-3.0), Some(4.0));
        lp.set_objective(vec![(x, 1.0), (y, -1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.objective, 5.5));
        assert!(close(s.reduced_costs[0], 1.0));
    }

    #[test]
    fn exact_arithmetic_gives_exact_fractions() {
        // max x + y, 3x + y ≤ 2, x + 3y ≤ 2 → x = y = 1/2, obj = 1.
        let mut lp = LinearProgram::<BigRational>::maximize();
        let x = lp.add_nonneg("x");
        let y = lp.add_nonneg("y");
        lp.add_row("a", vec![(x, ratio(3, 1)), (y, ratio(1, 1))], Sense::Le, ratio(2, 1));
        lp.add_row("b", vec![(x, ratio(1, 1)), (y, ratio(3, 1))], Sense::Le, ratio(2, 1));
        lp.set_objective(vec![(x, ratio(1, 1)), (y, ratio(1, 1))]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.objective, ratio(1, 1));
        assert_eq!(s.value(x), ratio(1, 2));
        assert_eq!(s.duals, vec![ratio(1, 4), ratio(1, 4)]);
    }

    #[test]
    fn empty_rows_are_checked_and_skipped() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_var("x", Some(0.0), Some(1.0));
        lp.add_row("empty", vec![(x, 0.0)], Sense::Le, 0.0);
        lp.set_objective(vec![(x, 1.0)]);
        assert!(close(solve_lp(&lp).unwrap().objective, 1.0));
        lp.add_row("bad", vec![], Sense::Ge, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn rejects_binaries() {
        let mut lp = LinearProgram::<f64>::maximize();
        let z = lp.add_binary("z");
        lp.set_objective(vec![(z, 1.0)]);
        assert!(solve_lp(&lp).is_err());
        assert_eq!(VarId(0), z);
    }
}
