//! Linear and mixed-binary programming.
//!
//! Every optimization model in the crate compiles to a [`LinearProgram`] and is
//! solved by the bounded-variable simplex in [`simplex`] or the
//! branch-and-bound driver in [`mip`].

mod format;
pub mod mip;
pub mod simplex;

use std::fmt;

use crate::scalar::Scalar;

pub use format::write_lp_format;
pub use mip::{solve_mip, solve_mip_with, MipOptions};
pub use simplex::{solve_lp, solve_lp_with_bounds};

/// Index of a variable inside a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Index of a row inside a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// A decision variable. `None` bounds are infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub lower: Option<T>,
    pub upper: Option<T>,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub name: String,
    pub coeffs: Vec<(VarId, T)>,
    pub sense: Sense,
    pub rhs: T,
}

/// Variables, bounds, linear rows and a linear objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub variables: Vec<Variable<T>>,
    pub rows: Vec<Row<T>>,
    pub objective: Vec<(VarId, T)>,
    pub sense: ObjectiveSense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve.
///
/// Duals are shadow prices: `duals[i]` is the rate of change of the optimal
/// objective per unit increase of row `i`'s right-hand side, in the program's
/// own objective sense. At an optimum
/// `objective = Σ duals[i]·rhs[i] + Σ reduced_costs[j]·primal[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub status: Status,
    pub primal: Vec<T>,
    pub duals: Vec<T>,
    pub reduced_costs: Vec<T>,
    pub objective: T,
}

impl<T: Scalar> Solution<T> {
    pub(crate) fn without_point(status: Status) -> Self {
        Solution {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: T::zero(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, v: VarId) -> T {
        self.primal[v.0].clone()
    }

    pub fn dual(&self, r: RowId) -> T {
        self.duals[r.0].clone()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError<T: fmt::Debug> {
    #[error("SOLVER_STALL: simplex made no progress after {iterations} iterations")]
    Stall { iterations: usize },
    #[error("BUDGET_EXCEEDED: branch-and-bound stopped after {nodes} nodes")]
    BudgetExceeded {
        nodes: usize,
        incumbent: Option<Box<Solution<T>>>,
    },
    #[error("invalid program: {0}")]
    Invalid(String),
}

impl<T: fmt::Debug> LpError<T> {
    pub fn code(&self) -> &'static str {
        match self {
            LpError::Stall { .. } => "SOLVER_STALL",
            LpError::BudgetExceeded { .. } => "BUDGET_EXCEEDED",
            LpError::Invalid(_) => "INVALID_PROGRAM",
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: ObjectiveSense) -> Self {
        LinearProgram {
            variables: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            sense,
        }
    }

    pub fn minimize() -> Self {
        Self::new(ObjectiveSense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(ObjectiveSense::Maximize)
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<T>, upper: Option<T>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            binary: false,
        });
        VarId(self.variables.len() - 1)
    }

    /// Adds a variable with bounds `[0, +∞)`.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, Some(T::zero()), None)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower: Some(T::zero()),
            upper: Some(T::one()),
            binary: true,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, T)>,
        sense: Sense,
        rhs: T,
    ) -> RowId {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn set_objective(&mut self, coeffs: Vec<(VarId, T)>) {
        self.objective = coeffs;
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn has_binaries(&self) -> bool {
        self.variables.iter().any(|v| v.binary)
    }

    /// Checks the structural invariants: references, bound order, binary bounds.
    pub fn check(&self) -> Result<(), LpError<T>> {
        let n = self.variables.len();
        for v in &self.variables {
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(LpError::Invalid(format!("variable {} has lower > upper", v.name)));
                }
            }
            if v.binary && (v.lower != Some(T::zero()) || v.upper != Some(T::one())) {
                return Err(LpError::Invalid(format!("binary variable {} must have bounds [0,1]", v.name)));
            }
        }
        for r in &self.rows {
            if let Some((id, _)) = r.coeffs.iter().find(|(id, _)| id.0 >= n) {
                return Err(LpError::Invalid(format!("row {} references unknown variable {}", r.name, id.0)));
            }
        }
        if let Some((id, _)) = self.objective.iter().find(|(id, _)| id.0 >= n) {
            return Err(LpError::Invalid(format!("objective references unknown variable {}", id.0)));
        }
        Ok(())
    }

    /// Evaluates the objective at a point.
    pub fn objective_at(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .fold(T::zero(), |acc, (v, c)| acc + c.clone() * x[v.0].clone())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (v, var) in self.variables.iter().enumerate() {
            if let Some(l) = &var.lower {
                let d = l.clone() - x[v].clone();
                if d > worst {
                    worst = d;
                }
            }
            if let Some(u) = &var.upper {
                let d = x[v].clone() - u.clone();
                if d > worst {
                    worst = d;
                }
            }
        }
        for r in &self.rows {
            let lhs = r
                .coeffs
                .iter()
                .fold(T::zero(), |acc, (v, c)| acc + c.clone() * x[v.0].clone());
            let d = match r.sense {
                Sense::Le => lhs - r.rhs.clone(),
                Sense::Ge => r.rhs.clone() - lhs,
                Sense::Eq => (lhs - r.rhs.clone()).abs(),
            };
            if d > worst {
                worst = d;
            }
        }
        worst
    }
}
