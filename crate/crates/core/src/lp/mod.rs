//! Small dense linear programs with primal and dual solutions.
//!
//! Every market problem in this crate is assembled as a [`LinearProgram`] and solved by
//! [`LinearProgram::solve`]. The sense is always minimisation.
//!
//! # Dual sign convention
//!
//! The dual value of a constraint is its *shadow price*: the rate of change of the optimal
//! objective with respect to the constraint's right-hand side. For a minimisation this makes
//! the dual of a `≤` row non-positive, the dual of a `≥` row non-negative and the dual of an
//! `=` row free. At degenerate optima the value function has a kink and the reported dual is
//! one element of the subdifferential.

mod simplex;

use std::fmt;

use thiserror::Error;

/// Default absolute tolerance on constraint residuals and duality gap.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// Column handle in a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Row handle in a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId(pub(crate) usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
}

/// A minimisation problem over bounded continuous variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, f64)>,
    objective_offset: f64,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a variable with bounds `lower ≤ x ≤ upper`; either bound may be infinite.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> ConstraintId {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        ConstraintId(self.constraints.len() - 1)
    }

    /// Add `coef · var` to the objective. Repeated terms accumulate.
    pub fn add_objective_term(&mut self, var: VarId, coef: f64) {
        self.objective.push((var, coef));
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms;
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.objective_offset = offset;
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn variable_mut(&mut self, id: VarId) -> &mut Variable {
        &mut self.variables[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn constraint_mut(&mut self, id: ConstraintId) -> &mut Constraint {
        &mut self.constraints[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    /// Dense objective coefficient vector (repeated terms summed).
    pub fn objective_coefficients(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.variables.len()];
        for &(v, a) in &self.objective {
            c[v.0] += a;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|&(v, a)| a * x[v.0])
            .sum::<f64>()
            + self.objective_offset
    }

    /// Largest violation of any row or variable bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Structural checks: declared variables, ordered bounds, finite data.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(LpError::Malformed(format!("variable {} has a NaN bound", v.name)));
            }
            if v.lower > v.upper {
                return Err(LpError::Malformed(format!(
                    "variable {} has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!(
                    "variable {} has an empty domain",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(LpError::Malformed(format!("constraint {} has non-finite rhs", c.name)));
            }
            for &(v, a) in &c.terms {
                if v.0 >= n {
                    return Err(LpError::Malformed(format!(
                        "constraint {} references undeclared variable #{}",
                        c.name, v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed(format!(
                        "constraint {} has a non-finite coefficient",
                        c.name
                    )));
                }
            }
        }
        for &(v, a) in &self.objective {
            if v.0 >= n {
                return Err(LpError::Malformed(format!(
                    "objective references undeclared variable #{}",
                    v.0
                )));
            }
            if !a.is_finite() {
                return Err(LpError::Malformed("objective has a non-finite coefficient".into()));
            }
        }
        if !self.objective_offset.is_finite() {
            return Err(LpError::Malformed("objective offset is not finite".into()));
        }
        Ok(())
    }

    /// Solve to optimality, or report infeasibility/unboundedness through [`LpStatus`].
    pub fn solve(&self, tolerance: f64) -> Result<LpSolution, LpError> {
        self.validate()?;
        simplex::solve(self, tolerance)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal objective including the constant offset.
    pub objective: f64,
    /// Objective of the dual solution built from `dual` and `reduced_costs`.
    pub dual_objective: f64,
    pub primal: Vec<f64>,
    /// Shadow price per constraint, indexed by [`ConstraintId`].
    pub dual: Vec<f64>,
    /// `c − Aᵀy` per variable.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.primal[var.0]
    }

    pub fn dual_of(&self, row: ConstraintId) -> f64 {
        self.dual[row.0]
    }

    pub fn duality_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs()
    }

    pub(crate) fn without_solution(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Self {
            status,
            objective,
            dual_objective: objective,
            primal: vec![f64::NAN; n],
            dual: vec![f64::NAN; m],
            reduced_costs: vec![f64::NAN; n],
            iterations,
        }
    }
}
