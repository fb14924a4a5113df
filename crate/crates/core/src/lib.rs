//! Coordination of a wholesale energy market with distribution-level DER aggregators.
//!
//! A distribution operator turns its aggregators' offers and its network limits into a convex
//! piecewise-linear bid curve by parametric linear programming ([`dso_market`]). The wholesale
//! market clears that curve alongside ordinary generator and demand offers ([`iso_market`]),
//! and the award is dispatched back to the aggregators. [`coordination`] wires the steps
//! together and checks them against a single joint dispatch.

pub mod case;
pub mod coordination;
pub mod distflow;
pub mod dso_market;
pub mod iso_market;
pub mod lp;
pub mod model;
pub mod synth;

use thiserror::Error;

pub use case::CaseError;
pub use lp::{LinearProgram, LpError, LpSolution, LpStatus};
pub use model::{NodeId, Scenario, Violation};

#[derive(Debug, Error)]
pub enum Error {
    #[error("network is not radial: {0}")]
    NonRadial(String),
    #[error("aggregator {aggregator} is attached to unknown node {node}")]
    UnknownNode { aggregator: String, node: NodeId },
    #[error("scenario is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidScenario(Vec<Violation>),
    #[error("{0} is infeasible")]
    Infeasible(String),
    #[error("{0} is unbounded")]
    Unbounded(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Case(#[from] CaseError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_valid(scenario: &Scenario) -> Result<()> {
    let violations = model::validate(scenario);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidScenario(violations))
    }
}

/// Solve and insist on an optimal, primal-feasible solution with a closed duality gap.
pub(crate) fn solve_optimal(lp: &LinearProgram, tolerance: f64, context: &str) -> Result<LpSolution> {
    let sol = lp.solve(tolerance)?;
    match sol.status {
        LpStatus::Infeasible => return Err(Error::Infeasible(context.to_owned())),
        LpStatus::Unbounded => return Err(Error::Unbounded(context.to_owned())),
        LpStatus::Optimal => {}
    }
    let residual = lp.max_violation(&sol.primal);
    if residual > tolerance {
        return Err(Error::Consistency(format!(
            "{context}: primal residual {residual:e} exceeds {tolerance:e}"
        )));
    }
    if sol.duality_gap() > tolerance {
        return Err(Error::Consistency(format!(
            "{context}: duality gap {:e} exceeds {tolerance:e}",
            sol.duality_gap()
        )));
    }
    Ok(sol)
}
