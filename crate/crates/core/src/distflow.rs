//! Linearised branch-flow (LinDistFlow) constraints of a radial distribution network.
//!
//! Per node: active and reactive balance. Per branch: the lossless voltage-drop relation
//! `U_child = U_parent − 2(r·Pl + x·Ql)` with flows in p.u. of the network power base.
//! Block dispatch, branch flows and squared voltages are bounded through variable bounds.

use crate::lp::{ConstraintId, LinearProgram, LpSolution, Relation, VarId};
use crate::model::{derived_incidence, Aggregator, AggregatorKind, BranchId, Incidence, NetworkModel, NodeId, Side};
use crate::Error;

/// Treatment of the substation active exchange `P^dso` (positive = export to the grid).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exchange {
    /// A parameter folded into the substation balance right-hand side.
    Fixed(f64),
    /// A decision variable with the given bounds.
    Variable { lower: f64, upper: f64 },
}

impl Exchange {
    pub fn free() -> Self {
        Exchange::Variable {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }
}

/// Handles to everything [`build_constraints`] added to the program.
#[derive(Clone, Debug)]
pub struct DistFlowVars {
    /// Block variables per aggregator, in offer order; empty for fixed-output aggregators.
    pub blocks: Vec<Vec<VarId>>,
    pub pl: Vec<VarId>,
    pub ql: Vec<VarId>,
    pub u: Vec<VarId>,
    pub q_dso: VarId,
    pub p_dso: Option<VarId>,
    pub active_balance: Vec<ConstraintId>,
    pub reactive_balance: Vec<ConstraintId>,
    pub voltage_drop: Vec<ConstraintId>,
    pub substation_voltage: ConstraintId,
    pub incidence: Incidence,
}

impl DistFlowVars {
    /// Objective terms `Σ P_g·π_g − Σ P_d·π_d`.
    pub fn cost_terms(&self, aggregators: &[Aggregator]) -> Vec<(VarId, f64)> {
        let mut terms = Vec::new();
        for (agg, vars) in aggregators.iter().zip(&self.blocks) {
            let sign = match agg.kind.side() {
                Side::Supply => 1.0,
                Side::Demand => -1.0,
            };
            for (block, &v) in agg.offers.blocks().iter().zip(vars) {
                terms.push((v, sign * block.price));
            }
        }
        terms
    }

    /// Dispatched MW per aggregator (consumption for demand aggregators, fixed output for
    /// renewables).
    pub fn dispatch(&self, sol: &LpSolution, aggregators: &[Aggregator]) -> Vec<f64> {
        aggregators
            .iter()
            .zip(&self.blocks)
            .map(|(agg, vars)| match agg.kind {
                AggregatorKind::Reag => agg.fixed_output,
                _ => vars.iter().map(|&v| sol.value(v)).sum(),
            })
            .collect()
    }

    pub fn block_values(&self, sol: &LpSolution) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|vars| vars.iter().map(|&v| sol.value(v)).collect())
            .collect()
    }
}

/// Add the distribution-network constraint set to `lp`, without any objective terms.
pub fn build_constraints(
    lp: &mut LinearProgram,
    network: &NetworkModel,
    aggregators: &[Aggregator],
    exchange: Exchange,
    q_dso_cap: Option<f64>,
) -> Result<DistFlowVars, Error> {
    let incidence = derived_incidence(network)?;
    let n = network.node_count();
    if let Some(agg) = aggregators.iter().find(|a| a.node.0 >= n) {
        return Err(Error::UnknownNode {
            aggregator: agg.id.clone(),
            node: agg.node,
        });
    }

    let blocks: Vec<Vec<VarId>> = aggregators
        .iter()
        .map(|agg| {
            agg.offers
                .blocks()
                .iter()
                .enumerate()
                .map(|(b, block)| lp.add_var(format!("P[{}][{b}]", agg.id), 0.0, block.p_max))
                .collect()
        })
        .collect();
    let pl: Vec<VarId> = network
        .branches
        .iter()
        .enumerate()
        .map(|(j, br)| lp.add_var(format!("Pl[{j}]"), -br.pl_max, br.pl_max))
        .collect();
    let ql: Vec<VarId> = network
        .branches
        .iter()
        .enumerate()
        .map(|(j, br)| lp.add_var(format!("Ql[{j}]"), -br.ql_max, br.ql_max))
        .collect();
    let u: Vec<VarId> = (0..n)
        .map(|i| lp.add_var(format!("U[{i}]"), network.u_min, network.u_max))
        .collect();
    let cap = q_dso_cap.unwrap_or(f64::INFINITY);
    let q_dso = lp.add_var("Qdso", -cap, cap);
    let p_dso = match exchange {
        Exchange::Fixed(_) => None,
        Exchange::Variable { lower, upper } => Some(lp.add_var("Pdso", lower, upper)),
    };

    let sub = network.substation;
    let mut p_rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
    let mut q_rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
    let mut p_rhs: Vec<f64> = network.nodes.iter().map(|node| -node.load_p).collect();
    let mut q_rhs: Vec<f64> = network.nodes.iter().map(|node| -node.load_q).collect();

    for (agg, vars) in aggregators.iter().zip(&blocks) {
        let at = agg.node.0;
        match agg.kind {
            AggregatorKind::Reag => {
                p_rhs[at] += agg.fixed_output;
                q_rhs[at] += agg.fixed_output * agg.tan_phi;
            }
            kind => {
                // Withdrawals enter with +1, injections with −1.
                let sign = match kind.side() {
                    Side::Demand => 1.0,
                    Side::Supply => -1.0,
                };
                for &v in vars {
                    p_rows[at].push((v, sign));
                    if agg.tan_phi != 0.0 {
                        q_rows[at].push((v, sign * agg.tan_phi));
                    }
                }
            }
        }
    }
    for j in 0..network.branch_count() {
        let (parent, child) = (incidence.parent[j].0, incidence.child[j].0);
        p_rows[parent].push((pl[j], 1.0));
        p_rows[child].push((pl[j], -1.0));
        q_rows[parent].push((ql[j], 1.0));
        q_rows[child].push((ql[j], -1.0));
    }
    match (exchange, p_dso) {
        (Exchange::Fixed(q), _) => p_rhs[sub.0] -= q,
        (_, Some(v)) => p_rows[sub.0].push((v, 1.0)),
        _ => unreachable!(),
    }
    q_rows[sub.0].push((q_dso, 1.0));

    let active_balance: Vec<ConstraintId> = p_rows
        .into_iter()
        .zip(p_rhs)
        .enumerate()
        .map(|(i, (terms, rhs))| lp.add_constraint(format!("P_balance[{i}]"), terms, Relation::Eq, rhs))
        .collect();
    let reactive_balance: Vec<ConstraintId> = q_rows
        .into_iter()
        .zip(q_rhs)
        .enumerate()
        .map(|(i, (terms, rhs))| lp.add_constraint(format!("Q_balance[{i}]"), terms, Relation::Eq, rhs))
        .collect();

    let base = network.base_mva;
    let voltage_drop: Vec<ConstraintId> = network
        .branches
        .iter()
        .enumerate()
        .map(|(j, br)| {
            let (parent, child) = (incidence.parent[j].0, incidence.child[j].0);
            let mut terms = vec![(u[child], 1.0), (u[parent], -1.0)];
            if br.r != 0.0 {
                terms.push((pl[j], 2.0 * br.r / base));
            }
            if br.x != 0.0 {
                terms.push((ql[j], 2.0 * br.x / base));
            }
            lp.add_constraint(format!("voltage_drop[{j}]"), terms, Relation::Eq, 0.0)
        })
        .collect();
    let substation_voltage = lp.add_constraint(
        "U_substation",
        vec![(u[sub.0], 1.0)],
        Relation::Eq,
        network.u_sub,
    );

    Ok(DistFlowVars {
        blocks,
        pl,
        ql,
        u,
        q_dso,
        p_dso,
        active_balance,
        reactive_balance,
        voltage_drop,
        substation_voltage,
        incidence,
    })
}

/// Largest residual of the voltage-drop recursion and voltage bounds, recomputed from
/// branch flows and voltages alone.
pub fn voltage_residual(network: &NetworkModel, incidence: &Incidence, pl: &[f64], ql: &[f64], u: &[f64]) -> f64 {
    let base = network.base_mva;
    let drop = network
        .branches
        .iter()
        .enumerate()
        .map(|(j, br)| {
            let (p, c) = (incidence.parent[j].0, incidence.child[j].0);
            (u[c] - (u[p] - 2.0 * (br.r * pl[j] + br.x * ql[j]) / base)).abs()
        })
        .fold(0.0, f64::max);
    let bounds = u
        .iter()
        .map(|&v| (network.u_min - v).max(v - network.u_max).max(0.0))
        .fold(0.0, f64::max);
    drop.max(bounds).max((u[network.substation.0] - network.u_sub).abs())
}

/// Squared voltage at `node` from the substation value and the flows on its root path.
pub fn telescoped_voltage(network: &NetworkModel, incidence: &Incidence, pl: &[f64], ql: &[f64], node: NodeId) -> f64 {
    let base = network.base_mva;
    incidence
        .path_to_root(node)
        .into_iter()
        .map(|BranchId(j)| {
            let br = &network.branches[j];
            2.0 * (br.r * pl[j] + br.x * ql[j]) / base
        })
        .fold(network.u_sub, |u, d| u - d)
}
