//! Single-bus wholesale economic dispatch.
//!
//! Generators offer supply blocks, demand bids are benefit blocks, and each distribution
//! operator enters through its bid curve: the award is `q_min + Σ s_k` with one bounded
//! variable `s_k` per curve segment priced at the segment's marginal price. The clearing price
//! is the shadow price of the single power-balance row.

use serde::{Deserialize, Serialize};

use crate::dso_market::BidCurve;
use crate::lp::{LinearProgram, Relation, VarId};
use crate::model::{ParticipantKind, Side, Violation, ViolationKind, WholesaleParticipant};
use crate::{solve_optimal, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClearedParticipant {
    pub id: String,
    pub kind: ParticipantKind,
    pub cleared_mw: f64,
    pub blocks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoOutcome {
    pub participants: Vec<ClearedParticipant>,
    /// Net export awarded to each distribution operator, MW (+ = sells to the grid).
    pub dso_awards: Vec<f64>,
    /// Filled width of each curve segment, per operator.
    pub dso_segments: Vec<Vec<f64>>,
    pub clearing_price: f64,
    /// Generation cost plus operator curve cost minus demand benefit.
    pub objective: f64,
    pub duality_gap: f64,
}

impl IsoOutcome {
    pub fn cleared(&self, id: &str) -> Option<f64> {
        self.participants.iter().find(|p| p.id == id).map(|p| p.cleared_mw)
    }
}

fn check_participants(wholesale: &[WholesaleParticipant]) -> Result<()> {
    let mut bad = Vec::new();
    for (i, p) in wholesale.iter().enumerate() {
        if !p.offers.is_monotone(p.kind.side()) {
            bad.push(Violation {
                path: format!("wholesale[{i}].blocks"),
                kind: ViolationKind::Convexity,
                message: "block prices are not monotone".into(),
            });
        }
        if p.offers.blocks().iter().any(|b| !(b.p_max >= 0.0 && b.p_max.is_finite() && b.price.is_finite())) {
            bad.push(Violation {
                path: format!("wholesale[{i}].blocks"),
                kind: ViolationKind::Offer,
                message: "block sizes must be finite and >= 0, prices finite".into(),
            });
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidScenario(bad))
    }
}

/// Clear the wholesale market.
pub fn clear(
    wholesale: &[WholesaleParticipant],
    dso_curves: &[BidCurve],
    firm_load: f64,
    tolerance: f64,
) -> Result<IsoOutcome> {
    check_participants(wholesale)?;
    for curve in dso_curves {
        curve.check(1e-5)?;
    }

    let mut lp = LinearProgram::new();
    let mut balance: Vec<(VarId, f64)> = Vec::new();
    let mut objective: Vec<(VarId, f64)> = Vec::new();

    let block_vars: Vec<Vec<VarId>> = wholesale
        .iter()
        .map(|p| {
            let sign = match p.kind.side() {
                Side::Supply => 1.0,
                Side::Demand => -1.0,
            };
            p.offers
                .blocks()
                .iter()
                .enumerate()
                .map(|(b, block)| {
                    let v = lp.add_var(format!("{}[{b}]", p.id), 0.0, block.p_max);
                    balance.push((v, sign));
                    objective.push((v, sign * block.price));
                    v
                })
                .collect()
        })
        .collect();

    let mut fixed_export = 0.0;
    let mut fixed_cost = 0.0;
    let segment_vars: Vec<Vec<VarId>> = dso_curves
        .iter()
        .enumerate()
        .map(|(k, curve)| {
            fixed_export += curve.q_min();
            fixed_cost += curve.cost_at_min();
            curve
                .segments
                .iter()
                .enumerate()
                .map(|(s, seg)| {
                    let v = lp.add_var(format!("dso{k}[{s}]"), 0.0, seg.width());
                    balance.push((v, 1.0));
                    objective.push((v, seg.price));
                    v
                })
                .collect()
        })
        .collect();

    let balance_row = lp.add_constraint("balance", balance, Relation::Eq, firm_load - fixed_export);
    lp.set_objective(objective);
    lp.set_objective_offset(fixed_cost);

    let sol = solve_optimal(&lp, tolerance, "wholesale clearing").map_err(|e| match e {
        Error::Unbounded(m) => Error::Consistency(format!("{m}: bounded offers cannot be unbounded")),
        other => other,
    })?;

    let participants = wholesale
        .iter()
        .zip(&block_vars)
        .map(|(p, vars)| {
            let blocks: Vec<f64> = vars.iter().map(|&v| sol.value(v)).collect();
            ClearedParticipant {
                id: p.id.clone(),
                kind: p.kind,
                cleared_mw: blocks.iter().sum(),
                blocks,
            }
        })
        .collect();
    let dso_segments: Vec<Vec<f64>> = segment_vars
        .iter()
        .map(|vars| vars.iter().map(|&v| sol.value(v)).collect())
        .collect();
    let dso_awards = dso_curves
        .iter()
        .zip(&dso_segments)
        .map(|(curve, filled)| curve.q_min() + filled.iter().sum::<f64>())
        .collect();

    Ok(IsoOutcome {
        participants,
        dso_awards,
        dso_segments,
        clearing_price: sol.dual_of(balance_row),
        objective: sol.objective,
        duality_gap: sol.duality_gap(),
    })
}
