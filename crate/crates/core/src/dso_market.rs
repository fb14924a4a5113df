//! The distribution operator's parametric cost function and aggregator dispatch.
//!
//! For a net export `q` (MW, positive = export to the wholesale grid) the operator's cost
//! `c(q)` is the optimum of the retail dispatch LP: aggregator block costs minus demand block
//! benefits, subject to the distribution network constraints with `q` withdrawn at the
//! substation. `c` is convex and piecewise linear on its feasible range; its slope is the
//! shadow price of the substation exchange.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distflow::{build_constraints, DistFlowVars, Exchange};
use crate::lp::{ConstraintId, LinearProgram, LpSolution, Relation};
use crate::model::{AggregatorKind, Coupling, Scenario};
use crate::{ensure_valid, solve_optimal, Error, Result};

/// Slopes closer than this are the same marginal price.
pub const SLOPE_TOLERANCE: f64 = 1e-6;

/// Upper limit on sweep samples; the step is widened to respect it.
const MAX_SAMPLES: usize = 100_000;
const MAX_REFINE_DEPTH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub q: f64,
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub q_lo: f64,
    pub q_hi: f64,
    pub price: f64,
}

impl Segment {
    pub fn width(&self) -> f64 {
        self.q_hi - self.q_lo
    }
}

/// One solve of the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub q: f64,
    pub cost: f64,
    /// Shadow price of the exchange as returned by the LP (any subgradient at a kink).
    pub dual: f64,
    /// Price of the segment to the right of `q` (the last segment at the right end).
    pub marginal: f64,
}

/// Convex piecewise-linear cost of net export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidCurve {
    pub breakpoints: Vec<CurvePoint>,
    pub segments: Vec<Segment>,
    /// Sweep samples in increasing `q`; empty for curves not produced by a sweep.
    #[serde(default)]
    pub samples: Vec<CurveSample>,
}

/// One step of the marginal (price–quantity) offer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalStep {
    pub q_from: f64,
    pub q_to: f64,
    pub price: f64,
}

impl BidCurve {
    /// Build from breakpoints; segment prices are the chord slopes.
    pub fn from_breakpoints(breakpoints: Vec<CurvePoint>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Consistency("bid curve needs at least one breakpoint".into()));
        }
        let segments = breakpoints
            .windows(2)
            .map(|w| Segment {
                q_lo: w[0].q,
                q_hi: w[1].q,
                price: (w[1].cost - w[0].cost) / (w[1].q - w[0].q),
            })
            .collect();
        let curve = Self {
            breakpoints,
            segments,
            samples: Vec::new(),
        };
        curve.check(SLOPE_TOLERANCE)?;
        Ok(curve)
    }

    /// Build from a starting point and the marginal steps that follow it.
    pub fn from_steps(start: CurvePoint, steps: &[MarginalStep]) -> Result<Self> {
        let mut breakpoints = vec![start];
        let mut segments = Vec::with_capacity(steps.len());
        let mut at = start;
        for step in steps {
            if (step.q_from - at.q).abs() > 1e-9 * (1.0 + at.q.abs()) {
                return Err(Error::Consistency(format!(
                    "marginal step starting at {} does not continue from {}",
                    step.q_from, at.q
                )));
            }
            let next = CurvePoint {
                q: step.q_to,
                cost: at.cost + step.price * (step.q_to - at.q),
            };
            segments.push(Segment {
                q_lo: at.q,
                q_hi: next.q,
                price: step.price,
            });
            breakpoints.push(next);
            at = next;
        }
        let curve = Self {
            breakpoints,
            segments,
            samples: Vec::new(),
        };
        curve.check(SLOPE_TOLERANCE)?;
        Ok(curve)
    }

    pub fn q_min(&self) -> f64 {
        self.breakpoints[0].q
    }

    pub fn q_max(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].q
    }

    pub fn cost_at_min(&self) -> f64 {
        self.breakpoints[0].cost
    }

    /// Interpolated cost, `None` outside the domain.
    pub fn cost_at(&self, q: f64) -> Option<f64> {
        if q < self.q_min() - 1e-12 || q > self.q_max() + 1e-12 {
            return None;
        }
        let q = q.clamp(self.q_min(), self.q_max());
        let mut cost = self.cost_at_min();
        for seg in &self.segments {
            if q <= seg.q_lo {
                break;
            }
            cost += seg.price * (q.min(seg.q_hi) - seg.q_lo);
        }
        Some(cost)
    }

    /// Price of the segment starting at or containing `q` (right derivative).
    pub fn price_at(&self, q: f64) -> Option<f64> {
        let seg = self
            .segments
            .iter()
            .find(|s| q < s.q_hi - 1e-12)
            .or(self.segments.last())?;
        Some(seg.price)
    }

    pub fn marginal_curve(&self) -> Vec<MarginalStep> {
        marginal_curve(self)
    }

    /// Check ordering, continuity and convexity.
    pub fn check(&self, slope_tol: f64) -> Result<()> {
        let bad = |m: String| Err(Error::Consistency(format!("bid curve: {m}")));
        if self.breakpoints.iter().any(|p| !p.q.is_finite() || !p.cost.is_finite()) {
            return bad("non-finite breakpoint".into());
        }
        if self.segments.len() + 1 != self.breakpoints.len() {
            return bad("segment count does not match breakpoints".into());
        }
        for (w, seg) in self.breakpoints.windows(2).zip(&self.segments) {
            if w[1].q <= w[0].q {
                return bad(format!("breakpoints not increasing at q = {}", w[1].q));
            }
            if seg.q_lo != w[0].q || seg.q_hi != w[1].q {
                return bad(format!("segment [{}, {}] detached from breakpoints", seg.q_lo, seg.q_hi));
            }
            let chord = (w[1].cost - w[0].cost) / (w[1].q - w[0].q);
            let scale = 1.0 + chord.abs();
            if (chord - seg.price).abs() > slope_tol * scale.max(1.0 / (w[1].q - w[0].q)) {
                return bad(format!("segment price {} differs from chord slope {}", seg.price, chord));
            }
        }
        for w in self.segments.windows(2) {
            if w[1].price < w[0].price - slope_tol {
                return bad(format!("marginal price falls from {} to {} at q = {}", w[0].price, w[1].price, w[0].q_hi));
            }
        }
        Ok(())
    }
}

/// Stepwise marginal offer derived from the curve; prices never fall.
pub fn marginal_curve(curve: &BidCurve) -> Vec<MarginalStep> {
    curve
        .segments
        .iter()
        .map(|s| MarginalStep {
            q_from: s.q_lo,
            q_to: s.q_hi,
            price: s.price,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatorDispatch {
    pub id: String,
    pub kind: AggregatorKind,
    /// Generation, consumption (demand response) or fixed output, MW.
    pub mw: f64,
    pub blocks: Vec<f64>,
}

/// Branch flows, squared voltages and reactive exchange at a dispatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub pl: Vec<f64>,
    pub ql: Vec<f64>,
    pub u: Vec<f64>,
    pub q_exchange: f64,
    /// Net active export at the substation, MW.
    pub p_exchange: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsoDispatch {
    pub q_dso: f64,
    pub cost: f64,
    /// Shadow price of the exchange at `q_dso`.
    pub marginal_price: f64,
    pub aggregators: Vec<AggregatorDispatch>,
    /// Nodal active-balance shadow prices, currency/MWh, by node index.
    pub retail_prices: Vec<f64>,
    pub network: NetworkState,
    pub duality_gap: f64,
}

impl DsoDispatch {
    pub fn mw(&self, id: &str) -> Option<f64> {
        self.aggregators.iter().find(|a| a.id == id).map(|a| a.mw)
    }
}

struct DsoLp {
    lp: LinearProgram,
    vars: DistFlowVars,
    coupling: Option<ConstraintId>,
}

impl DsoLp {
    fn new(scenario: &Scenario, q: f64) -> Result<Self> {
        let mut lp = LinearProgram::new();
        let (exchange, at_least) = match scenario.coupling {
            Coupling::Equality => (Exchange::Fixed(q), false),
            Coupling::AtLeast => (Exchange::free(), true),
        };
        let vars = build_constraints(
            &mut lp,
            &scenario.network,
            &scenario.aggregators,
            exchange,
            scenario.q_dso_cap,
        )?;
        let coupling = match (at_least, vars.p_dso) {
            (true, Some(p)) => Some(lp.add_constraint("coupling", vec![(p, 1.0)], Relation::Ge, q)),
            _ => None,
        };
        lp.set_objective(vars.cost_terms(&scenario.aggregators));
        Ok(Self { lp, vars, coupling })
    }

    fn marginal(&self, sol: &LpSolution, scenario: &Scenario) -> f64 {
        match self.coupling {
            Some(row) => sol.dual_of(row),
            // The exchange is a withdrawal on the substation row's right-hand side.
            None => -sol.dual_of(self.vars.active_balance[scenario.network.substation.0]),
        }
    }

    fn solve(&self, scenario: &Scenario, q: f64) -> Result<LpSolution> {
        solve_optimal(&self.lp, scenario.tolerance, &format!("distribution dispatch at q = {q}"))
    }
}

/// Smallest and largest feasible net export.
pub fn feasible_range(scenario: &Scenario) -> Result<(f64, f64)> {
    ensure_valid(scenario)?;
    let mut lp = LinearProgram::new();
    let vars = build_constraints(
        &mut lp,
        &scenario.network,
        &scenario.aggregators,
        Exchange::free(),
        scenario.q_dso_cap,
    )?;
    let p = vars.p_dso.expect("free exchange adds a variable");
    lp.set_objective(vec![(p, 1.0)]);
    let lo = solve_optimal(&lp, scenario.tolerance, "minimum distribution export")?;
    lp.set_objective(vec![(p, -1.0)]);
    let hi = solve_optimal(&lp, scenario.tolerance, "maximum distribution export")?;
    Ok((lo.value(p), hi.value(p)))
}

/// Retail dispatch at a fixed net export.
pub fn value_at(scenario: &Scenario, q_dso: f64) -> Result<DsoDispatch> {
    ensure_valid(scenario)?;
    let problem = DsoLp::new(scenario, q_dso)?;
    let sol = problem.solve(scenario, q_dso)?;
    let vars = &problem.vars;
    let mw = vars.dispatch(&sol, &scenario.aggregators);
    let aggregators = scenario
        .aggregators
        .iter()
        .zip(mw)
        .zip(vars.block_values(&sol))
        .map(|((agg, mw), blocks)| AggregatorDispatch {
            id: agg.id.clone(),
            kind: agg.kind,
            mw,
            blocks,
        })
        .collect();
    let retail_prices = vars.active_balance.iter().map(|&row| -sol.dual_of(row)).collect();
    let p_exchange = vars.p_dso.map_or(q_dso, |p| sol.value(p));
    Ok(DsoDispatch {
        q_dso,
        cost: sol.objective,
        marginal_price: problem.marginal(&sol, scenario),
        aggregators,
        retail_prices,
        network: NetworkState {
            pl: vars.pl.iter().map(|&v| sol.value(v)).collect(),
            ql: vars.ql.iter().map(|&v| sol.value(v)).collect(),
            u: vars.u.iter().map(|&v| sol.value(v)).collect(),
            q_exchange: sol.value(vars.q_dso),
            p_exchange,
        },
        duality_gap: sol.duality_gap(),
    })
}

#[derive(Clone, Copy, Debug)]
struct Probe {
    q: f64,
    cost: f64,
    dual: f64,
}

fn probe(scenario: &Scenario, q: f64) -> Result<Probe> {
    let problem = DsoLp::new(scenario, q)?;
    let sol = problem.solve(scenario, q)?;
    Ok(Probe {
        q,
        cost: sol.objective,
        dual: problem.marginal(&sol, scenario),
    })
}

fn value_tolerance(scenario: &Scenario, cost: f64) -> f64 {
    scenario.tolerance.min(1e-7) * (1.0 + cost.abs())
}

/// Locate every kink strictly between two probes whose supporting lines differ.
///
/// The supporting lines at `a` and `b` meet at `q*`. If the value function touches them at
/// `q*` it is exactly their maximum on `[a, b]`, so `q*` is the only kink; otherwise the probe
/// at `q*` carries a new, intermediate slope and both halves are searched again.
fn refine(scenario: &Scenario, a: Probe, b: Probe, depth: usize, kinks: &mut Vec<CurvePoint>) -> Result<()> {
    if b.dual - a.dual <= SLOPE_TOLERANCE {
        return Ok(());
    }
    let width = b.q - a.q;
    let crossing = (b.cost - a.cost + a.dual * a.q - b.dual * b.q) / (a.dual - b.dual);
    let inside = crossing.is_finite() && crossing >= a.q - 1e-9 * (1.0 + width) && crossing <= b.q + 1e-9 * (1.0 + width);
    let q = if inside { crossing.clamp(a.q, b.q) } else { 0.5 * (a.q + b.q) };
    let line = a.cost + a.dual * (q - a.q);

    if width < 1e-9 * (1.0 + a.q.abs()) || depth >= MAX_REFINE_DEPTH {
        kinks.push(CurvePoint { q, cost: line });
        return Ok(());
    }
    let c = probe(scenario, q)?;
    if inside && (c.cost - line).abs() <= value_tolerance(scenario, c.cost) {
        kinks.push(CurvePoint { q, cost: c.cost });
        return Ok(());
    }
    if q - a.q > 1e-12 {
        refine(scenario, a, c, depth + 1, kinks)?;
    }
    if b.q - q > 1e-12 {
        refine(scenario, c, b, depth + 1, kinks)?;
    }
    Ok(())
}

fn sweep_grid(q_min: f64, q_max: f64, step: f64) -> Vec<f64> {
    let span = q_max - q_min;
    let step = step.max(span / MAX_SAMPLES as f64);
    let count = (span / step * (1.0 + 1e-12)).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| q_min + k as f64 * step).collect();
    // Snap grid points within round-off of the range end.
    if q_max - grid[grid.len() - 1] > 1e-9 * (1.0 + span) {
        grid.push(q_max);
    } else {
        *grid.last_mut().unwrap() = q_max;
    }
    grid
}

/// Sweep the feasible export range and assemble the convex bid curve.
pub fn build_bid_curve(scenario: &Scenario) -> Result<BidCurve> {
    ensure_valid(scenario)?;
    let (q_min, q_max) = feasible_range(scenario)?;
    if q_max - q_min <= scenario.tolerance {
        let p = probe(scenario, q_min)?;
        return Ok(BidCurve {
            breakpoints: vec![CurvePoint { q: q_min, cost: p.cost }],
            segments: Vec::new(),
            samples: vec![CurveSample {
                q: q_min,
                cost: p.cost,
                dual: p.dual,
                marginal: p.dual,
            }],
        });
    }

    let grid = sweep_grid(q_min, q_max, scenario.sweep_step);
    let probes: Vec<Probe> = grid
        .par_iter()
        .map(|&q| probe(scenario, q))
        .collect::<Result<_>>()?;

    let mut kinks: Vec<CurvePoint> = probes
        .par_windows(2)
        .map(|w| {
            let mut found = Vec::new();
            refine(scenario, w[0], w[1], 0, &mut found).map(|_| found)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    kinks.sort_by(|a, b| a.q.total_cmp(&b.q));

    let first = probes[0];
    let last = probes[probes.len() - 1];
    let mut points = vec![CurvePoint { q: first.q, cost: first.cost }];
    let merge_eps = 1e-9 * (1.0 + (q_max - q_min));
    for k in kinks {
        let prev = points[points.len() - 1];
        if k.q - prev.q > merge_eps && last.q - k.q > merge_eps {
            points.push(k);
        }
    }
    points.push(CurvePoint { q: last.q, cost: last.cost });

    // Segment prices from interior probes, where the derivative is unique.
    let prices: Vec<f64> = points
        .par_windows(2)
        .map(|w| probe(scenario, 0.5 * (w[0].q + w[1].q)).map(|p| p.dual))
        .collect::<Result<_>>()?;

    let mut breakpoints = vec![points[0]];
    let mut segments: Vec<Segment> = Vec::new();
    for (w, &price) in points.windows(2).zip(&prices) {
        match segments.last_mut() {
            Some(seg) if (price - seg.price).abs() <= SLOPE_TOLERANCE => {
                seg.q_hi = w[1].q;
                *breakpoints.last_mut().unwrap() = w[1];
            }
            _ => {
                segments.push(Segment {
                    q_lo: w[0].q,
                    q_hi: w[1].q,
                    price,
                });
                breakpoints.push(w[1]);
            }
        }
    }

    let samples = probes
        .iter()
        .map(|p| {
            let marginal = segments
                .iter()
                .find(|s| p.q < s.q_hi - merge_eps)
                .or(segments.last())
                .map_or(p.dual, |s| s.price);
            CurveSample {
                q: p.q,
                cost: p.cost,
                dual: p.dual,
                marginal,
            }
        })
        .collect();

    let curve = BidCurve {
        breakpoints,
        segments,
        samples,
    };
    curve.check(1e-5)?;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case;
    use crate::model::{Aggregator, BlockOfferStack, Branch, NetworkModel, Node, NodeId};

    fn reference() -> Scenario {
        case::bundled("paper_reference").unwrap()
    }

    fn single_ddgag() -> Scenario {
        let mut s = reference();
        s.network = NetworkModel {
            nodes: (0..2)
                .map(|i| Node {
                    id: NodeId(i),
                    load_p: 0.0,
                    load_q: 0.0,
                })
                .collect(),
            branches: vec![Branch {
                from: NodeId(0),
                to: NodeId(1),
                r: 0.001,
                x: 0.001,
                pl_max: 10.0,
                ql_max: 10.0,
            }],
            ..s.network
        };
        s.aggregators = vec![Aggregator {
            id: "G".into(),
            kind: AggregatorKind::Ddgag,
            node: NodeId(1),
            tan_phi: 0.0,
            offers: BlockOfferStack::single(2.0, 24.0),
            fixed_output: 0.0,
        }];
        s
    }

    #[test]
    fn reference_range() {
        let (lo, hi) = feasible_range(&reference()).unwrap();
        assert!((lo + 1.5).abs() < 1e-9);
        assert!((hi - 5.7).abs() < 1e-9);
    }

    #[test]
    fn lone_renewable_has_point_range() {
        let mut s = reference();
        s.aggregators.retain(|a| a.kind == AggregatorKind::Reag);
        let (lo, hi) = feasible_range(&s).unwrap();
        assert!((lo - 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
        let curve = build_bid_curve(&s).unwrap();
        assert_eq!(curve.breakpoints.len(), 1);
        assert!(curve.segments.is_empty());
    }

    #[test]
    fn dispatch_at_range_ends_is_forced() {
        let s = reference();
        let low = value_at(&s, -1.5).unwrap();
        assert!((low.cost + 70.0).abs() < 1e-9);
        for id in ["DDGAG1", "DDGAG2", "DDGAG3", "DDGAG4"] {
            assert!(low.mw(id).unwrap().abs() < 1e-9);
        }
        assert!((low.mw("DRAG").unwrap() - 2.5).abs() < 1e-9);

        let high = value_at(&s, 5.7).unwrap();
        assert!((high.cost - 86.0).abs() < 1e-9);
        assert!(high.mw("DRAG").unwrap().abs() < 1e-9);
        assert!((high.mw("DDGAG4").unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_award_is_an_error() {
        assert!(matches!(value_at(&reference(), 5.8), Err(Error::Infeasible(_))));
    }

    #[test]
    fn dispatch_balances_at_aggregator_level() {
        let d = value_at(&reference(), 2.0).unwrap();
        let net: f64 = d
            .aggregators
            .iter()
            .map(|a| match a.kind {
                AggregatorKind::Drag => -a.mw,
                _ => a.mw,
            })
            .sum();
        assert!((net - 2.0).abs() < 1e-9);
        assert!((d.marginal_price - 24.0).abs() < 1e-9);
    }

    #[test]
    fn retail_prices_are_uniform_without_congestion() {
        let d = value_at(&reference(), 2.0).unwrap();
        for p in &d.retail_prices {
            assert!((p - 24.0).abs() < 1e-9, "{p}");
        }
    }

    #[test]
    fn single_generator_curve() {
        let curve = build_bid_curve(&single_ddgag()).unwrap();
        assert_eq!(curve.segments.len(), 1);
        let seg = curve.segments[0];
        assert!((seg.q_lo).abs() < 1e-9 && (seg.q_hi - 2.0).abs() < 1e-9);
        assert!((seg.price - 24.0).abs() < 1e-9);
        assert_eq!(curve.marginal_curve().len(), 1);
    }

    #[test]
    fn coarse_sweep_still_finds_every_breakpoint() {
        let mut s = reference();
        s.sweep_step = 3.0;
        let curve = build_bid_curve(&s).unwrap();
        let qs: Vec<f64> = curve.breakpoints.iter().map(|p| p.q).collect();
        let expected = [-1.5, -0.5, 0.7, 1.2, 3.2, 5.7];
        assert_eq!(qs.len(), expected.len(), "{qs:?}");
        for (q, e) in qs.iter().zip(expected) {
            assert!((q - e).abs() < 1e-9, "{qs:?}");
        }
    }

    #[test]
    fn cost_interpolation_matches_breakpoints() {
        let curve = build_bid_curve(&reference()).unwrap();
        for p in &curve.breakpoints {
            assert!((curve.cost_at(p.q).unwrap() - p.cost).abs() < 1e-9);
        }
        assert!(curve.cost_at(6.0).is_none());
        assert_eq!(curve.price_at(1.2), Some(24.0));
    }

    #[test]
    fn from_breakpoints_rejects_concave_curve() {
        let pts = vec![
            CurvePoint { q: 0.0, cost: 0.0 },
            CurvePoint { q: 1.0, cost: 20.0 },
            CurvePoint { q: 2.0, cost: 30.0 },
        ];
        assert!(BidCurve::from_breakpoints(pts).is_err());
    }

    #[test]
    fn grid_ends_exactly_on_range() {
        let g = sweep_grid(-1.5, 5.7, 0.1);
        assert_eq!(g[0], -1.5);
        assert_eq!(*g.last().unwrap(), 5.7);
        assert_eq!(g.len(), 73);
    }
}
