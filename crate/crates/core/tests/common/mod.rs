#![allow(dead_code)]

use gridcoord::model::{AggregatorKind, Scenario};

/// Merit-order value function of a distribution network whose limits never bind.
///
/// Every MW of extra export comes either from a generator block (at its offer price) or
/// from curtailing a demand block (forgoing its bid price). Returns `(q, cost)` breakpoints.
pub fn merit_order(s: &Scenario) -> Vec<(f64, f64)> {
    let mut q = -s.network.nodes.iter().map(|n| n.load_p).sum::<f64>();
    let mut cost = 0.0;
    let mut units: Vec<(f64, f64)> = Vec::new();
    for a in &s.aggregators {
        match a.kind {
            AggregatorKind::Reag => q += a.fixed_output,
            AggregatorKind::Ddgag => units.extend(a.offers.blocks().iter().map(|b| (b.price, b.p_max))),
            AggregatorKind::Drag => {
                for b in a.offers.blocks() {
                    q -= b.p_max;
                    cost -= b.price * b.p_max;
                    units.push((b.price, b.p_max));
                }
            }
        }
    }
    units.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (price, width) in units.into_iter().filter(|u| u.1 > 0.0) {
        match merged.last_mut() {
            Some(last) if last.0 == price => last.1 += width,
            _ => merged.push((price, width)),
        }
    }
    let mut points = vec![(q, cost)];
    for (price, width) in merged {
        q += width;
        cost += price * width;
        points.push((q, cost));
    }
    points
}

pub fn merit_prices(s: &Scenario) -> Vec<f64> {
    merit_order(s)
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect()
}

pub fn interpolate(points: &[(f64, f64)], q: f64) -> f64 {
    for w in points.windows(2) {
        if q <= w[1].0 {
            let t = (q - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    points[points.len() - 1].1
}

/// Net export implied by a dispatch: injections minus consumption minus fixed loads.
pub fn net_injection(s: &Scenario, mw: &[f64]) -> f64 {
    let loads: f64 = s.network.nodes.iter().map(|n| n.load_p).sum();
    s.aggregators
        .iter()
        .zip(mw)
        .map(|(a, &p)| if a.kind == AggregatorKind::Drag { -p } else { p })
        .sum::<f64>()
        - loads
}
