//! Seeded random scenarios for property campaigns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    Aggregator, AggregatorKind, BlockOfferStack, Branch, Coupling, NetworkModel, Node, NodeId, OfferBlock,
    ParticipantKind, Scenario, WholesaleParticipant,
};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub max_nodes: usize,
    pub max_aggregators: usize,
    pub max_blocks: usize,
    pub max_wholesale: usize,
    /// Prices are drawn on this grid, so ties between offers occur.
    pub price_grid: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            max_nodes: 12,
            max_aggregators: 6,
            max_blocks: 3,
            max_wholesale: 5,
            price_grid: 0.5,
        }
    }
}

fn round_to(v: f64, grid: f64) -> f64 {
    (v / grid).round() * grid
}

fn stack(rng: &mut ChaCha8Rng, cfg: &SynthConfig, ascending: bool, size: (f64, f64), price: (f64, f64)) -> BlockOfferStack {
    let count = rng.random_range(1..=cfg.max_blocks);
    let mut prices: Vec<f64> = (0..count)
        .map(|_| round_to(rng.random_range(price.0..price.1), cfg.price_grid))
        .collect();
    prices.sort_by(f64::total_cmp);
    if !ascending {
        prices.reverse();
    }
    BlockOfferStack::new(
        prices
            .into_iter()
            .map(|price| OfferBlock {
                p_max: round_to(rng.random_range(size.0..size.1), 0.1).max(0.1),
                price,
            })
            .collect(),
    )
}

/// A valid scenario on a random radial tree with non-binding voltage and flow limits.
pub fn random_scenario(seed: u64, cfg: &SynthConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=cfg.max_nodes.max(2));

    let nodes = (0..n)
        .map(|i| {
            let loaded = i > 0 && rng.random_bool(0.3);
            Node {
                id: NodeId(i),
                load_p: if loaded { round_to(rng.random_range(0.0..0.15), 0.01) } else { 0.0 },
                load_q: if loaded { round_to(rng.random_range(-0.1..0.1), 0.01) } else { 0.0 },
            }
        })
        .collect();
    let branches = (1..n)
        .map(|child| {
            let parent = rng.random_range(0..child);
            // Orientation in the file is arbitrary; incidence is re-derived from the root.
            let (from, to) = if rng.random_bool(0.2) { (child, parent) } else { (parent, child) };
            Branch {
                from: NodeId(from),
                to: NodeId(to),
                r: rng.random_range(0.0005..0.002),
                x: rng.random_range(0.0005..0.002),
                pl_max: 100.0,
                ql_max: 100.0,
            }
        })
        .collect();
    let network = NetworkModel {
        base_mva: 100.0,
        u_min: 0.81,
        u_max: 1.21,
        u_sub: 1.0,
        substation: NodeId(0),
        nodes,
        branches,
    };

    let count = rng.random_range(1..=cfg.max_aggregators);
    let mut aggregators = Vec::with_capacity(count);
    let mut renewable = 0.0;
    for k in 0..count {
        let roll: f64 = rng.random();
        let node = NodeId(rng.random_range(0..n));
        let tan_phi = if rng.random_bool(0.3) { round_to(rng.random_range(0.0..0.4), 0.05) } else { 0.0 };
        let agg = if roll < 0.5 {
            Aggregator {
                id: format!("DDGAG{k}"),
                kind: AggregatorKind::Ddgag,
                node,
                tan_phi,
                offers: stack(&mut rng, cfg, true, (0.1, 3.0), (5.0, 40.0)),
                fixed_output: 0.0,
            }
        } else if roll < 0.8 {
            Aggregator {
                id: format!("DRAG{k}"),
                kind: AggregatorKind::Drag,
                node,
                tan_phi,
                offers: stack(&mut rng, cfg, false, (0.1, 3.0), (5.0, 40.0)),
                fixed_output: 0.0,
            }
        } else {
            let out = round_to(rng.random_range(0.1..2.0), 0.1);
            renewable += out;
            Aggregator {
                id: format!("REAG{k}"),
                kind: AggregatorKind::Reag,
                node,
                tan_phi,
                offers: BlockOfferStack::default(),
                fixed_output: out,
            }
        };
        aggregators.push(agg);
    }

    let gens = rng.random_range(1..=cfg.max_wholesale.max(1));
    let drs = rng.random_range(0..=cfg.max_wholesale);
    let mut wholesale = Vec::new();
    let mut gen_capacity = 0.0;
    for g in 0..gens {
        let offers = stack(&mut rng, cfg, true, (2.0, 30.0), (5.0, 40.0));
        gen_capacity += offers.capacity();
        wholesale.push(WholesaleParticipant {
            id: format!("Gen{g}"),
            kind: ParticipantKind::Gen,
            offers,
        });
    }
    for d in 0..drs {
        wholesale.push(WholesaleParticipant {
            id: format!("DR{d}"),
            kind: ParticipantKind::Dr,
            offers: stack(&mut rng, cfg, false, (2.0, 20.0), (5.0, 40.0)),
        });
    }

    // With every dispatchable aggregator idle the network exports `renewable − loads`; the
    // firm load absorbs that and leaves the generators a share they can always cover.
    let idle_export = renewable - network.nodes.iter().map(|n| n.load_p).sum::<f64>();
    let headroom = gen_capacity - (-idle_export).max(0.0);
    let firm = idle_export.max(0.0) + round_to(rng.random_range(0.0..0.8) * headroom, 0.1).min(headroom);

    Scenario {
        network,
        aggregators,
        wholesale,
        firm_wholesale_load: firm,
        sweep_step: round_to(rng.random_range(0.2..1.0), 0.05),
        tolerance: 1e-7,
        coupling: Coupling::Equality,
        q_dso_cap: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn generated_scenarios_are_valid() {
        let cfg = SynthConfig::default();
        for seed in 0..100 {
            let s = random_scenario(seed, &cfg);
            assert_eq!(validate(&s), Vec::new(), "seed {seed}");
            assert!(s.network.node_count() <= 12);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = SynthConfig::default();
        assert_eq!(random_scenario(7, &cfg), random_scenario(7, &cfg));
    }
}
