//! Scenario, network and participant types plus structural validation.
//!
//! All types here are plain data and serialize directly to the case-file schema.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A bus with its firm active (MW) and reactive (MVAr) load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    #[serde(rename = "lp", default)]
    pub load_p: f64,
    #[serde(rename = "lq", default)]
    pub load_q: f64,
}

/// A line. `from` is expected to be the end nearer the substation, but orientation is
/// always re-derived by [`derived_incidence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: NodeId,
    pub to: NodeId,
    /// Resistance, p.u.
    pub r: f64,
    /// Reactance, p.u.
    pub x: f64,
    pub pl_max: f64,
    pub ql_max: f64,
}

fn default_base_mva() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    /// Squared voltage limits and the fixed squared voltage at the substation, p.u.²
    pub u_min: f64,
    pub u_max: f64,
    pub u_sub: f64,
    pub substation: NodeId,
    pub nodes: Vec<Node>,
    pub branches: Vec<Branch>,
}

impl NetworkModel {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfferBlock {
    pub p_max: f64,
    pub price: f64,
}

/// Which way prices must run for the stack to describe a convex cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Supply,
    Demand,
}

/// Price/quantity blocks in offer order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockOfferStack(pub Vec<OfferBlock>);

impl BlockOfferStack {
    pub fn new(blocks: Vec<OfferBlock>) -> Self {
        Self(blocks)
    }

    pub fn single(p_max: f64, price: f64) -> Self {
        Self(vec![OfferBlock { p_max, price }])
    }

    pub fn blocks(&self) -> &[OfferBlock] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn capacity(&self) -> f64 {
        self.0.iter().map(|b| b.p_max).sum()
    }

    /// Supply prices must not fall, demand prices must not rise.
    pub fn is_monotone(&self, side: Side) -> bool {
        self.0.windows(2).all(|w| match side {
            Side::Supply => w[1].price >= w[0].price,
            Side::Demand => w[1].price <= w[0].price,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregatorKind {
    /// Dispatchable distributed generation.
    #[serde(rename = "DDGAG")]
    Ddgag,
    /// Demand response (consumption blocks).
    #[serde(rename = "DRAG")]
    Drag,
    /// Renewable with a fixed, costless output.
    #[serde(rename = "REAG")]
    Reag,
}

impl AggregatorKind {
    pub fn side(self) -> Side {
        match self {
            AggregatorKind::Drag => Side::Demand,
            _ => Side::Supply,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregator {
    pub id: String,
    pub kind: AggregatorKind,
    pub node: NodeId,
    #[serde(default)]
    pub tan_phi: f64,
    #[serde(rename = "blocks", default)]
    pub offers: BlockOfferStack,
    #[serde(default)]
    pub fixed_output: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParticipantKind {
    Gen,
    #[serde(rename = "DR")]
    Dr,
}

impl ParticipantKind {
    pub fn side(self) -> Side {
        match self {
            ParticipantKind::Gen => Side::Supply,
            ParticipantKind::Dr => Side::Demand,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WholesaleParticipant {
    pub id: String,
    pub kind: ParticipantKind,
    #[serde(rename = "blocks")]
    pub offers: BlockOfferStack,
}

/// How the awarded quantity is tied to the distribution network's net export.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Net export equals the award.
    #[default]
    Equality,
    /// Net export is at least the award.
    AtLeast,
}

fn default_sweep_step() -> f64 {
    0.1
}

fn default_tolerance() -> f64 {
    crate::lp::DEFAULT_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub network: NetworkModel,
    #[serde(default)]
    pub aggregators: Vec<Aggregator>,
    #[serde(default)]
    pub wholesale: Vec<WholesaleParticipant>,
    #[serde(rename = "firm_load", default)]
    pub firm_wholesale_load: f64,
    #[serde(default = "default_sweep_step")]
    pub sweep_step: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub coupling: Coupling,
    /// Optional symmetric cap on the substation reactive exchange, MVAr.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_dso_cap: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    Radiality,
    Convexity,
    NodeReference,
    VoltageLimits,
    BranchParameter,
    Load,
    Offer,
    Identifier,
    Settings,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Radiality => "radiality",
            ViolationKind::Convexity => "convexity",
            ViolationKind::NodeReference => "node reference",
            ViolationKind::VoltageLimits => "voltage limits",
            ViolationKind::BranchParameter => "branch parameter",
            ViolationKind::Load => "load",
            ViolationKind::Offer => "offer",
            ViolationKind::Identifier => "identifier",
            ViolationKind::Settings => "settings",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Dotted path to the offending field, e.g. `aggregators[2].blocks[1].price`.
    pub path: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.path, self.kind, self.message)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, kind: ViolationKind, message: impl Into<String>) {
        self.0.push(Violation {
            path: path.into(),
            kind,
            message: message.into(),
        });
    }
}

/// Every violated structural invariant. An empty list means the scenario is valid.
pub fn validate(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Collector(Vec::new());
    validate_network(&scenario.network, &mut out);
    let n = scenario.network.node_count();

    let mut ids = BTreeSet::new();
    for (i, agg) in scenario.aggregators.iter().enumerate() {
        let path = format!("aggregators[{i}]");
        if !ids.insert(agg.id.as_str()) {
            out.push(format!("{path}.id"), ViolationKind::Identifier, format!("duplicate id {:?}", agg.id));
        }
        if agg.node.0 >= n {
            out.push(
                format!("{path}.node"),
                ViolationKind::NodeReference,
                format!("node {} does not exist ({} nodes)", agg.node, n),
            );
        }
        if !agg.tan_phi.is_finite() {
            out.push(format!("{path}.tan_phi"), ViolationKind::Offer, "tan_phi must be finite");
        }
        match agg.kind {
            AggregatorKind::Reag => {
                if !agg.offers.is_empty() {
                    out.push(
                        format!("{path}.blocks"),
                        ViolationKind::Offer,
                        "renewable aggregator output is fixed and takes no offer blocks",
                    );
                }
                if !(agg.fixed_output.is_finite() && agg.fixed_output >= 0.0) {
                    out.push(
                        format!("{path}.fixed_output"),
                        ViolationKind::Offer,
                        format!("fixed output must be >= 0, got {}", agg.fixed_output),
                    );
                }
            }
            _ => {
                if agg.fixed_output != 0.0 {
                    out.push(
                        format!("{path}.fixed_output"),
                        ViolationKind::Offer,
                        "only renewable aggregators carry a fixed output",
                    );
                }
                validate_stack(&agg.offers, agg.kind.side(), &path, &mut out);
            }
        }
    }
    for (i, p) in scenario.wholesale.iter().enumerate() {
        let path = format!("wholesale[{i}]");
        if !ids.insert(p.id.as_str()) {
            out.push(format!("{path}.id"), ViolationKind::Identifier, format!("duplicate id {:?}", p.id));
        }
        validate_stack(&p.offers, p.kind.side(), &path, &mut out);
    }

    if !(scenario.firm_wholesale_load.is_finite() && scenario.firm_wholesale_load >= 0.0) {
        out.push("firm_load", ViolationKind::Load, "firm wholesale load must be finite and >= 0");
    }
    if !(scenario.sweep_step.is_finite() && scenario.sweep_step > 0.0) {
        out.push("sweep_step", ViolationKind::Settings, "sweep step must be > 0");
    }
    if !(scenario.tolerance.is_finite() && scenario.tolerance > 0.0) {
        out.push("tolerance", ViolationKind::Settings, "tolerance must be > 0");
    }
    if let Some(cap) = scenario.q_dso_cap {
        if cap.is_nan() || cap <= 0.0 {
            out.push("q_dso_cap", ViolationKind::Settings, "reactive exchange cap must be > 0");
        }
    }
    out.0
}

fn validate_stack(stack: &BlockOfferStack, side: Side, path: &str, out: &mut Collector) {
    for (b, block) in stack.blocks().iter().enumerate() {
        if !(block.p_max.is_finite() && block.p_max > 0.0) {
            out.push(
                format!("{path}.blocks[{b}].p_max"),
                ViolationKind::Offer,
                format!("block size must be > 0, got {}", block.p_max),
            );
        }
        if !block.price.is_finite() {
            out.push(format!("{path}.blocks[{b}].price"), ViolationKind::Offer, "price must be finite");
        }
    }
    if !stack.is_monotone(side) {
        let rule = match side {
            Side::Supply => "nondecreasing",
            Side::Demand => "nonincreasing",
        };
        out.push(
            format!("{path}.blocks"),
            ViolationKind::Convexity,
            format!("block prices must be {rule} for a convex offer"),
        );
    }
}

fn validate_network(net: &NetworkModel, out: &mut Collector) {
    let n = net.node_count();
    if n == 0 {
        out.push("network.nodes", ViolationKind::Radiality, "network has no nodes");
        return;
    }
    if !(net.base_mva.is_finite() && net.base_mva > 0.0) {
        out.push("network.base_mva", ViolationKind::Settings, "power base must be > 0");
    }
    for (i, node) in net.nodes.iter().enumerate() {
        if node.id.0 != i {
            out.push(
                format!("network.nodes[{i}].id"),
                ViolationKind::Identifier,
                format!("node ids must be dense and ordered; expected {i}, got {}", node.id),
            );
        }
        if !(node.load_p.is_finite() && node.load_p >= 0.0) {
            out.push(format!("network.nodes[{i}].lp"), ViolationKind::Load, "active load must be >= 0");
        }
        if !node.load_q.is_finite() {
            out.push(format!("network.nodes[{i}].lq"), ViolationKind::Load, "reactive load must be finite");
        }
    }
    if net.substation.0 >= n {
        out.push(
            "network.substation",
            ViolationKind::NodeReference,
            format!("substation {} does not exist", net.substation),
        );
    }
    if !(net.u_min > 0.0 && net.u_min <= net.u_sub && net.u_sub <= net.u_max && net.u_max.is_finite()) {
        out.push(
            "network.u_min",
            ViolationKind::VoltageLimits,
            format!(
                "need 0 < u_min <= u_sub <= u_max, got {} / {} / {}",
                net.u_min, net.u_sub, net.u_max
            ),
        );
    }

    let mut endpoints_ok = true;
    for (j, br) in net.branches.iter().enumerate() {
        let path = format!("network.branches[{j}]");
        for (end, id) in [("from", br.from), ("to", br.to)] {
            if id.0 >= n {
                endpoints_ok = false;
                out.push(format!("{path}.{end}"), ViolationKind::NodeReference, format!("node {id} does not exist"));
            }
        }
        if br.from == br.to {
            endpoints_ok = false;
            out.push(path.clone(), ViolationKind::Radiality, "branch is a self-loop");
        }
        if !(br.r.is_finite() && br.r >= 0.0) {
            out.push(format!("{path}.r"), ViolationKind::BranchParameter, "resistance must be >= 0");
        }
        if !(br.x.is_finite() && br.x >= 0.0) {
            out.push(format!("{path}.x"), ViolationKind::BranchParameter, "reactance must be >= 0");
        }
        if br.pl_max.is_nan() || br.pl_max <= 0.0 {
            out.push(format!("{path}.pl_max"), ViolationKind::BranchParameter, "active flow limit must be > 0");
        }
        if br.ql_max.is_nan() || br.ql_max <= 0.0 {
            out.push(format!("{path}.ql_max"), ViolationKind::BranchParameter, "reactive flow limit must be > 0");
        }
    }
    if endpoints_ok {
        if let Some(reason) = radiality_defect(net) {
            out.push("network.branches", ViolationKind::Radiality, reason);
        }
    }
}

/// Why the branch list is not a spanning tree, if it is not.
fn radiality_defect(net: &NetworkModel) -> Option<String> {
    let n = net.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for (j, br) in net.branches.iter().enumerate() {
        let (a, b) = (find(&mut parent, br.from.0), find(&mut parent, br.to.0));
        if a == b {
            return Some(format!("branch {j} closes a cycle; the network must be radial"));
        }
        parent[a] = b;
    }
    if net.branch_count() + 1 != n {
        return Some(format!(
            "{} branches cannot connect {} nodes; the network must be a single radial tree",
            net.branch_count(),
            n
        ));
    }
    None
}

/// Branch orientation relative to the substation.
///
/// Each branch flows parent → child; `A(j, n)` is +1 at the parent and −1 at the child, so
/// `Σ_j A(j, n)·Pl_j` is the net active power leaving node `n` through the network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub parent: Vec<NodeId>,
    pub child: Vec<NodeId>,
    /// The branch feeding each node from above; `None` for the substation.
    pub upstream: Vec<Option<BranchId>>,
    /// Nodes in breadth-first order from the substation.
    pub order: Vec<NodeId>,
}

impl Incidence {
    pub fn coefficient(&self, branch: BranchId, node: NodeId) -> f64 {
        if self.parent[branch.0] == node {
            1.0
        } else if self.child[branch.0] == node {
            -1.0
        } else {
            0.0
        }
    }

    /// Branches from `node` up to the substation, nearest first.
    pub fn path_to_root(&self, node: NodeId) -> Vec<BranchId> {
        let mut path = Vec::new();
        let mut at = node;
        while let Some(b) = self.upstream[at.0] {
            path.push(b);
            at = self.parent[b.0];
        }
        path
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.path_to_root(node).len()
    }
}

/// Orient every branch away from the substation.
pub fn derived_incidence(net: &NetworkModel) -> Result<Incidence, Error> {
    let n = net.node_count();
    if net.substation.0 >= n {
        return Err(Error::NonRadial(format!("substation {} does not exist", net.substation)));
    }
    if let Some(bad) = net.branches.iter().find(|b| b.from.0 >= n || b.to.0 >= n) {
        return Err(Error::NonRadial(format!(
            "branch {}-{} references a missing node",
            bad.from, bad.to
        )));
    }
    if let Some(reason) = radiality_defect(net) {
        return Err(Error::NonRadial(reason));
    }

    let mut adjacent: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (j, br) in net.branches.iter().enumerate() {
        adjacent[br.from.0].push((j, br.to.0));
        adjacent[br.to.0].push((j, br.from.0));
    }
    let m = net.branch_count();
    let mut parent = vec![NodeId(0); m];
    let mut child = vec![NodeId(0); m];
    let mut upstream = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([net.substation.0]);
    seen[net.substation.0] = true;
    while let Some(u) = queue.pop_front() {
        order.push(NodeId(u));
        for &(j, v) in &adjacent[u] {
            if !seen[v] {
                seen[v] = true;
                parent[j] = NodeId(u);
                child[j] = NodeId(v);
                upstream[v] = Some(BranchId(j));
                queue.push_back(v);
            }
        }
    }
    Ok(Incidence {
        parent,
        child,
        upstream,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case;

    fn line(from: usize, to: usize) -> Branch {
        Branch {
            from: NodeId(from),
            to: NodeId(to),
            r: 0.001,
            x: 0.001,
            pl_max: 10.0,
            ql_max: 10.0,
        }
    }

    fn network(n: usize, branches: Vec<Branch>) -> NetworkModel {
        NetworkModel {
            base_mva: 1.0,
            u_min: 0.81,
            u_max: 1.21,
            u_sub: 1.0,
            substation: NodeId(0),
            nodes: (0..n)
                .map(|i| Node {
                    id: NodeId(i),
                    load_p: 0.0,
                    load_q: 0.0,
                })
                .collect(),
            branches,
        }
    }

    fn scenario(net: NetworkModel, aggregators: Vec<Aggregator>) -> Scenario {
        Scenario {
            network: net,
            aggregators,
            wholesale: Vec::new(),
            firm_wholesale_load: 0.0,
            sweep_step: 0.1,
            tolerance: 1e-7,
            coupling: Coupling::Equality,
            q_dso_cap: None,
        }
    }

    #[test]
    fn reference_case_is_valid() {
        let s = case::bundled("paper_reference").unwrap();
        assert_eq!(validate(&s), Vec::new());
    }

    #[test]
    fn cycle_is_one_radiality_violation() {
        let net = network(3, vec![line(0, 1), line(1, 2), line(2, 0)]);
        let v = validate(&scenario(net, Vec::new()));
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::Radiality);
    }

    #[test]
    fn disconnected_forest_is_not_radial() {
        let net = network(4, vec![line(0, 1), line(2, 3)]);
        let v = validate(&scenario(net, Vec::new()));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Radiality);
    }

    #[test]
    fn decreasing_generation_prices_violate_convexity() {
        let net = network(2, vec![line(0, 1)]);
        let agg = Aggregator {
            id: "g".into(),
            kind: AggregatorKind::Ddgag,
            node: NodeId(1),
            tan_phi: 0.0,
            offers: BlockOfferStack::new(vec![
                OfferBlock { p_max: 1.0, price: 20.0 },
                OfferBlock { p_max: 1.0, price: 10.0 },
            ]),
            fixed_output: 0.0,
        };
        let v = validate(&scenario(net, vec![agg]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Convexity);
        assert_eq!(v[0].path, "aggregators[0].blocks");
    }

    #[test]
    fn demand_prices_must_not_rise() {
        let stack = BlockOfferStack::new(vec![
            OfferBlock { p_max: 1.0, price: 30.0 },
            OfferBlock { p_max: 1.0, price: 28.0 },
        ]);
        assert!(stack.is_monotone(Side::Demand));
        assert!(!stack.is_monotone(Side::Supply));
    }

    #[test]
    fn unknown_aggregator_node_is_reported() {
        let net = network(2, vec![line(0, 1)]);
        let agg = Aggregator {
            id: "r".into(),
            kind: AggregatorKind::Reag,
            node: NodeId(7),
            tan_phi: 0.0,
            offers: BlockOfferStack::default(),
            fixed_output: 1.0,
        };
        let v = validate(&scenario(net, vec![agg]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NodeReference);
        assert_eq!(v[0].path, "aggregators[0].node");
    }

    #[test]
    fn voltage_limits_must_bracket_substation() {
        let mut net = network(2, vec![line(0, 1)]);
        net.u_sub = 1.3;
        let v = validate(&scenario(net, Vec::new()));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::VoltageLimits);
    }

    #[test]
    fn validate_is_idempotent() {
        let mut net = network(3, vec![line(0, 1), line(1, 2), line(2, 0)]);
        net.branches[0].r = -1.0;
        let s = scenario(net, Vec::new());
        assert_eq!(validate(&s), validate(&s));
        assert_eq!(validate(&s).len(), 2);
    }

    #[test]
    fn two_node_incidence() {
        let inc = derived_incidence(&network(2, vec![line(0, 1)])).unwrap();
        assert_eq!(inc.parent, vec![NodeId(0)]);
        assert_eq!(inc.child, vec![NodeId(1)]);
        assert_eq!(inc.upstream, vec![None, Some(BranchId(0))]);
    }

    #[test]
    fn reversed_branch_is_reoriented() {
        let inc = derived_incidence(&network(2, vec![line(1, 0)])).unwrap();
        assert_eq!(inc.parent, vec![NodeId(0)]);
        assert_eq!(inc.coefficient(BranchId(0), NodeId(0)), 1.0);
        assert_eq!(inc.coefficient(BranchId(0), NodeId(1)), -1.0);
    }

    #[test]
    fn star_leaves_hang_off_root() {
        let inc = derived_incidence(&network(5, (1..5).map(|k| line(0, k)).collect())).unwrap();
        assert!(inc.parent.iter().all(|&p| p == NodeId(0)));
        for k in 1..5 {
            assert_eq!(inc.depth(NodeId(k)), 1);
        }
    }

    #[test]
    fn reference_network_has_one_parent_per_node() {
        let s = case::bundled("paper_reference").unwrap();
        let inc = derived_incidence(&s.network).unwrap();
        assert_eq!(inc.parent.len(), 9);
        assert_eq!(inc.upstream.iter().filter(|u| u.is_none()).count(), 1);
        assert!(inc.upstream[s.network.substation.0].is_none());
        assert_eq!(inc.order.len(), 10);
    }

    #[test]
    fn cyclic_network_has_no_incidence() {
        let net = network(3, vec![line(0, 1), line(1, 2), line(2, 0)]);
        assert!(matches!(derived_incidence(&net), Err(Error::NonRadial(_))));
    }
}
