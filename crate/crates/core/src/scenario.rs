//! Scenario description: nodes, lossy links, flows with fixed routes,
//! interference, and the requested coding depth.
//!
//! A scenario is the single input to both the solver and the simulator.
//! It can be read from / written to JSON, or produced by one of the
//! built-in generators (`alice_bob`, `x_topology`, `cross`, `wheel`,
//! `grid`, `butterfly`).

use crate::ids::NodeId;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How many hops downstream of the coding point a packet may travel
/// before it is decoded. Depth 0 disables coding entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum CodingDepth {
    None,
    OneHop,
    TwoHop,
}

impl CodingDepth {
    pub fn hops(self) -> u8 {
        match self {
            CodingDepth::None => 0,
            CodingDepth::OneHop => 1,
            CodingDepth::TwoHop => 2,
        }
    }
}

impl TryFrom<u8> for CodingDepth {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(CodingDepth::None),
            1 => Ok(CodingDepth::OneHop),
            2 => Ok(CodingDepth::TwoHop),
            other => Err(format!("coding depth must be 0, 1 or 2, got {other}")),
        }
    }
}

impl From<CodingDepth> for u8 {
    fn from(d: CodingDepth) -> u8 {
        d.hops()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    #[serde(default)]
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSpec {
    pub from: NodeId,
    pub to: NodeId,
    /// For solver scenarios this is an abstract rate in units per
    /// transmission slot; for simulator scenarios it is bits per second.
    pub capacity: f64,
    #[serde(default = "default_success_prob")]
    pub success_prob: f64,
}

fn default_success_prob() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSpec {
    pub source: NodeId,
    pub dest: NodeId,
    /// Full node path from source to dest, both endpoints included.
    pub path: Vec<NodeId>,
    #[serde(default)]
    pub start_time: f64,
}

/// The boolean "in range" relation used by the protocol interference
/// model: either a distance threshold over node positions or an
/// explicit list of node pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Interference {
    Range { range: f64 },
    Adjacency { adjacency: Vec<(NodeId, NodeId)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub flows: Vec<FlowSpec>,
    pub coding_depth: CodingDepth,
    pub interference: Interference,
    /// Right-hand side of the per-clique airtime constraint.
    #[serde(default = "default_overprovision")]
    pub overprovision: f64,
}

fn default_overprovision() -> f64 {
    1.0
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("node {0} referenced but only {1} nodes declared")]
    UnknownNode(u32, usize),
    #[error("link {from}->{to} has zero or negative capacity")]
    ZeroCapacityLink { from: u32, to: u32 },
    #[error("link {from}->{to} has success probability {p} outside (0, 1]")]
    BadSuccessProb { from: u32, to: u32, p: f64 },
    #[error("self-link at node {0}")]
    SelfLink(u32),
    #[error("duplicate link {from}->{to}")]
    DuplicateLink { from: u32, to: u32 },
    #[error("flow {0}: path must start at the source and end at the destination")]
    BadPathEndpoints(usize),
    #[error("flow {0}: path repeats node {1}")]
    RepeatedPathNode(usize, u32),
    #[error("flow {0}: no link joins consecutive path nodes {1} and {2}")]
    DisconnectedFlowPath(usize, u32, u32),
    #[error("flow {0}: path has fewer than two nodes")]
    PathTooShort(usize),
    #[error("overprovision factor {0} outside (0, 1]")]
    BadOverprovision(f64),
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn find_link(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.links
            .iter()
            .position(|l| l.from == from && l.to == to)
    }

    /// Structural validation. Every build step assumes this has passed.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.nodes.len();
        let check = |id: NodeId| -> Result<(), ScenarioError> {
            if id.index() >= n {
                Err(ScenarioError::UnknownNode(id.0, n))
            } else {
                Ok(())
            }
        };
        if !(self.overprovision > 0.0 && self.overprovision <= 1.0) {
            return Err(ScenarioError::BadOverprovision(self.overprovision));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &self.links {
            check(l.from)?;
            check(l.to)?;
            if l.from == l.to {
                return Err(ScenarioError::SelfLink(l.from.0));
            }
            if l.capacity <= 0.0 {
                return Err(ScenarioError::ZeroCapacityLink {
                    from: l.from.0,
                    to: l.to.0,
                });
            }
            if !(l.success_prob > 0.0 && l.success_prob <= 1.0) {
                return Err(ScenarioError::BadSuccessProb {
                    from: l.from.0,
                    to: l.to.0,
                    p: l.success_prob,
                });
            }
            if !seen.insert((l.from, l.to)) {
                return Err(ScenarioError::DuplicateLink {
                    from: l.from.0,
                    to: l.to.0,
                });
            }
        }
        for (fi, f) in self.flows.iter().enumerate() {
            check(f.source)?;
            check(f.dest)?;
            if f.path.len() < 2 {
                return Err(ScenarioError::PathTooShort(fi));
            }
            if f.path[0] != f.source || *f.path.last().unwrap() != f.dest {
                return Err(ScenarioError::BadPathEndpoints(fi));
            }
            let mut on_path = std::collections::BTreeSet::new();
            for node in &f.path {
                check(*node)?;
                if !on_path.insert(*node) {
                    return Err(ScenarioError::RepeatedPathNode(fi, node.0));
                }
            }
            for w in f.path.windows(2) {
                if self.find_link(w[0], w[1]).is_none() {
                    return Err(ScenarioError::DisconnectedFlowPath(fi, w[0].0, w[1].0));
                }
            }
        }
        if let Interference::Adjacency { adjacency } = &self.interference {
            for (a, b) in adjacency {
                check(*a)?;
                check(*b)?;
            }
        }
        Ok(())
    }

    /// Symmetric "in range" matrix used by the protocol model and by
    /// the overhearing logic.
    pub fn in_range_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut m = vec![vec![false; n]; n];
        match &self.interference {
            Interference::Range { range } => {
                for a in 0..n {
                    for b in 0..n {
                        let dx = self.nodes[a].x - self.nodes[b].x;
                        let dy = self.nodes[a].y - self.nodes[b].y;
                        m[a][b] = (dx * dx + dy * dy).sqrt() <= *range;
                    }
                }
            }
            Interference::Adjacency { adjacency } => {
                for a in 0..n {
                    m[a][a] = true;
                }
                for (a, b) in adjacency {
                    m[a.index()][b.index()] = true;
                    m[b.index()][a.index()] = true;
                }
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Built-in generators.
//
// The relay-centered topologies place the relay in the middle of a
// 200 m x 200 m terrain with terminals on a 90 m circle; the butterfly
// and grid use a 300 m x 300 m terrain. All single-relay topologies and
// the butterfly form one collision domain.

fn node(name: &str, x: f64, y: f64) -> NodeSpec {
    NodeSpec {
        name: name.to_string(),
        x,
        y,
    }
}

fn bidi(links: &mut Vec<LinkSpec>, a: NodeId, b: NodeId, capacity: f64, success_prob: f64) {
    links.push(LinkSpec {
        from: a,
        to: b,
        capacity,
        success_prob,
    });
    links.push(LinkSpec {
        from: b,
        to: a,
        capacity,
        success_prob,
    });
}

fn one_way(links: &mut Vec<LinkSpec>, a: NodeId, b: NodeId, capacity: f64, success_prob: f64) {
    links.push(LinkSpec {
        from: a,
        to: b,
        capacity,
        success_prob,
    });
}

/// Two flows in opposite directions through one relay. `caps[0]` is the
/// capacity of the A1<->I links, `caps[1]` of the A2<->I links.
pub fn alice_bob(caps: [f64; 2], success_prob: f64, depth: CodingDepth) -> Scenario {
    let a1 = NodeId(0);
    let relay = NodeId(1);
    let a2 = NodeId(2);
    let mut links = Vec::new();
    bidi(&mut links, a1, relay, caps[0], success_prob);
    bidi(&mut links, a2, relay, caps[1], success_prob);
    Scenario {
        nodes: vec![
            node("A1", 10.0, 100.0),
            node("I", 100.0, 100.0),
            node("A2", 190.0, 100.0),
        ],
        links,
        flows: vec![
            FlowSpec {
                source: a1,
                dest: a2,
                path: vec![a1, relay, a2],
                start_time: 0.0,
            },
            FlowSpec {
                source: a2,
                dest: a1,
                path: vec![a2, relay, a1],
                start_time: 0.0,
            },
        ],
        coding_depth: depth,
        interference: Interference::Range { range: 1000.0 },
        overprovision: 1.0,
    }
}

/// Two crossing flows A1->I->A2 and B1->I->B2. A1/B2 and B1/A2 are
/// within overhearing range of each other. `src_caps` are the A1<->I
/// and B1<->I capacities, `dst_caps` the I<->A2 and I<->B2 capacities.
pub fn x_topology(
    src_caps: [f64; 2],
    dst_caps: [f64; 2],
    success_prob: f64,
    depth: CodingDepth,
) -> Scenario {
    let a1 = NodeId(0);
    let b1 = NodeId(1);
    let relay = NodeId(2);
    let a2 = NodeId(3);
    let b2 = NodeId(4);
    let mut links = Vec::new();
    bidi(&mut links, a1, relay, src_caps[0], success_prob);
    bidi(&mut links, b1, relay, src_caps[1], success_prob);
    bidi(&mut links, relay, a2, dst_caps[0], success_prob);
    bidi(&mut links, relay, b2, dst_caps[1], success_prob);
    // Overhearing links: A2 hears B1's uplink, B2 hears A1's.
    one_way(&mut links, a1, b2, src_caps[0], success_prob);
    one_way(&mut links, b1, a2, src_caps[1], success_prob);
    let r = 90.0 / 2f64.sqrt();
    Scenario {
        nodes: vec![
            node("A1", 100.0 - r, 100.0 + r),
            node("B1", 100.0 + r, 100.0 + r),
            node("I", 100.0, 100.0),
            node("A2", 100.0 + r, 100.0 - r),
            node("B2", 100.0 - r, 100.0 - r),
        ],
        links,
        flows: vec![
            FlowSpec {
                source: a1,
                dest: a2,
                path: vec![a1, relay, a2],
                start_time: 0.0,
            },
            FlowSpec {
                source: b1,
                dest: b2,
                path: vec![b1, relay, b2],
                start_time: 0.0,
            },
        ],
        coding_depth: depth,
        interference: Interference::Range { range: 1000.0 },
        overprovision: 1.0,
    }
}

/// `n_flows` unicast flows through a single central relay. Every
/// receiver can overhear every source except its own flow's. The cross
/// topology is `wheel(4, ...)`.
pub fn wheel(n_flows: usize, capacity: f64, success_prob: f64, depth: CodingDepth) -> Scenario {
    assert!(n_flows >= 1, "wheel needs at least one flow");
    let relay = NodeId(0);
    let mut nodes = vec![node("I", 100.0, 100.0)];
    let mut links = Vec::new();
    let mut flows = Vec::new();
    let radius = 90.0;
    for i in 0..n_flows {
        let src = NodeId((1 + 2 * i) as u32);
        let dst = NodeId((2 + 2 * i) as u32);
        let theta = 2.0 * std::f64::consts::PI * i as f64 / n_flows as f64;
        nodes.push(node(
            &format!("S{}", i + 1),
            100.0 + radius * theta.cos(),
            100.0 + radius * theta.sin(),
        ));
        nodes.push(node(
            &format!("R{}", i + 1),
            100.0 - radius * theta.cos(),
            100.0 - radius * theta.sin(),
        ));
        bidi(&mut links, src, relay, capacity, success_prob);
        bidi(&mut links, dst, relay, capacity, success_prob);
        flows.push(FlowSpec {
            source: src,
            dest: dst,
            path: vec![src, relay, dst],
            start_time: 0.0,
        });
    }
    // Receiver i overhears every other source.
    for i in 0..n_flows {
        for j in 0..n_flows {
            if i != j {
                one_way(
                    &mut links,
                    NodeId((1 + 2 * j) as u32),
                    NodeId((2 + 2 * i) as u32),
                    capacity,
                    success_prob,
                );
            }
        }
    }
    Scenario {
        nodes,
        links,
        flows,
        coding_depth: depth,
        interference: Interference::Range { range: 1000.0 },
        overprovision: 1.0,
    }
}

/// Four crossing flows through one relay.
pub fn cross(capacity: f64, success_prob: f64, depth: CodingDepth) -> Scenario {
    wheel(4, capacity, success_prob, depth)
}

/// Two-hop coding topology: flows A1->I1->I2->A2 and B1->I1->I2->B2,
/// with A1/B2 and B1/A2 in overhearing range. Capacities in order:
/// A1<->I1, B1<->I1, I1<->I2, I2<->A2, I2<->B2.
pub fn butterfly(caps: [f64; 5], success_prob: f64, depth: CodingDepth) -> Scenario {
    let a1 = NodeId(0);
    let b1 = NodeId(1);
    let i1 = NodeId(2);
    let i2 = NodeId(3);
    let a2 = NodeId(4);
    let b2 = NodeId(5);
    let mut links = Vec::new();
    bidi(&mut links, a1, i1, caps[0], success_prob);
    bidi(&mut links, b1, i1, caps[1], success_prob);
    bidi(&mut links, i1, i2, caps[2], success_prob);
    bidi(&mut links, i2, a2, caps[3], success_prob);
    bidi(&mut links, i2, b2, caps[4], success_prob);
    one_way(&mut links, a1, b2, caps[0], success_prob);
    one_way(&mut links, b1, a2, caps[1], success_prob);
    Scenario {
        nodes: vec![
            node("A1", 40.0, 240.0),
            node("B1", 40.0, 60.0),
            node("I1", 120.0, 150.0),
            node("I2", 200.0, 150.0),
            node("A2", 270.0, 240.0),
            node("B2", 270.0, 60.0),
        ],
        links,
        flows: vec![
            FlowSpec {
                source: a1,
                dest: a2,
                path: vec![a1, i1, i2, a2],
                start_time: 0.0,
            },
            FlowSpec {
                source: b1,
                dest: b2,
                path: vec![b1, i1, i2, b2],
                start_time: 0.0,
            },
        ],
        coding_depth: depth,
        interference: Interference::Range { range: 1000.0 },
        overprovision: 1.0,
    }
}

/// Random mesh: 15 nodes over a 300 m x 300 m terrain split into nine
/// 100 m cells, one or two nodes per cell. Nodes in the same or
/// neighboring cells are linked directly; farther apart pairs relay
/// through a node in a cell adjacent to both. Flow endpoints are drawn
/// uniformly; arrivals follow a Poisson process with the given rate.
pub fn grid(
    seed: u64,
    capacity: f64,
    success_prob: f64,
    depth: CodingDepth,
    duration: f64,
    flows_per_sec: f64,
) -> Scenario {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n_nodes = 15usize;
    // Assign 15 nodes to 9 cells: six cells get two nodes, three get one.
    let mut cell_of = Vec::with_capacity(n_nodes);
    let mut counts = [0usize; 9];
    let mut order: Vec<usize> = (0..9).collect();
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    // First nine nodes cover every cell once, remaining six double up.
    for i in 0..n_nodes {
        let c = if i < 9 {
            order[i]
        } else {
            order[i - 9] // the first six cells in the shuffled order get a second node
        };
        counts[c] += 1;
        cell_of.push(c);
    }
    debug_assert!(counts.iter().all(|&c| c >= 1 && c <= 2));
    let mut nodes = Vec::with_capacity(n_nodes);
    for (i, &c) in cell_of.iter().enumerate() {
        let cx = (c % 3) as f64 * 100.0;
        let cy = (c / 3) as f64 * 100.0;
        nodes.push(node(
            &format!("N{i}"),
            cx + rng.gen_range(5.0..95.0),
            cy + rng.gen_range(5.0..95.0),
        ));
    }
    let neighbors = |a: usize, b: usize| -> bool {
        let (ax, ay) = ((a % 3) as i32, (a / 3) as i32);
        let (bx, by) = ((b % 3) as i32, (b / 3) as i32);
        (ax - bx).abs() <= 1 && (ay - by).abs() <= 1
    };
    // Links join nodes in the same or neighboring cells (the routing
    // rule below relies on that) and any pair within plain radio range,
    // which is what enables overhearing across cell boundaries.
    let radio_range = 150.0;
    let mut links = Vec::new();
    for a in 0..n_nodes {
        for b in (a + 1)..n_nodes {
            let dx = nodes[a].x - nodes[b].x;
            let dy = nodes[a].y - nodes[b].y;
            if neighbors(cell_of[a], cell_of[b]) || (dx * dx + dy * dy).sqrt() <= radio_range {
                bidi(
                    &mut links,
                    NodeId(a as u32),
                    NodeId(b as u32),
                    capacity,
                    success_prob,
                );
            }
        }
    }
    // Poisson flow arrivals with uniformly drawn endpoints.
    let mut flows = Vec::new();
    let mut t = 0.0f64;
    loop {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        t += -u.ln() / flows_per_sec;
        if t >= duration {
            break;
        }
        // Redraw both endpoints whenever the same node comes up twice.
        let (src, dst) = loop {
            let s = rng.gen_range(0..n_nodes);
            let d = rng.gen_range(0..n_nodes);
            if s != d {
                break (s, d);
            }
        };
        let path = if neighbors(cell_of[src], cell_of[dst]) {
            vec![NodeId(src as u32), NodeId(dst as u32)]
        } else {
            // Relay through a node adjacent to both endpoints' cells.
            let candidates: Vec<usize> = (0..n_nodes)
                .filter(|&r| {
                    r != src
                        && r != dst
                        && neighbors(cell_of[src], cell_of[r])
                        && neighbors(cell_of[r], cell_of[dst])
                })
                .collect();
            let r = candidates[rng.gen_range(0..candidates.len())];
            vec![NodeId(src as u32), NodeId(r as u32), NodeId(dst as u32)]
        };
        flows.push(FlowSpec {
            source: NodeId(src as u32),
            dest: NodeId(dst as u32),
            path,
            start_time: t,
        });
    }
    Scenario {
        nodes,
        links,
        flows,
        coding_depth: depth,
        interference: Interference::Range { range: 290.0 },
        overprovision: 1.0,
    }
}

/// Named generator dispatch used by the CLI and the browser demo.
/// `caps` is interpreted per topology; a single value is broadcast.
pub fn by_name(
    name: &str,
    caps: &[f64],
    success_prob: f64,
    depth: CodingDepth,
    wheel_flows: usize,
    grid_seed: u64,
    duration: f64,
) -> Result<Scenario, String> {
    let cap_or = |i: usize| -> f64 {
        if caps.is_empty() {
            1.0
        } else if caps.len() == 1 {
            caps[0]
        } else {
            caps.get(i).copied().unwrap_or(caps[0])
        }
    };
    match name {
        "alice-bob" => Ok(alice_bob([cap_or(0), cap_or(1)], success_prob, depth)),
        "x" => Ok(x_topology(
            [cap_or(0), cap_or(1)],
            [cap_or(2), cap_or(3)],
            success_prob,
            depth,
        )),
        "cross" => Ok(cross(cap_or(0), success_prob, depth)),
        "wheel" => Ok(wheel(wheel_flows, cap_or(0), success_prob, depth)),
        "butterfly" => Ok(butterfly(
            [cap_or(0), cap_or(1), cap_or(2), cap_or(3), cap_or(4)],
            success_prob,
            depth,
        )),
        "grid" => Ok(grid(
            grid_seed,
            cap_or(0),
            success_prob,
            depth,
            duration,
            6.0 / 30.0,
        )),
        other => Err(format!(
            "unknown topology '{other}' (expected alice-bob, x, cross, wheel, grid or butterfly)"
        )),
    }
}
