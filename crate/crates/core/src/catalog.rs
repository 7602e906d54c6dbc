//! The catalog of feasible network codes.
//!
//! A code is a set of flows whose packets may be XOR-combined over a
//! hyperarc. The catalog is computed statically from topology and
//! routes; at run time the simulator additionally gates every code by
//! the actual contents of the neighbors' decoding buffers, so the
//! catalog is an upper bound on what is ever attempted.
//!
//! One-hop codes decode at the next hop (COPE style). Two-hop codes are
//! formed at one relay, forwarded through a second, and decoded one hop
//! after that (butterfly style); they induce the per-flow coding paths
//! and partitions used by the multi-hop traffic-splitting step.

use crate::ids::{CodeId, FlowId, HyperarcId, NodeId};
use crate::scenario::{CodingDepth, Scenario, ScenarioError};
use crate::topology::{build_hypergraph, Hypergraph};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Utility {
    Log,
}

#[derive(Debug, Clone)]
pub struct Flow {
    pub id: FlowId,
    pub source: NodeId,
    pub dest: NodeId,
    pub path: Vec<NodeId>,
    pub start_time: f64,
    pub utility: Utility,
}

impl Flow {
    pub fn pos_of(&self, n: NodeId) -> Option<usize> {
        self.path.iter().position(|&p| p == n)
    }

    pub fn next_hop(&self, n: NodeId) -> Option<NodeId> {
        let i = self.pos_of(n)?;
        self.path.get(i + 1).copied()
    }

    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }
}

pub fn flows_of(sc: &Scenario) -> Vec<Flow> {
    sc.flows
        .iter()
        .enumerate()
        .map(|(i, f)| Flow {
            id: FlowId::from_index(i),
            source: f.source,
            dest: f.dest,
            path: f.path.clone(),
            start_time: f.start_time,
            utility: Utility::Log,
        })
        .collect()
}

/// A coding opportunity: the XOR is formed at `coding_node`, carried
/// over `hops` (one hop for COPE-style codes, two for butterfly-style),
/// and each member flow's native is decoded at its decode node.
#[derive(Debug, Clone)]
pub struct CodingStructure {
    pub coding_node: NodeId,
    /// Hops from the coding node until decode (1 or 2).
    pub span: usize,
    /// Member flows, sorted by id.
    pub flows: Vec<FlowId>,
    /// Decode node per member flow, parallel to `flows`.
    pub decode_nodes: Vec<NodeId>,
    /// (origin, targets) for every hop the coded packet travels.
    pub hops: Vec<(NodeId, Vec<NodeId>)>,
}

/// True when `node` holds flow `flow`'s packet by the time the packet
/// reaches `coding_node`: either the node lies on the flow's path up to
/// the coding point, or a declared link lets it overhear one of the
/// upstream transmissions.
fn known_before_coding(sc: &Scenario, flow: &Flow, node: NodeId, coding_node: NodeId) -> bool {
    let iu = match flow.pos_of(coding_node) {
        Some(i) => i,
        None => return false,
    };
    if flow.path[..=iu].contains(&node) {
        return true;
    }
    (0..iu).any(|m| sc.find_link(flow.path[m], node).is_some())
}

fn subsets_of_size_ge2(n: usize) -> impl Iterator<Item = u32> {
    assert!(n <= 16, "too many flows crossing one node");
    (0u32..(1 << n)).filter(|m| m.count_ones() >= 2)
}

/// Enumerate every coding structure admissible at the scenario's
/// coding depth.
pub fn enumerate_structures(sc: &Scenario) -> Vec<CodingStructure> {
    let flows = flows_of(sc);
    let mut out = Vec::new();
    if sc.coding_depth == CodingDepth::None {
        return out;
    }

    let decodable = |members: &[&Flow], coding_node: NodeId, decode: &[NodeId]| -> bool {
        members.iter().enumerate().all(|(i, _)| {
            members
                .iter()
                .enumerate()
                .all(|(j, other)| i == j || known_before_coding(sc, other, decode[i], coding_node))
        })
    };

    // One-hop codes at every node forwarding two or more flows.
    for u in (0..sc.nodes.len()).map(|i| NodeId(i as u32)) {
        let crossing: Vec<&Flow> = flows
            .iter()
            .filter(|f| f.pos_of(u).is_some() && f.dest != u)
            .collect();
        if crossing.len() < 2 {
            continue;
        }
        for mask in subsets_of_size_ge2(crossing.len()) {
            let members: Vec<&Flow> = crossing
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, f)| *f)
                .collect();
            let decode: Vec<NodeId> = members.iter().map(|f| f.next_hop(u).unwrap()).collect();
            if decodable(&members, u, &decode) {
                out.push(CodingStructure {
                    coding_node: u,
                    span: 1,
                    flows: members.iter().map(|f| f.id).collect(),
                    decode_nodes: decode.clone(),
                    hops: vec![(u, decode)],
                });
            }
        }
    }

    // Two-hop codes over every shared pair of consecutive hops.
    if sc.coding_depth == CodingDepth::TwoHop {
        for u in (0..sc.nodes.len()).map(|i| NodeId(i as u32)) {
            let mut by_second: BTreeMap<NodeId, Vec<&Flow>> = BTreeMap::new();
            for f in &flows {
                if let Some(i) = f.pos_of(u) {
                    if let (Some(&v), true) = (f.path.get(i + 1), f.path.len() > i + 2) {
                        by_second.entry(v).or_default().push(f);
                    }
                }
            }
            for (v, sharing) in by_second {
                if sharing.len() < 2 {
                    continue;
                }
                for mask in subsets_of_size_ge2(sharing.len()) {
                    let members: Vec<&Flow> = sharing
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, f)| *f)
                        .collect();
                    let decode: Vec<NodeId> =
                        members.iter().map(|f| f.next_hop(v).unwrap()).collect();
                    if decodable(&members, u, &decode) {
                        out.push(CodingStructure {
                            coding_node: u,
                            span: 2,
                            flows: members.iter().map(|f| f.id).collect(),
                            decode_nodes: decode.clone(),
                            hops: vec![(u, vec![v]), (v, decode)],
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CodeDef {
    pub id: CodeId,
    pub hyperarc: HyperarcId,
    /// Member flow set S_k, sorted.
    pub flows: Vec<FlowId>,
    /// Where each member's native is decoded, parallel to `flows`.
    pub decode_nodes: Vec<NodeId>,
    /// Node where the XOR is created. Equals the hyperarc origin except
    /// for the downstream hops of two-hop codes.
    pub formed_at: NodeId,
}

impl CodeDef {
    pub fn is_coded(&self) -> bool {
        self.flows.len() >= 2
    }

    pub fn member_slot(&self, f: FlowId) -> Option<usize> {
        self.flows.iter().position(|&x| x == f)
    }
}

/// One partition of a flow over a coding path: the code carrying the
/// partition on each hop of the path. Distinct partitions of the same
/// coding path always reference distinct codes over a shared hyperarc.
#[derive(Debug, Clone)]
pub struct NcPartition {
    pub hops: Vec<(HyperarcId, CodeId)>,
}

/// A maximal sub-path of a flow over which it is coded at most once.
#[derive(Debug, Clone)]
pub struct NcPath {
    pub nodes: Vec<NodeId>,
    pub partitions: Vec<NcPartition>,
}

#[derive(Debug, Clone)]
pub struct CodeCatalog {
    pub coding_depth: CodingDepth,
    pub codes: Vec<CodeDef>,
    pub by_hyperarc: Vec<Vec<CodeId>>,
    /// flow -> path position -> available (hyperarc, code) choices for
    /// the flow's next hop from that position.
    pub options: Vec<Vec<Vec<(HyperarcId, CodeId)>>>,
    /// flow -> coding paths, present only at two-hop depth.
    pub nc_paths: Option<Vec<Vec<NcPath>>>,
    pub structures: Vec<CodingStructure>,
    /// Representative per (hyperarc, flow set, formed_at); partition
    /// bookkeeping may duplicate singleton codes, the runtime uses only
    /// the canonical one.
    canon_of: Vec<CodeId>,
    canonical_lookup: BTreeMap<(HyperarcId, Vec<FlowId>, NodeId), CodeId>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("coding depth {depth} requested but the scenario declares no overhearing links and no code is decodable")]
    NoOverhearingLinks { depth: u8 },
}

impl CodeCatalog {
    pub fn code(&self, k: CodeId) -> &CodeDef {
        &self.codes[k.index()]
    }

    pub fn canonical(&self, k: CodeId) -> CodeId {
        self.canon_of[k.index()]
    }

    pub fn is_canonical(&self, k: CodeId) -> bool {
        self.canon_of[k.index()] == k
    }

    pub fn canonical_code(
        &self,
        h: HyperarcId,
        flows: &[FlowId],
        formed_at: NodeId,
    ) -> Option<CodeId> {
        let mut key = flows.to_vec();
        key.sort_unstable();
        self.canonical_lookup.get(&(h, key, formed_at)).copied()
    }

    /// Canonical codes whose hyperarc originates at `node`.
    pub fn runtime_codes_at(&self, node: NodeId, hg: &Hypergraph) -> Vec<CodeId> {
        self.codes
            .iter()
            .filter(|c| self.is_canonical(c.id) && hg.hyperarc(c.hyperarc).origin == node)
            .map(|c| c.id)
            .collect()
    }

    /// Canonical multi-flow codes that are formed at `node` (candidates
    /// for XOR-combining at that node).
    pub fn coded_formed_at(&self, node: NodeId) -> Vec<CodeId> {
        self.codes
            .iter()
            .filter(|c| self.is_canonical(c.id) && c.is_coded() && c.formed_at == node)
            .map(|c| c.id)
            .collect()
    }
}

struct CatalogBuilder<'a> {
    hg: &'a Hypergraph,
    codes: Vec<CodeDef>,
    canonical_lookup: BTreeMap<(HyperarcId, Vec<FlowId>, NodeId), CodeId>,
    canon_of: Vec<CodeId>,
}

impl<'a> CatalogBuilder<'a> {
    fn push(
        &mut self,
        hyperarc: HyperarcId,
        flows: Vec<FlowId>,
        decode_nodes: Vec<NodeId>,
        formed_at: NodeId,
    ) -> CodeId {
        let id = CodeId::from_index(self.codes.len());
        let key = (hyperarc, flows.clone(), formed_at);
        let canon = *self.canonical_lookup.entry(key).or_insert(id);
        self.canon_of.push(canon);
        self.codes.push(CodeDef {
            id,
            hyperarc,
            flows,
            decode_nodes,
            formed_at,
        });
        id
    }

    fn singleton(&mut self, flow: &Flow, pos: usize) -> (HyperarcId, CodeId) {
        let from = flow.path[pos];
        let to = flow.path[pos + 1];
        let h = self
            .hg
            .hyperarc_id(from, &[to])
            .expect("every link has a unicast hyperarc");
        let k = self.push(h, vec![flow.id], vec![to], from);
        (h, k)
    }

    fn structure_hyperarcs(&self, st: &CodingStructure) -> Vec<HyperarcId> {
        st.hops
            .iter()
            .map(|(origin, targets)| {
                self.hg
                    .hyperarc_id(*origin, targets)
                    .expect("structure hyperarcs were enumerated into the hypergraph")
            })
            .collect()
    }
}

/// Build the code catalog for a validated scenario over its hypergraph.
pub fn build_code_catalog(sc: &Scenario, hg: &Hypergraph) -> Result<CodeCatalog, CatalogError> {
    let flows = flows_of(sc);
    let structures = enumerate_structures(sc);
    let mut b = CatalogBuilder {
        hg,
        codes: Vec::new(),
        canonical_lookup: BTreeMap::new(),
        canon_of: Vec::new(),
    };

    // Coded entries first: one CodeDef per hop of each structure.
    let mut structure_codes: Vec<Vec<(HyperarcId, CodeId)>> = Vec::with_capacity(structures.len());
    for st in &structures {
        let hs = b.structure_hyperarcs(st);
        let mut per_hop = Vec::with_capacity(hs.len());
        for h in hs {
            let k = b.push(h, st.flows.clone(), st.decode_nodes.clone(), st.coding_node);
            per_hop.push((h, k));
        }
        structure_codes.push(per_hop);
    }

    let mut options: Vec<Vec<Vec<(HyperarcId, CodeId)>>> = Vec::with_capacity(flows.len());
    let mut nc_paths: Option<Vec<Vec<NcPath>>> = None;

    if sc.coding_depth == CodingDepth::TwoHop {
        // Multi-hop bookkeeping: segment every flow's path into coding
        // paths, each with an uncoded partition plus one partition per
        // structure instance, and partition-owned singleton codes so
        // the partition -> code map stays injective per hyperarc.
        let mut all_paths = Vec::with_capacity(flows.len());
        let mut flow_options: Vec<Vec<Vec<(HyperarcId, CodeId)>>> = flows
            .iter()
            .map(|f| vec![Vec::new(); f.hops()])
            .collect();
        for flow in &flows {
            // Structure instances touching this flow, as hop intervals.
            let mut instances: Vec<(usize, usize, usize)> = Vec::new(); // (lo, hi, structure idx)
            for (si, st) in structures.iter().enumerate() {
                if st.flows.contains(&flow.id) {
                    let lo = flow.pos_of(st.coding_node).unwrap();
                    instances.push((lo, lo + st.span, si));
                }
            }
            instances.sort_unstable();
            // Merge overlapping intervals into segments.
            let mut segments: Vec<(usize, usize, Vec<usize>)> = Vec::new();
            for (lo, hi, si) in instances {
                match segments.last_mut() {
                    Some((_, shi, sis)) if lo < *shi => {
                        *shi = (*shi).max(hi);
                        sis.push(si);
                    }
                    _ => segments.push((lo, hi, vec![si])),
                }
            }
            // Fill gaps with uncoded-only segments.
            let mut tiles: Vec<(usize, usize, Vec<usize>)> = Vec::new();
            let mut cursor = 0usize;
            for (lo, hi, sis) in segments {
                if cursor < lo {
                    tiles.push((cursor, lo, Vec::new()));
                }
                tiles.push((lo, hi, sis));
                cursor = hi;
            }
            if cursor < flow.hops() {
                tiles.push((cursor, flow.hops(), Vec::new()));
            }

            let mut paths = Vec::with_capacity(tiles.len());
            for (lo, hi, sis) in tiles {
                let nodes = flow.path[lo..=hi].to_vec();
                let mut partitions = Vec::with_capacity(1 + sis.len());
                // Uncoded partition.
                let uncoded: Vec<(HyperarcId, CodeId)> =
                    (lo..hi).map(|j| b.singleton(flow, j)).collect();
                partitions.push(NcPartition { hops: uncoded });
                // One partition per structure: the structure's codes on
                // its own hops, fresh singletons elsewhere.
                for si in sis {
                    let st = &structures[si];
                    let st_lo = flow.pos_of(st.coding_node).unwrap();
                    let mut hops = Vec::with_capacity(hi - lo);
                    for j in lo..hi {
                        if j >= st_lo && j < st_lo + st.span {
                            hops.push(structure_codes[si][j - st_lo]);
                        } else {
                            hops.push(b.singleton(flow, j));
                        }
                    }
                    partitions.push(NcPartition { hops });
                }
                for p in &partitions {
                    for (j, hk) in p.hops.iter().enumerate() {
                        flow_options[flow.id.index()][lo + j].push(*hk);
                    }
                }
                paths.push(NcPath { nodes, partitions });
            }
            all_paths.push(paths);
        }
        options = flow_options;
        nc_paths = Some(all_paths);
    } else {
        // One-hop / no coding: base singletons plus the coded entries
        // available at each position.
        for flow in &flows {
            let mut per_pos = Vec::with_capacity(flow.hops());
            for j in 0..flow.hops() {
                let mut choices = vec![b.singleton(flow, j)];
                for (si, st) in structures.iter().enumerate() {
                    if st.coding_node == flow.path[j] && st.flows.contains(&flow.id) {
                        choices.push(structure_codes[si][0]);
                    }
                }
                per_pos.push(choices);
            }
            options.push(per_pos);
        }
    }

    let has_coded = b.codes.iter().any(|c| c.is_coded());
    if sc.coding_depth != CodingDepth::None && !has_coded {
        let on_some_path = |from: NodeId, to: NodeId| {
            flows
                .iter()
                .any(|f| f.path.windows(2).any(|w| w[0] == from && w[1] == to))
        };
        let any_overhearing = sc.links.iter().any(|l| !on_some_path(l.from, l.to));
        if !any_overhearing {
            return Err(CatalogError::NoOverhearingLinks {
                depth: sc.coding_depth.hops(),
            });
        }
    }

    let mut by_hyperarc = vec![Vec::new(); hg.hyperarcs.len()];
    for c in &b.codes {
        by_hyperarc[c.hyperarc.index()].push(c.id);
    }

    Ok(CodeCatalog {
        coding_depth: sc.coding_depth,
        codes: b.codes,
        by_hyperarc,
        options,
        nc_paths,
        structures,
        canon_of: b.canon_of,
        canonical_lookup: b.canonical_lookup,
    })
}

/// A fully built scenario: validated inputs, hypergraph, flows and the
/// code catalog, ready for the solver or the simulator.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub scenario: Scenario,
    pub flows: Vec<Flow>,
    pub hypergraph: Hypergraph,
    pub catalog: CodeCatalog,
}

#[derive(Debug, Error, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

pub fn compile(scenario: Scenario) -> Result<Compiled, CompileError> {
    let hypergraph = build_hypergraph(&scenario)?;
    let catalog = build_code_catalog(&scenario, &hypergraph)?;
    let flows = flows_of(&scenario);
    Ok(Compiled {
        scenario,
        flows,
        hypergraph,
        catalog,
    })
}
