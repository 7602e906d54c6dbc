//! Per-node queue disciplines.
//!
//! * `nonc`  - plain FIFO DropTail, no coding.
//! * `cope`  - natives in FIFO, one-hop XOR coding decided at each
//!   transmission opportunity, DropTail on overflow.
//! * `bfly`  - like `cope` but also admits two-hop codes whose decode
//!   point is two hops downstream (butterfly structures from the
//!   static catalog).
//! * `ncaqm` - stores coded packets: an XOR pass runs over the queue at
//!   enqueue time (and once more on the head at each transmission
//!   opportunity), and congestion drops target the flow dominating the
//!   coded virtual queues instead of the tail.
//!
//! Every coding decision is gated twice: the flow set must match a
//! catalog code formed at this node, and each constituent must be
//! decodable at its decode node given current neighbor knowledge.

mod ncaqm;

pub use ncaqm::Estimators;

use crate::catalog::Compiled;
use crate::ids::{FlowId, HyperarcId, NodeId};
use crate::simcore::flows::SimFlowTable;
use crate::simcore::packet::{CodedPacket, DecodingBuffer, PacketId, PacketKind};
use rand::Rng;
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisciplineKind {
    NoNc,
    Cope,
    Bfly,
    Ncaqm,
}

impl DisciplineKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nonc" => Some(DisciplineKind::NoNc),
            "cope" => Some(DisciplineKind::Cope),
            "bfly" => Some(DisciplineKind::Bfly),
            "ncaqm" => Some(DisciplineKind::Ncaqm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DisciplineKind::NoNc => "nonc",
            DisciplineKind::Cope => "cope",
            DisciplineKind::Bfly => "bfly",
            DisciplineKind::Ncaqm => "ncaqm",
        }
    }
}

/// When the XOR pass over the whole queue runs (ncaqm only). The head
/// packet always gets a final pass at each transmission opportunity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecodePolicy {
    OnEnqueue,
    EveryMs(f64),
}

/// What to drop when the selected flow has no uncoded packet left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropFallback {
    /// Drop the newest queued packet even if coded.
    Tail,
    /// Refuse the packet whose arrival triggered the overflow; falls
    /// back to the tail when that packet was already absorbed by a
    /// coding pass.
    Incoming,
}

#[derive(Debug, Clone)]
pub struct QmConfig {
    pub kind: DisciplineKind,
    pub capacity: usize,
    pub window: usize,
    pub recode: RecodePolicy,
    pub drop_fallback: DropFallback,
}

impl Default for QmConfig {
    fn default() -> Self {
        QmConfig {
            kind: DisciplineKind::NoNc,
            capacity: 10,
            window: 100,
            recode: RecodePolicy::OnEnqueue,
            drop_fallback: DropFallback::Tail,
        }
    }
}

/// One code usable at a node: either a catalog entry over a hyperarc
/// originating here, or a synthesized singleton for an ack stream hop.
#[derive(Debug, Clone)]
pub struct NodeCodeEntry {
    pub hyperarc: HyperarcId,
    /// Member flows (simulator flow ids), sorted.
    pub flows: Vec<FlowId>,
    /// Decode node per member, parallel to `flows`.
    pub decode_nodes: Vec<NodeId>,
    pub formed_at: NodeId,
    /// True when every decode node is a direct hyperarc target.
    pub one_hop: bool,
}

/// All codes relevant at one node. Flow sets are keyed as bitmasks
/// over simulator flow ids, which caps a scenario at 64 flow streams.
#[derive(Debug, Clone, Default)]
pub struct NodeEntryTable {
    pub entries: Vec<NodeCodeEntry>,
    by_mask: HashMap<(u64, NodeId), usize>,
    /// flow -> entries containing it (its split options at this node).
    pub flow_options: BTreeMap<FlowId, Vec<usize>>,
}

fn flow_bit(f: FlowId) -> u64 {
    debug_assert!(f.index() < 64, "at most 64 flow streams per scenario");
    1u64 << f.index()
}

impl NodeEntryTable {
    pub fn lookup(&self, flows: &[FlowId], formed_at: NodeId) -> Option<usize> {
        let mask = flows.iter().fold(0u64, |m, &f| m | flow_bit(f));
        self.lookup_mask(mask, formed_at)
    }

    pub fn lookup_mask(&self, mask: u64, formed_at: NodeId) -> Option<usize> {
        self.by_mask.get(&(mask, formed_at)).copied()
    }

    fn push(&mut self, e: NodeCodeEntry) {
        let idx = self.entries.len();
        let mask = e.flows.iter().fold(0u64, |m, &f| m | flow_bit(f));
        self.by_mask.insert((mask, e.formed_at), idx);
        for &f in &e.flows {
            self.flow_options.entry(f).or_default().push(idx);
        }
        self.entries.push(e);
    }
}

/// Build the per-node entry tables for a compiled scenario plus its
/// simulator flow table (which may add ack streams).
pub fn build_entry_tables(compiled: &Compiled, flows: &SimFlowTable) -> Vec<NodeEntryTable> {
    let hg = &compiled.hypergraph;
    let n_nodes = compiled.scenario.nodes.len();
    let mut tables: Vec<NodeEntryTable> = vec![NodeEntryTable::default(); n_nodes];

    for node_idx in 0..n_nodes {
        let node = NodeId(node_idx as u32);
        for k in compiled.catalog.runtime_codes_at(node, hg) {
            let code = compiled.catalog.code(k);
            let h = hg.hyperarc(code.hyperarc);
            let one_hop = code
                .decode_nodes
                .iter()
                .all(|d| h.targets.contains(d));
            tables[node_idx].push(NodeCodeEntry {
                hyperarc: code.hyperarc,
                flows: code.flows.clone(),
                decode_nodes: code.decode_nodes.clone(),
                formed_at: code.formed_at,
                one_hop,
            });
        }
    }

    // Ack streams travel the reverse paths on singleton codes.
    for f in &flows.flows {
        if f.kind != PacketKind::Ack {
            continue;
        }
        for w in f.path.windows(2) {
            let h = hg
                .hyperarc_id(w[0], &[w[1]])
                .expect("reverse links are declared for ack paths");
            tables[w[0].index()].push(NodeCodeEntry {
                hyperarc: h,
                flows: vec![f.id],
                decode_nodes: vec![w[1]],
                formed_at: w[0],
                one_hop: true,
            });
        }
    }
    tables
}

/// A view of neighbor decoding-buffer contents: live (perfect oracle)
/// or from the last advertisement round.
pub enum Knowledge<'a> {
    Perfect(&'a [DecodingBuffer]),
    Snapshot(&'a [HashSet<PacketId>]),
}

impl Knowledge<'_> {
    pub fn knows(&self, node: NodeId, id: PacketId) -> bool {
        match self {
            Knowledge::Perfect(bufs) => bufs[node.index()].contains(id),
            Knowledge::Snapshot(s) => s[node.index()].contains(&id),
        }
    }
}

/// Mutable queue state of one node.
#[derive(Debug, Clone)]
pub struct QmState {
    pub node: NodeId,
    pub cfg: QmConfig,
    /// FIFO slots, head first.
    pub queue: Vec<CodedPacket>,
    pub est: Estimators,
}

/// Result of an enqueue: packets evicted by the discipline's drop rule.
#[derive(Debug, Default)]
pub struct EnqueueOutcome {
    pub dropped: Vec<CodedPacket>,
    /// Drop victims that had zero dominance everywhere (diagnostic;
    /// stays zero when the drop rule works as intended).
    pub zero_dominance_drops: u64,
}

/// A transmission plan: which queue slots will be combined and shipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxPlan {
    pub slots: Vec<usize>,
    pub entry: usize,
}

impl QmState {
    pub fn new(node: NodeId, cfg: QmConfig, table: &NodeEntryTable) -> Self {
        QmState {
            node,
            est: Estimators::new(cfg.window, table),
            cfg,
            queue: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Natives of one flow currently queued (counts coded constituents
    /// once each).
    pub fn flow_count(&self, f: FlowId) -> usize {
        self.queue
            .iter()
            .map(|p| p.natives.iter().filter(|n| n.flow == f).count())
            .sum()
    }

    /// Per-flow native counts over the whole queue in one pass.
    pub fn flow_counts(&self) -> BTreeMap<FlowId, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.queue {
            for n in &p.natives {
                *counts.entry(n.flow).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn enqueue<R: Rng>(
        &mut self,
        table: &NodeEntryTable,
        flows: &SimFlowTable,
        pkt: CodedPacket,
        knowledge: &Knowledge,
        rng: &mut R,
    ) -> EnqueueOutcome {
        let incoming_head_id = pkt.natives[0].id;
        self.queue.push(pkt);
        let mut out = EnqueueOutcome::default();
        match self.cfg.kind {
            DisciplineKind::NoNc | DisciplineKind::Cope | DisciplineKind::Bfly => {
                while self.queue.len() > self.cfg.capacity {
                    out.dropped.push(self.queue.pop().unwrap());
                }
            }
            DisciplineKind::Ncaqm => {
                if self.cfg.recode == RecodePolicy::OnEnqueue {
                    self.recode_queue(table, flows, knowledge);
                }
                while self.queue.len() > self.cfg.capacity {
                    self.drop_one(table, flows, rng, Some(incoming_head_id), &mut out);
                }
            }
        }
        out
    }

    /// XOR pass over the whole queue: try to fold every later packet
    /// into each earlier one while the combination stays an eligible
    /// catalog code; freed slots compact after each outer step.
    pub fn recode_queue(
        &mut self,
        table: &NodeEntryTable,
        flows: &SimFlowTable,
        knowledge: &Knowledge,
    ) {
        let mut m = 0;
        while m < self.queue.len() {
            let mut n = m + 1;
            while n < self.queue.len() {
                if let Some(entry) =
                    eligible_combination(self, table, flows, &[m, n], knowledge, DisciplineKind::Ncaqm)
                {
                    let absorbed = self.queue.remove(n);
                    let formed = table.entries[entry].formed_at;
                    self.queue[m].combine(absorbed, formed);
                } else {
                    n += 1;
                }
            }
            m += 1;
        }
    }

    /// Drop one packet chosen by the coded-queue dominance metric. The
    /// metric competes over the scenario's flows; a flow's backlog
    /// covers its whole session, ack stream included, and so does the
    /// victim search.
    fn drop_one<R: Rng>(
        &mut self,
        table: &NodeEntryTable,
        flows: &SimFlowTable,
        rng: &mut R,
        incoming: Option<PacketId>,
        out: &mut EnqueueOutcome,
    ) {
        let phi = self.compute_phi(table);
        // Fold each ack stream's contribution into its parent session.
        let mut session_phi: BTreeMap<FlowId, f64> = BTreeMap::new();
        for (&f, &v) in &phi {
            *session_phi.entry(flows.get(f).data_flow).or_insert(0.0) += v;
        }
        if session_phi.is_empty() {
            out.dropped.push(self.queue.pop().unwrap());
            return;
        }
        let best = session_phi
            .values()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<FlowId> = session_phi
            .iter()
            .filter(|(_, &v)| v >= best - 1e-12)
            .map(|(&f, _)| f)
            .collect();
        let victim_flow = winners[rng.gen_range(0..winners.len())];
        let had_dominance = [Some(victim_flow), flows.ack_of(victim_flow)]
            .into_iter()
            .flatten()
            .any(|f| self.est.has_dominance(self, table, f));

        // Preferably the last uncoded packet of the chosen session.
        let pos = self.queue.iter().rposition(|p| {
            !p.is_coded() && flows.get(p.natives[0].flow).data_flow == victim_flow
        });
        let dropped = match pos {
            Some(i) => self.queue.remove(i),
            None => match (self.cfg.drop_fallback, incoming) {
                (DropFallback::Incoming, Some(id)) => {
                    // Refuse the arrival if it is still a standalone packet.
                    match self
                        .queue
                        .iter()
                        .rposition(|p| !p.is_coded() && p.natives[0].id == id)
                    {
                        Some(i) => self.queue.remove(i),
                        None => self.queue.pop().unwrap(),
                    }
                }
                _ => self.queue.pop().unwrap(),
            },
        };
        if !had_dominance {
            out.zero_dominance_drops += 1;
        }
        out.dropped.push(dropped);
    }

    /// Phi per flow: the coded virtual-queue mass over hyperarcs where
    /// the flow is dominant.
    pub fn compute_phi(&self, table: &NodeEntryTable) -> BTreeMap<FlowId, f64> {
        self.est.compute_phi(self, table)
    }

    /// Pick what the node would transmit next. Non-mutating; apply
    /// with `commit_transmission`.
    pub fn select_transmission(
        &self,
        table: &NodeEntryTable,
        flows: &SimFlowTable,
        knowledge: &Knowledge,
    ) -> Option<TxPlan> {
        if self.queue.is_empty() {
            return None;
        }
        let head = &self.queue[0];
        match self.cfg.kind {
            DisciplineKind::NoNc => Some(TxPlan {
                slots: vec![0],
                entry: self.passthrough_entry(table, head)?,
            }),
            DisciplineKind::Cope | DisciplineKind::Bfly | DisciplineKind::Ncaqm => {
                if head.is_coded() && self.cfg.kind != DisciplineKind::Ncaqm {
                    // Forwarding a two-hop code formed upstream.
                    return Some(TxPlan {
                        slots: vec![0],
                        entry: self.passthrough_entry(table, head)?,
                    });
                }
                // Greedy growth of the head packet; for ncaqm this is
                // the final recoding pass at the transmission
                // opportunity.
                let mut slots = vec![0usize];
                let mut entry = self.passthrough_entry(table, head)?;
                for n in 1..self.queue.len() {
                    let mut candidate = slots.clone();
                    candidate.push(n);
                    if let Some(e) =
                        eligible_combination(self, table, flows, &candidate, knowledge, self.cfg.kind)
                    {
                        slots = candidate;
                        entry = e;
                    }
                }
                Some(TxPlan { slots, entry })
            }
        }
    }

    /// Entry for shipping a packet as-is.
    fn passthrough_entry(&self, table: &NodeEntryTable, pkt: &CodedPacket) -> Option<usize> {
        let formed = pkt.formed_at.unwrap_or(self.node);
        table.lookup(&pkt.flows(), formed)
    }

    /// Remove the planned slots and produce the outgoing packet.
    pub fn commit_transmission(&mut self, table: &NodeEntryTable, plan: &TxPlan) -> CodedPacket {
        debug_assert!(!plan.slots.is_empty() && plan.slots[0] == 0);
        let mut packet = self.queue.remove(0);
        // Remove from the back so earlier indices stay valid.
        let mut extra: Vec<CodedPacket> = Vec::new();
        for &i in plan.slots.iter().skip(1).rev() {
            extra.push(self.queue.remove(i - 1));
        }
        if !extra.is_empty() {
            let formed = table.entries[plan.entry].formed_at;
            for p in extra.into_iter().rev() {
                packet.combine(p, formed);
            }
        }
        packet
    }

    /// Record a completed transmission in the splitting estimator.
    pub fn note_transmission(&mut self, entry: usize, table: &NodeEntryTable) {
        let flows = table.entries[entry].flows.clone();
        for f in flows {
            self.est.push_usage(f, entry);
        }
    }
}

/// Check whether combining the given queue slots forms an eligible
/// code: all natives data, distinct flows, and the flow set matches a
/// catalog code formed at this node.
///
/// On top of the structural test, cope and ncaqm demand decodability
/// given what the neighbors' decoding buffers currently hold (their
/// control planes carry reception reports). bfly codes from topology
/// structure alone and accepts the decode risk when an overhearing
/// went missing; cope is further restricted to codes that decode at
/// the immediate next hops.
fn eligible_combination(
    state: &QmState,
    table: &NodeEntryTable,
    flows: &SimFlowTable,
    slots: &[usize],
    knowledge: &Knowledge,
    kind: DisciplineKind,
) -> Option<usize> {
    let mut mask = 0u64;
    for &i in slots {
        let p = &state.queue[i];
        if !p.is_all_data() {
            return None;
        }
        // Packets formed upstream cannot be re-coded here.
        if p.formed_at.is_some_and(|f| f != state.node) {
            return None;
        }
        for n in &p.natives {
            let bit = flow_bit(n.flow);
            if mask & bit != 0 {
                return None;
            }
            mask |= bit;
        }
    }
    if mask.count_ones() < 2 {
        return None;
    }
    let entry_idx = table.lookup_mask(mask, state.node)?;
    let entry = &table.entries[entry_idx];
    if kind == DisciplineKind::Cope && !entry.one_hop {
        return None;
    }
    if kind != DisciplineKind::Bfly {
        // Decodability: each member's decode node must already hold
        // every other constituent.
        let natives: Vec<&crate::simcore::packet::NativePacket> = slots
            .iter()
            .flat_map(|&i| state.queue[i].natives.iter())
            .collect();
        for (mi, &mf) in entry.flows.iter().enumerate() {
            let decode_at = entry.decode_nodes[mi];
            for n in &natives {
                if n.flow != mf && !knowledge.knows(decode_at, n.id) {
                    return None;
                }
            }
        }
    }
    let _ = flows;
    Some(entry_idx)
}

#[cfg(test)]
mod tests;
