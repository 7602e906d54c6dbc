//! The event loop: medium arbitration over conflict cliques,
//! transmission outcomes with per-link Bernoulli losses and MAC
//! retransmissions, pseudo-broadcast overhearing, decoding, transport
//! reactions, and metric accounting.

use crate::catalog::Compiled;
use crate::ids::{FlowId, HyperarcId, NodeId};
use crate::metrics::{AckStats, FlowMetrics, Metrics, NodeMetrics, Totals};
use crate::qm::{build_entry_tables, Knowledge, NodeEntryTable, QmConfig, QmState};
use crate::simcore::flows::SimFlowTable;
use crate::simcore::packet::{CodedPacket, DecodingBuffer, NativePacket, PacketId, PacketKind};
use crate::transport::{OptimalSource, TcpConfig, TcpReceiver, TcpSender};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Tcp,
    Optimal,
    /// Source queues are kept topped up; no acks, no feedback.
    Saturated,
}

impl TransportKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tcp" => Some(TransportKind::Tcp),
            "optimal" => Some(TransportKind::Optimal),
            "saturated" => Some(TransportKind::Saturated),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransportKind::Tcp => "tcp",
            TransportKind::Optimal => "optimal",
            TransportKind::Saturated => "saturated",
        }
    }

    fn needs_acks(self) -> bool {
        !matches!(self, TransportKind::Saturated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnowledgePolicy {
    /// Senders read the true decoding-buffer state of their neighbors.
    Perfect,
    /// Senders see periodic snapshots (advertisement interval, s).
    Delayed(f64),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub qm: QmConfig,
    pub transport: TransportKind,
    pub tcp: TcpConfig,
    pub duration: f64,
    pub seed: u64,
    pub max_retries: u32,
    /// Fixed per-transmission medium overhead, seconds.
    pub per_tx_overhead: f64,
    pub decoding_buffer_capacity: usize,
    pub knowledge: KnowledgePolicy,
    /// Overrides the per-link success probability for overhearing.
    pub overhear_success: Option<f64>,
    pub queue_sample_interval: f64,
    pub record_events: bool,
    /// Flows whose spec start time is zero start uniformly within this
    /// window.
    pub start_window: f64,
    /// Price-to-rate scale for the optimal source; derived from the
    /// bottleneck when unset.
    pub price_scale: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            qm: QmConfig::default(),
            transport: TransportKind::Tcp,
            tcp: TcpConfig::default(),
            duration: 60.0,
            seed: 1,
            max_retries: 7,
            per_tx_overhead: 1.5e-3,
            decoding_buffer_capacity: 64,
            knowledge: KnowledgePolicy::Perfect,
            overhear_success: None,
            queue_sample_interval: 0.1,
            record_events: false,
            start_window: 5.0,
            price_scale: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("flow {flow}: no reverse link {from}->{to} for the ack path")]
    MissingReverseLink { flow: u32, from: u32, to: u32 },
}

#[derive(Debug)]
enum Ev {
    FlowStart(FlowId),
    Arbitrate,
    TxEnd(u64),
    Rto { flow: FlowId, epoch: u64 },
    Pace(FlowId),
    QueueSample,
    Advertise,
    RecodePass,
}

struct Entry {
    time: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: the binary heap becomes a min-heap on (time, seq).
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NativeFate {
    Pending,
    Delivered,
    CodingLoss,
}

struct Flight {
    node: NodeId,
    packet: CodedPacket,
    hyperarc: HyperarcId,
    mac_target: NodeId,
    attempt: u32,
    fates: Vec<NativeFate>,
}

#[derive(Default, Clone)]
struct FlowAcc {
    created: u64,
    delivered: u64,
    payload_packets: u64,
    drops_queue: u64,
    drops_channel: u64,
    drops_coding: u64,
}

#[derive(Default, Clone)]
struct NodeAcc {
    airtime: f64,
    grants: u64,
    data_tx: u64,
    coded_tx: u64,
    /// Data transmit opportunities where natives of at least two
    /// distinct data flows were queued (a coding partner existed).
    partner_present: u64,
    drops_queue: u64,
    queue_series: Vec<(f64, u32)>,
}

enum Source {
    Tcp(TcpSender),
    Optimal(OptimalSource),
    Saturated { next_seq: u64 },
}

pub struct Engine<'a> {
    compiled: &'a Compiled,
    cfg: SimConfig,
    flows: SimFlowTable,
    tables: Vec<NodeEntryTable>,
    qstates: Vec<QmState>,
    buffers: Vec<DecodingBuffer>,
    snapshots: Option<Vec<HashSet<PacketId>>>,
    /// Natives already processed per node (duplicate suppression).
    seen: Vec<HashSet<PacketId>>,
    sources: Vec<Source>,
    receivers: Vec<TcpReceiver>,
    opt_received: Vec<BTreeSet<u64>>,
    started: Vec<bool>,
    events: BinaryHeap<Entry>,
    ev_seq: u64,
    now: f64,
    ongoing: BTreeMap<u64, Flight>,
    node_busy: Vec<bool>,
    retx: Vec<Option<Flight>>,
    next_tx_id: u64,
    rng: ChaCha12Rng,
    next_packet_id: u64,
    /// Smoothed per-node, per-flow dual prices (optimal transport).
    node_prices: Vec<Vec<f64>>,
    acc_flows: Vec<FlowAcc>,
    acc_nodes: Vec<NodeAcc>,
    zero_dominance_drops: u64,
    transmissions: u64,
    attempts: u64,
    events_processed: u64,
    log: Option<Vec<String>>,
}

/// Run one simulation to completion and return its metrics.
pub fn run(compiled: &Compiled, cfg: &SimConfig) -> Result<Metrics, SimError> {
    Engine::new(compiled, cfg.clone())?.run_to_end()
}

impl<'a> Engine<'a> {
    pub fn new(compiled: &'a Compiled, cfg: SimConfig) -> Result<Self, SimError> {
        let flows = SimFlowTable::build(compiled, cfg.transport.needs_acks());
        // Ack paths must be backed by links.
        for f in &flows.flows {
            if f.kind == PacketKind::Ack {
                for w in f.path.windows(2) {
                    if compiled.hypergraph.link(w[0], w[1]).is_none() {
                        return Err(SimError::MissingReverseLink {
                            flow: f.data_flow.0,
                            from: w[0].0,
                            to: w[1].0,
                        });
                    }
                }
            }
        }
        let tables = build_entry_tables(compiled, &flows);
        let n_nodes = compiled.scenario.nodes.len();
        let qstates: Vec<QmState> = (0..n_nodes)
            .map(|i| QmState::new(NodeId(i as u32), cfg.qm.clone(), &tables[i]))
            .collect();
        let buffers = (0..n_nodes)
            .map(|_| DecodingBuffer::new(cfg.decoding_buffer_capacity))
            .collect();
        let snapshots = match cfg.knowledge {
            KnowledgePolicy::Perfect => None,
            KnowledgePolicy::Delayed(_) => Some(vec![HashSet::new(); n_nodes]),
        };
        let sources = compiled
            .flows
            .iter()
            .map(|f| match cfg.transport {
                TransportKind::Tcp => Source::Tcp(TcpSender::new(&cfg.tcp)),
                TransportKind::Optimal => {
                    let bottleneck_pps = f
                        .path
                        .windows(2)
                        .map(|w| {
                            compiled.hypergraph.link(w[0], w[1]).map_or(f64::INFINITY, |l| {
                                l.capacity / (8.0 * cfg.tcp.mss as f64)
                            })
                        })
                        .fold(f64::INFINITY, f64::min);
                    // Default scale puts the equilibrium coded-queue
                    // price around four packets along the path; the rate
                    // cap keeps the loop's overshoot from flooding the
                    // buffers before prices build up.
                    let scale = cfg.price_scale.unwrap_or(1.2 * bottleneck_pps);
                    Source::Optimal(OptimalSource::new(
                        scale,
                        bottleneck_pps / 50.0,
                        bottleneck_pps / 2.0,
                        bottleneck_pps / 4.0,
                    ))
                }
                TransportKind::Saturated => Source::Saturated { next_seq: 0 },
            })
            .collect();
        let n_data = compiled.flows.len();
        let n_sim_flows = flows.len();
        let rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let log = cfg.record_events.then(Vec::new);
        Ok(Engine {
            node_prices: vec![vec![0.0; n_sim_flows]; n_nodes],
            receivers: vec![TcpReceiver::default(); n_data],
            opt_received: vec![BTreeSet::new(); n_data],
            started: vec![false; n_data],
            events: BinaryHeap::new(),
            ev_seq: 0,
            now: 0.0,
            ongoing: BTreeMap::new(),
            node_busy: vec![false; n_nodes],
            retx: (0..n_nodes).map(|_| None).collect(),
            next_tx_id: 0,
            rng,
            next_packet_id: 0,
            acc_flows: vec![FlowAcc::default(); flows.len()],
            acc_nodes: vec![NodeAcc::default(); n_nodes],
            zero_dominance_drops: 0,
            transmissions: 0,
            attempts: 0,
            events_processed: 0,
            log,
            compiled,
            cfg,
            flows,
            tables,
            qstates,
            buffers,
            snapshots,
            seen: vec![HashSet::new(); n_nodes],
            sources,
        })
    }

    fn schedule(&mut self, time: f64, ev: Ev) {
        self.ev_seq += 1;
        self.events.push(Entry {
            time,
            seq: self.ev_seq,
            ev,
        });
    }

    fn trace(&mut self, msg: impl FnOnce() -> String) {
        if let Some(log) = &mut self.log {
            log.push(format!("{:.6} {}", self.now, msg()));
        }
    }

    pub fn run_to_end(mut self) -> Result<Metrics, SimError> {
        // Flow starts: spec time when given, else uniform in the start
        // window; drawn in flow order for determinism.
        for i in 0..self.compiled.flows.len() {
            let spec_start = self.compiled.flows[i].start_time;
            let t = if spec_start > 0.0 {
                spec_start
            } else if self.cfg.start_window > 0.0 {
                self.rng.gen_range(0.0..self.cfg.start_window)
            } else {
                0.0
            };
            self.schedule(t, Ev::FlowStart(FlowId::from_index(i)));
        }
        if self.cfg.queue_sample_interval > 0.0 {
            self.schedule(0.0, Ev::QueueSample);
        }
        if let KnowledgePolicy::Delayed(period) = self.cfg.knowledge {
            self.schedule(period, Ev::Advertise);
        }
        if let crate::qm::RecodePolicy::EveryMs(ms) = self.cfg.qm.recode {
            self.schedule(ms / 1000.0, Ev::RecodePass);
        }

        while let Some(entry) = self.events.pop() {
            if entry.time > self.cfg.duration {
                break;
            }
            self.now = entry.time;
            self.events_processed += 1;
            match entry.ev {
                Ev::FlowStart(f) => self.on_flow_start(f),
                Ev::Arbitrate => self.arbitrate(),
                Ev::TxEnd(id) => self.on_tx_end(id),
                Ev::Rto { flow, epoch } => self.on_rto(flow, epoch),
                Ev::Pace(f) => self.on_pace(f),
                Ev::QueueSample => {
                    for (i, q) in self.qstates.iter().enumerate() {
                        self.acc_nodes[i].queue_series.push((self.now, q.len() as u32));
                    }
                    let next = self.now + self.cfg.queue_sample_interval;
                    self.schedule(next, Ev::QueueSample);
                }
                Ev::Advertise => {
                    if let Some(snaps) = &mut self.snapshots {
                        for (i, b) in self.buffers.iter().enumerate() {
                            snaps[i] = b.snapshot();
                        }
                    }
                    if let KnowledgePolicy::Delayed(period) = self.cfg.knowledge {
                        self.schedule(self.now + period, Ev::Advertise);
                    }
                }
                Ev::RecodePass => {
                    for i in 0..self.qstates.len() {
                        let knowledge = match &self.snapshots {
                            Some(snap) => Knowledge::Snapshot(snap),
                            None => Knowledge::Perfect(&self.buffers),
                        };
                        self.qstates[i].recode_queue(&self.tables[i], &self.flows, &knowledge);
                    }
                    if let crate::qm::RecodePolicy::EveryMs(ms) = self.cfg.qm.recode {
                        self.schedule(self.now + ms / 1000.0, Ev::RecodePass);
                    }
                }
            }
        }
        Ok(self.finish())
    }

    fn on_flow_start(&mut self, f: FlowId) {
        self.started[f.index()] = true;
        match self.cfg.transport {
            TransportKind::Tcp => self.tcp_try_send(f),
            TransportKind::Optimal => self.on_pace(f),
            TransportKind::Saturated => self.top_up_saturated(f),
        }
    }

    // ------------------------------------------------------------------
    // Packet creation and enqueue.

    fn make_native(&mut self, flow: FlowId, kind: PacketKind, seq: u64, size: u32) -> NativePacket {
        self.next_packet_id += 1;
        NativePacket {
            id: PacketId(self.next_packet_id),
            flow,
            size,
            kind,
            seq,
            created_at: self.now,
            price_accum: 0.0,
        }
    }

    fn inject_data(&mut self, flow: FlowId, seq: u64) {
        let native = self.make_native(flow, PacketKind::Data, seq, self.cfg.tcp.mss);
        self.trace(|| format!("inject flow={} seq={seq}", flow.0));
        self.acc_flows[flow.index()].created += 1;
        let source = self.flows.get(flow).path[0];
        // The source itself knows its own packet.
        self.buffers[source.index()].insert(native.id);
        self.seen[source.index()].insert(native.id);
        self.enqueue_at(source, CodedPacket::uncoded(native));
    }

    fn inject_ack(&mut self, data_flow: FlowId, ack_seq: u64, price: f64) {
        let Some(ack_flow) = self.flows.ack_of(data_flow) else {
            return;
        };
        let mut native = self.make_native(ack_flow, PacketKind::Ack, ack_seq, self.cfg.tcp.ack_size);
        native.price_accum = price;
        self.acc_flows[ack_flow.index()].created += 1;
        let src = self.flows.get(ack_flow).path[0];
        self.buffers[src.index()].insert(native.id);
        self.seen[src.index()].insert(native.id);
        self.enqueue_at(src, CodedPacket::uncoded(native));
    }

    fn enqueue_at(&mut self, node: NodeId, mut pkt: CodedPacket) {
        // Optimal rate control: nodes maintain smoothed per-flow dual
        // prices driven by the coded-queue metric; passing data packets
        // pick up the node's current value. Smoothing at the node sees
        // congested episodes even when the packets of those episodes
        // are dropped, which per-packet sampling would censor away.
        if self.cfg.transport == TransportKind::Optimal {
            let phi = self.qstates[node.index()].compute_phi(&self.tables[node.index()]);
            let beta = 0.05;
            for (f, p) in &phi {
                let q = &mut self.node_prices[node.index()][f.index()];
                *q = (1.0 - beta) * *q + beta * p;
            }
            for n in &mut pkt.natives {
                if n.kind == PacketKind::Data {
                    n.price_accum += self.node_prices[node.index()][n.flow.index()];
                }
            }
        }
        let knowledge = match &self.snapshots {
            Some(s) => Knowledge::Snapshot(s),
            None => Knowledge::Perfect(&self.buffers),
        };
        let out = self.qstates[node.index()].enqueue(
            &self.tables[node.index()],
            &self.flows,
            pkt,
            &knowledge,
            &mut self.rng,
        );
        self.zero_dominance_drops += out.zero_dominance_drops;
        for dropped in out.dropped {
            self.acc_nodes[node.index()].drops_queue += 1;
            for n in &dropped.natives {
                self.acc_flows[n.flow.index()].drops_queue += 1;
            }
            self.trace(|| format!("drop queue node={} natives={}", node.0, dropped.natives.len()));
        }
        if !self.node_busy[node.index()] && self.retx[node.index()].is_none() {
            self.schedule(self.now, Ev::Arbitrate);
        }
    }

    // ------------------------------------------------------------------
    // Medium access.

    fn tx_duration(&self, packet: &CodedPacket, hyperarc: HyperarcId) -> f64 {
        let h = self.compiled.hypergraph.hyperarc(hyperarc);
        let min_cap = h
            .member_links
            .iter()
            .map(|l| self.compiled.hypergraph.links[l.index()].capacity)
            .fold(f64::INFINITY, f64::min);
        packet.size() as f64 * 8.0 / min_cap + self.cfg.per_tx_overhead
    }

    fn conflicts_with_ongoing(&self, h: HyperarcId) -> bool {
        self.ongoing.values().any(|fl| {
            fl.hyperarc == h
                || self.compiled.hypergraph.conflict.adj[h.index()][fl.hyperarc.index()]
        })
    }

    fn arbitrate(&mut self) {
        loop {
            // Candidate transmitters: idle nodes with a retransmission
            // pending or a transmittable head packet, conflict-free
            // against everything on the air.
            let mut candidates: Vec<(NodeId, Option<crate::qm::TxPlan>, HyperarcId)> = Vec::new();
            for i in 0..self.qstates.len() {
                if self.node_busy[i] {
                    continue;
                }
                let node = NodeId(i as u32);
                if let Some(fl) = &self.retx[i] {
                    if !self.conflicts_with_ongoing(fl.hyperarc) {
                        candidates.push((node, None, fl.hyperarc));
                    }
                    continue;
                }
                let knowledge = match &self.snapshots {
                    Some(s) => Knowledge::Snapshot(s),
                    None => Knowledge::Perfect(&self.buffers),
                };
                if let Some(plan) =
                    self.qstates[i].select_transmission(&self.tables[i], &self.flows, &knowledge)
                {
                    let h = self.tables[i].entries[plan.entry].hyperarc;
                    if !self.conflicts_with_ongoing(h) {
                        candidates.push((node, Some(plan), h));
                    }
                }
            }
            if candidates.is_empty() {
                return;
            }
            let pick = self.rng.gen_range(0..candidates.len());
            let (node, plan, hyperarc) = candidates.swap_remove(pick);
            self.grant(node, plan, hyperarc);
        }
    }

    fn grant(&mut self, node: NodeId, plan: Option<crate::qm::TxPlan>, hyperarc: HyperarcId) {
        let i = node.index();
        let flight = match plan {
            None => {
                let mut fl = self.retx[i].take().expect("retransmission pending");
                fl.attempt += 1;
                fl
            }
            Some(plan) => {
                let entry = plan.entry;
                let packet = self.qstates[i].commit_transmission(&self.tables[i], &plan);
                self.transmissions += 1;
                if packet.is_all_data() {
                    self.acc_nodes[i].data_tx += 1;
                    if packet.is_coded() {
                        self.acc_nodes[i].coded_tx += 1;
                    }
                    // Coding-partner availability at this opportunity:
                    // counting the departing packet itself, were two or
                    // more data flows present?
                    let mut present: Vec<u32> = self.qstates[i]
                        .queue
                        .iter()
                        .flat_map(|p| p.natives.iter())
                        .chain(packet.natives.iter())
                        .filter(|n| n.kind == PacketKind::Data)
                        .map(|n| self.flows.get(n.flow).data_flow.0)
                        .collect();
                    present.sort_unstable();
                    present.dedup();
                    if present.len() >= 2 {
                        self.acc_nodes[i].partner_present += 1;
                    }
                }
                // The discipline's split estimator sees one usage per
                // logical transmission.
                self.qstates[i].note_transmission(entry, &self.tables[i]);
                // MAC-address the lowest flow's next hop.
                let mac_target = self
                    .flows
                    .next_hop(packet.natives[0].flow, node)
                    .expect("packet routed through this node");
                let fates = vec![NativeFate::Pending; packet.natives.len()];
                if self.cfg.transport == TransportKind::Saturated {
                    // Refill saturated sources right after dequeue.
                    let data_flows: Vec<FlowId> = (0..self.flows.data_count)
                        .map(FlowId::from_index)
                        .filter(|f| self.flows.get(*f).path[0] == node && self.started[f.index()])
                        .collect();
                    for f in data_flows {
                        self.top_up_saturated(f);
                    }
                }
                Flight {
                    node,
                    packet,
                    hyperarc,
                    mac_target,
                    attempt: 1,
                    fates,
                }
            }
        };
        let dur = self.tx_duration(&flight.packet, flight.hyperarc);
        self.acc_nodes[i].airtime += dur;
        self.acc_nodes[i].grants += 1;
        self.attempts += 1;
        self.node_busy[i] = true;
        self.next_tx_id += 1;
        let id = self.next_tx_id;
        self.trace(|| {
            format!(
                "tx node={} natives={} attempt={} hyperarc={}",
                node.0,
                flight.packet.natives.len(),
                flight.attempt,
                flight.hyperarc.0
            )
        });
        self.ongoing.insert(id, flight);
        self.schedule(self.now + dur, Ev::TxEnd(id));
    }

    // ------------------------------------------------------------------
    // Transmission outcome.

    /// Targets whose destined natives still await delivery.
    fn pending_targets(&self, flight: &Flight) -> Vec<NodeId> {
        let h = self.compiled.hypergraph.hyperarc(flight.hyperarc);
        h.targets
            .iter()
            .copied()
            .filter(|&t| {
                flight.packet.natives.iter().enumerate().any(|(ni, n)| {
                    flight.fates[ni] == NativeFate::Pending
                        && self.flows.next_hop(n.flow, flight.node) == Some(t)
                })
            })
            .collect()
    }

    fn on_tx_end(&mut self, id: u64) {
        let mut flight = self.ongoing.remove(&id).expect("flight exists");
        self.node_busy[flight.node.index()] = false;

        let h = self.compiled.hypergraph.hyperarc(flight.hyperarc).clone();
        // Per-target reception draws, in target order.
        for &t in &h.targets {
            let link = self
                .compiled
                .hypergraph
                .link(flight.node, t)
                .expect("hyperarc targets are linked");
            if self.rng.gen_bool(link.success_prob) {
                self.receive(t, &mut flight);
            }
        }
        // Overhearers: any node with a declared link from the sender
        // that is not a target, drawing with its own link probability.
        let mut overhearers: Vec<(NodeId, f64)> = self
            .compiled
            .hypergraph
            .links
            .iter()
            .filter(|l| l.from == flight.node && !h.targets.contains(&l.to))
            .map(|l| (l.to, self.cfg.overhear_success.unwrap_or(l.success_prob)))
            .collect();
        overhearers.sort_by_key(|(n, _)| *n);
        for (n, p) in overhearers {
            if self.rng.gen_bool(p) {
                self.overhear(n, &flight.packet);
            }
        }

        // Retransmit while some receiver still misses its natives,
        // re-addressing the MAC frame to the first such target.
        let pending = self.pending_targets(&flight);
        let retries_left = flight.attempt < 1 + self.cfg.max_retries;
        if !pending.is_empty() && retries_left {
            flight.mac_target = pending[0];
            let node = flight.node;
            self.retx[node.index()] = Some(flight);
        } else {
            // Out of attempts: whatever stayed pending is lost.
            for (ni, fate) in flight.fates.iter().enumerate() {
                if *fate == NativeFate::Pending {
                    let f = flight.packet.natives[ni].flow;
                    self.acc_flows[f.index()].drops_channel += 1;
                    self.trace(|| format!("drop channel flow={}", f.0));
                }
            }
        }
        self.schedule(self.now, Ev::Arbitrate);
    }

    /// XOR extraction: learn every native derivable from the packet
    /// given the node's buffer; returns the set of known native ids.
    fn extract(&mut self, node: NodeId, packet: &CodedPacket) -> HashSet<PacketId> {
        let buf = &mut self.buffers[node.index()];
        let mut known: HashSet<PacketId> = packet
            .natives
            .iter()
            .map(|n| n.id)
            .filter(|&id| buf.contains(id))
            .collect();
        loop {
            let unknown: Vec<PacketId> = packet
                .natives
                .iter()
                .map(|n| n.id)
                .filter(|id| !known.contains(id))
                .collect();
            if unknown.len() == 1 {
                buf.insert(unknown[0]);
                known.insert(unknown[0]);
            } else {
                break;
            }
        }
        known
    }

    fn overhear(&mut self, node: NodeId, packet: &CodedPacket) {
        self.extract(node, packet);
    }

    /// A directed target received the whole packet.
    fn receive(&mut self, t: NodeId, flight: &mut Flight) {
        let destined: Vec<usize> = (0..flight.packet.natives.len())
            .filter(|&ni| {
                self.flows
                    .next_hop(flight.packet.natives[ni].flow, flight.node)
                    == Some(t)
            })
            .collect();

        let known = self.extract(t, &flight.packet);

        // Coded unit passing through unchanged (two-hop codes): every
        // native is addressed here, none is decodable, and a catalog
        // code continues from this node.
        if flight.packet.is_coded()
            && destined.len() == flight.packet.natives.len()
            && destined
                .iter()
                .any(|&ni| !known.contains(&flight.packet.natives[ni].id))
        {
            if let Some(formed) = flight.packet.formed_at {
                if self.tables[t.index()]
                    .lookup(&flight.packet.flows(), formed)
                    .is_some()
                {
                    let marker = flight.packet.natives[0].id;
                    if self.seen[t.index()].insert(marker) {
                        for ni in &destined {
                            flight.fates[*ni] = NativeFate::Delivered;
                        }
                        let pkt = flight.packet.clone();
                        self.trace(|| format!("forward coded unit node={}", t.0));
                        self.enqueue_at(t, pkt);
                    } else {
                        for ni in &destined {
                            flight.fates[*ni] = NativeFate::Delivered;
                        }
                    }
                    return;
                }
            }
        }

        for ni in destined {
            let native = flight.packet.natives[ni].clone();
            if !known.contains(&native.id) {
                // The sender predicted decodability but the receiver
                // cannot reconstruct this native.
                if flight.fates[ni] == NativeFate::Pending {
                    flight.fates[ni] = NativeFate::CodingLoss;
                    self.acc_flows[native.flow.index()].drops_coding += 1;
                    self.trace(|| format!("drop coding flow={} node={}", native.flow.0, t.0));
                }
                continue;
            }
            if flight.fates[ni] == NativeFate::Pending {
                flight.fates[ni] = NativeFate::Delivered;
            }
            if self.seen[t.index()].insert(native.id) {
                self.handle_native_at(t, native);
            }
        }
    }

    fn handle_native_at(&mut self, node: NodeId, native: NativePacket) {
        let flow = self.flows.get(native.flow).clone();
        self.trace(|| format!("arrive node={} flow={} seq={}", node.0, native.flow.0, native.seq));
        if flow.path.last() == Some(&node) {
            self.acc_flows[native.flow.index()].delivered += 1;
            self.deliver_to_transport(node, native);
        } else {
            self.enqueue_at(node, CodedPacket::uncoded(native));
        }
    }

    fn deliver_to_transport(&mut self, node: NodeId, native: NativePacket) {
        let _ = node;
        let sim_flow = self.flows.get(native.flow).clone();
        let data_flow = sim_flow.data_flow;
        match native.kind {
            PacketKind::Data => {
                match self.cfg.transport {
                    TransportKind::Tcp => {
                        let newly = self.receivers[data_flow.index()].on_data(native.seq);
                        self.acc_flows[native.flow.index()].payload_packets += newly;
                        let ack = self.receivers[data_flow.index()].rcv_nxt;
                        self.inject_ack(data_flow, ack, native.price_accum);
                    }
                    TransportKind::Optimal => {
                        if self.opt_received[data_flow.index()].insert(native.seq) {
                            self.acc_flows[native.flow.index()].payload_packets += 1;
                        }
                        self.inject_ack(data_flow, native.seq, native.price_accum);
                    }
                    TransportKind::Saturated => {
                        self.acc_flows[native.flow.index()].payload_packets += 1;
                    }
                }
            }
            PacketKind::Ack => {
                let reaction = match &mut self.sources[data_flow.index()] {
                    Source::Tcp(sender) => {
                        let reaction = sender.on_ack(native.seq, self.now);
                        if let Some(seq) = reaction.retransmit {
                            sender.mark_retransmitted(seq, self.now);
                        }
                        Some(reaction)
                    }
                    Source::Optimal(src) => {
                        src.on_feedback(native.price_accum);
                        None
                    }
                    Source::Saturated { .. } => None,
                };
                let Some(reaction) = reaction else {
                    return;
                };
                if self.log.is_some() {
                    let msg = match &self.sources[data_flow.index()] {
                        Source::Tcp(s) => format!(
                            "ack flow={} ack={} cwnd={:.2} ssthresh={:.1} phase={:?} inflight={} dup={}",
                            data_flow.0,
                            native.seq,
                            s.cwnd,
                            s.ssthresh,
                            s.phase,
                            s.inflight.len(),
                            s.dup_acks
                        ),
                        _ => String::new(),
                    };
                    self.trace(|| msg);
                }
                if let Some(seq) = reaction.retransmit {
                    self.acc_flows[data_flow.index()].created += 1;
                    let pkt = self.make_native(data_flow, PacketKind::Data, seq, self.cfg.tcp.mss);
                    let src = self.flows.get(data_flow).path[0];
                    self.buffers[src.index()].insert(pkt.id);
                    self.seen[src.index()].insert(pkt.id);
                    self.enqueue_at(src, CodedPacket::uncoded(pkt));
                }
                if reaction.new_data_acked {
                    // Re-arm the retransmission timer.
                    let sender = match &mut self.sources[data_flow.index()] {
                        Source::Tcp(s) => s,
                        _ => unreachable!(),
                    };
                    sender.rto_epoch += 1;
                    if !sender.inflight.is_empty() {
                        let at = self.now + sender.rto;
                        let epoch = sender.rto_epoch;
                        self.schedule(at, Ev::Rto { flow: data_flow, epoch });
                    }
                }
                self.tcp_try_send(data_flow);
            }
        }
    }

    // ------------------------------------------------------------------
    // Transport drivers.

    fn tcp_try_send(&mut self, flow: FlowId) {
        if !self.started[flow.index()] {
            return;
        }
        loop {
            let (seq, arm_timer) = {
                let sender = match &mut self.sources[flow.index()] {
                    Source::Tcp(s) => s,
                    _ => return,
                };
                if !sender.can_send() {
                    return;
                }
                let was_empty = sender.inflight.is_empty();
                (sender.take_next_seq(self.now), was_empty)
            };
            self.inject_data(flow, seq);
            if arm_timer {
                let sender = match &mut self.sources[flow.index()] {
                    Source::Tcp(s) => s,
                    _ => unreachable!(),
                };
                sender.rto_epoch += 1;
                let at = self.now + sender.rto;
                let epoch = sender.rto_epoch;
                self.schedule(at, Ev::Rto { flow, epoch });
            }
        }
    }

    fn on_rto(&mut self, flow: FlowId, epoch: u64) {
        let rto = {
            let sender = match &mut self.sources[flow.index()] {
                Source::Tcp(s) => s,
                _ => return,
            };
            if sender.rto_epoch != epoch || sender.inflight.is_empty() {
                return;
            }
            if !sender.on_timeout() {
                return;
            }
            sender.rto_epoch += 1;
            sender.rto
        };
        self.trace(|| format!("rto flow={}", flow.0));
        // Recovery re-sends flow through the normal window-limited path.
        self.tcp_try_send(flow);
        let epoch = match &self.sources[flow.index()] {
            Source::Tcp(s) => s.rto_epoch,
            _ => unreachable!(),
        };
        self.schedule(self.now + rto, Ev::Rto { flow, epoch });
    }

    fn on_pace(&mut self, flow: FlowId) {
        if !self.started[flow.index()] {
            return;
        }
        let (seq, gap) = {
            let src = match &mut self.sources[flow.index()] {
                Source::Optimal(s) => s,
                _ => return,
            };
            let seq = src.next_seq;
            src.next_seq += 1;
            (seq, 1.0 / src.rate)
        };
        self.inject_data(flow, seq);
        self.schedule(self.now + gap, Ev::Pace(flow));
    }

    fn top_up_saturated(&mut self, flow: FlowId) {
        let src_node = self.flows.get(flow).path[0];
        loop {
            if self.qstates[src_node.index()].len() >= self.cfg.qm.capacity {
                return;
            }
            let seq = match &mut self.sources[flow.index()] {
                Source::Saturated { next_seq } => {
                    let s = *next_seq;
                    *next_seq += 1;
                    s
                }
                _ => return,
            };
            self.inject_data(flow, seq);
        }
    }

    // ------------------------------------------------------------------
    // Wrap-up.

    fn finish(self) -> Metrics {
        let duration = self.cfg.duration;
        // Natives still in the system: queued, in flight, or waiting
        // for retransmission.
        let mut remaining = vec![0u64; self.flows.len()];
        for q in &self.qstates {
            for p in &q.queue {
                for n in &p.natives {
                    remaining[n.flow.index()] += 1;
                }
            }
        }
        for fl in self.ongoing.values() {
            for (ni, n) in fl.packet.natives.iter().enumerate() {
                if fl.fates[ni] == NativeFate::Pending {
                    remaining[n.flow.index()] += 1;
                }
            }
        }
        for slot in self.retx.iter().flatten() {
            for (ni, n) in slot.packet.natives.iter().enumerate() {
                if slot.fates[ni] == NativeFate::Pending {
                    remaining[n.flow.index()] += 1;
                }
            }
        }

        let mss = self.cfg.tcp.mss as u64;
        let mut flows_out = Vec::new();
        for i in 0..self.flows.data_count {
            let acc = &self.acc_flows[i];
            let ack = match self.flows.ack_of(FlowId::from_index(i)) {
                Some(af) => {
                    let a = &self.acc_flows[af.index()];
                    AckStats {
                        created: a.created,
                        delivered: a.delivered,
                        drops_queue: a.drops_queue,
                        drops_channel: a.drops_channel,
                        remaining: remaining[af.index()],
                    }
                }
                None => AckStats {
                    created: 0,
                    delivered: 0,
                    drops_queue: 0,
                    drops_channel: 0,
                    remaining: 0,
                },
            };
            let payload_bytes = acc.payload_packets * mss;
            flows_out.push(FlowMetrics {
                flow: i as u32,
                created: acc.created,
                delivered: acc.delivered,
                payload_bytes,
                throughput_bps: payload_bytes as f64 * 8.0 / duration,
                drops_queue: acc.drops_queue,
                drops_channel: acc.drops_channel,
                drops_coding: acc.drops_coding,
                remaining: remaining[i],
                ack,
            });
        }

        let nodes_out: Vec<NodeMetrics> = self
            .acc_nodes
            .iter()
            .enumerate()
            .map(|(i, acc)| {
                let coded_frac = if acc.data_tx > 0 {
                    acc.coded_tx as f64 / acc.data_tx as f64
                } else {
                    0.0
                };
                NodeMetrics {
                    node: i as u32,
                    airtime: acc.airtime,
                    airtime_frac: acc.airtime / duration,
                    grants: acc.grants,
                    data_tx: acc.data_tx,
                    coded_tx: acc.coded_tx,
                    coded_frac,
                    no_partner_frac: if acc.data_tx > 0 {
                        1.0 - acc.partner_present as f64 / acc.data_tx as f64
                    } else {
                        0.0
                    },
                    drops_queue: acc.drops_queue,
                    queue_series: acc.queue_series.clone(),
                }
            })
            .collect();

        let payload_bytes: u64 = flows_out.iter().map(|f| f.payload_bytes).sum();
        let totals = Totals {
            payload_bytes,
            aggregate_throughput_bps: payload_bytes as f64 * 8.0 / duration,
            transmissions: self.transmissions,
            attempts: self.attempts,
            drops_queue: flows_out.iter().map(|f| f.drops_queue + f.ack.drops_queue).sum(),
            drops_channel: flows_out
                .iter()
                .map(|f| f.drops_channel + f.ack.drops_channel)
                .sum(),
            drops_coding: flows_out.iter().map(|f| f.drops_coding).sum(),
            zero_dominance_drops: self.zero_dominance_drops,
            events_processed: self.events_processed,
        };
        Metrics {
            duration,
            seed: self.cfg.seed,
            discipline: self.cfg.qm.kind.name().to_string(),
            transport: self.cfg.transport.name().to_string(),
            flows: flows_out,
            nodes: nodes_out,
            totals,
            events: self.log,
        }
    }
}
