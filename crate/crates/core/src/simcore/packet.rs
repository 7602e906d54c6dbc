//! Packets and per-node decoding buffers.

use crate::ids::{FlowId, NodeId};
use std::collections::{HashSet, VecDeque};

/// Globally unique packet identifier within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Data,
    Ack,
}

/// An uncoded transport segment. `flow` indexes the simulator's flow
/// table, which holds the data flows followed by their reverse ack
/// streams.
#[derive(Debug, Clone)]
pub struct NativePacket {
    pub id: PacketId,
    pub flow: FlowId,
    pub size: u32,
    pub kind: PacketKind,
    pub seq: u64,
    pub created_at: f64,
    /// Accumulated queue price along the path (optimal rate control).
    pub price_accum: f64,
}

/// The unit stored in queues and moved over the air: one or more
/// natives from distinct flows XOR-combined. A single native means the
/// packet is uncoded.
#[derive(Debug, Clone)]
pub struct CodedPacket {
    pub natives: Vec<NativePacket>,
    /// Node where the XOR was created; `None` while uncoded.
    pub formed_at: Option<NodeId>,
}

impl CodedPacket {
    pub fn uncoded(native: NativePacket) -> Self {
        CodedPacket {
            natives: vec![native],
            formed_at: None,
        }
    }

    pub fn is_coded(&self) -> bool {
        self.natives.len() > 1
    }

    /// Wire size: natives are XORed on top of each other, so the
    /// packet is as long as its longest constituent.
    pub fn size(&self) -> u32 {
        self.natives.iter().map(|n| n.size).max().unwrap_or(0)
    }

    pub fn flows(&self) -> Vec<FlowId> {
        let mut f: Vec<FlowId> = self.natives.iter().map(|n| n.flow).collect();
        f.sort_unstable();
        f
    }

    pub fn is_all_data(&self) -> bool {
        self.natives.iter().all(|n| n.kind == PacketKind::Data)
    }

    /// XOR-combine with another packet. Flows must be disjoint (checked
    /// by the caller's eligibility test). Keeps natives sorted by flow.
    pub fn combine(&mut self, other: CodedPacket, formed_at: NodeId) {
        self.natives.extend(other.natives);
        self.natives.sort_by_key(|n| n.flow);
        self.formed_at = Some(formed_at);
    }
}

/// Per-node store of known native packets: everything the node
/// originated, received, decoded, or overheard. Bounded FIFO.
#[derive(Debug, Clone)]
pub struct DecodingBuffer {
    known: HashSet<PacketId>,
    order: VecDeque<PacketId>,
    capacity: usize,
}

impl DecodingBuffer {
    pub fn new(capacity: usize) -> Self {
        DecodingBuffer {
            known: HashSet::new(),
            order: VecDeque::new(),
            capacity,
        }
    }

    pub fn contains(&self, id: PacketId) -> bool {
        self.known.contains(&id)
    }

    pub fn insert(&mut self, id: PacketId) {
        if self.known.insert(id) {
            self.order.push_back(id);
            if self.order.len() > self.capacity {
                let evicted = self.order.pop_front().unwrap();
                self.known.remove(&evicted);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn snapshot(&self) -> HashSet<PacketId> {
        self.known.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_evicts_fifo() {
        let mut b = DecodingBuffer::new(3);
        for i in 0..5 {
            b.insert(PacketId(i));
        }
        assert_eq!(b.len(), 3);
        assert!(!b.contains(PacketId(0)));
        assert!(!b.contains(PacketId(1)));
        assert!(b.contains(PacketId(2)));
        assert!(b.contains(PacketId(4)));
    }

    #[test]
    fn buffer_dedupes() {
        let mut b = DecodingBuffer::new(3);
        b.insert(PacketId(7));
        b.insert(PacketId(7));
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn coded_size_is_max_native() {
        let n = |id: u64, flow: u32, size: u32| NativePacket {
            id: PacketId(id),
            flow: FlowId(flow),
            size,
            kind: PacketKind::Data,
            seq: 0,
            created_at: 0.0,
            price_accum: 0.0,
        };
        let mut p = CodedPacket::uncoded(n(1, 0, 500));
        p.combine(CodedPacket::uncoded(n(2, 1, 40)), NodeId(0));
        assert_eq!(p.size(), 500);
        assert!(p.is_coded());
        assert_eq!(p.flows(), vec![FlowId(0), FlowId(1)]);
    }
}
