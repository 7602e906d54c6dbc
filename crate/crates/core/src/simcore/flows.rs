//! The simulator's flow table: the scenario's data flows followed by
//! one reverse ack stream per data flow (when the transport needs
//! acks). Queue disciplines and estimators treat both kinds uniformly;
//! ack packets are simply never coded.

use crate::catalog::Compiled;
use crate::ids::{FlowId, NodeId};
use crate::simcore::packet::PacketKind;

#[derive(Debug, Clone)]
pub struct SimFlow {
    pub id: FlowId,
    pub kind: PacketKind,
    /// The data flow this stream belongs to (itself for data flows).
    pub data_flow: FlowId,
    pub path: Vec<NodeId>,
    pub start_time: f64,
}

#[derive(Debug, Clone)]
pub struct SimFlowTable {
    pub flows: Vec<SimFlow>,
    pub data_count: usize,
}

impl SimFlowTable {
    pub fn build(compiled: &Compiled, with_acks: bool) -> Self {
        let mut flows: Vec<SimFlow> = compiled
            .flows
            .iter()
            .map(|f| SimFlow {
                id: f.id,
                kind: PacketKind::Data,
                data_flow: f.id,
                path: f.path.clone(),
                start_time: f.start_time,
            })
            .collect();
        let data_count = flows.len();
        if with_acks {
            for i in 0..data_count {
                let mut path = flows[i].path.clone();
                path.reverse();
                flows.push(SimFlow {
                    id: FlowId::from_index(data_count + i),
                    kind: PacketKind::Ack,
                    data_flow: FlowId::from_index(i),
                    path,
                    start_time: flows[i].start_time,
                });
            }
        }
        SimFlowTable { flows, data_count }
    }

    pub fn get(&self, f: FlowId) -> &SimFlow {
        &self.flows[f.index()]
    }

    pub fn is_data(&self, f: FlowId) -> bool {
        f.index() < self.data_count
    }

    /// The ack stream of a data flow, when acks exist.
    pub fn ack_of(&self, data: FlowId) -> Option<FlowId> {
        let i = self.data_count + data.index();
        (i < self.flows.len()).then(|| FlowId::from_index(i))
    }

    pub fn next_hop(&self, f: FlowId, at: NodeId) -> Option<NodeId> {
        let path = &self.get(f).path;
        let i = path.iter().position(|&n| n == at)?;
        path.get(i + 1).copied()
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }
}
