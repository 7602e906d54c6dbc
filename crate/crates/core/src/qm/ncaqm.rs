//! Virtual h-queues and the splitting / dominance estimators behind
//! the coding-aware drop rule.
//!
//! Per flow, a sliding window over the node's recent transmissions
//! records which code carried the flow; the window average estimates
//! the traffic split. The virtual size of a hyperarc queue is the sum
//! over its codes of the dominant member's split-weighted backlog, and
//! a flow's drop metric Phi adds those sizes over the hyperarcs where
//! the flow is dominant.

use super::{NodeEntryTable, QmState};
use crate::ids::FlowId;
use std::collections::{BTreeMap, HashMap, VecDeque};

#[derive(Debug, Clone, Default)]
struct UsageWindow {
    order: VecDeque<usize>,
    counts: HashMap<usize, u32>,
}

#[derive(Debug, Clone)]
pub struct Estimators {
    window_len: usize,
    /// Per flow: which entry each of the node's recent transmissions
    /// carrying that flow used, with running counts.
    windows: BTreeMap<FlowId, UsageWindow>,
}

impl Estimators {
    pub fn new(window_len: usize, table: &NodeEntryTable) -> Self {
        let windows = table
            .flow_options
            .keys()
            .map(|&f| (f, UsageWindow::default()))
            .collect();
        Estimators {
            window_len,
            windows,
        }
    }

    pub fn push_usage(&mut self, flow: FlowId, entry: usize) {
        let w = self.windows.entry(flow).or_default();
        w.order.push_back(entry);
        *w.counts.entry(entry).or_insert(0) += 1;
        if w.order.len() > self.window_len {
            let old = w.order.pop_front().unwrap();
            if let Some(c) = w.counts.get_mut(&old) {
                *c -= 1;
                if *c == 0 {
                    w.counts.remove(&old);
                }
            }
        }
    }

    /// Split estimate for (flow, entry): the fraction of the flow's
    /// recent transmissions that used this code. An empty window reads
    /// as uniform over the flow's available codes.
    pub fn alpha_hat(&self, table: &NodeEntryTable, flow: FlowId, entry: usize) -> f64 {
        let options = match table.flow_options.get(&flow) {
            Some(o) if !o.is_empty() => o,
            _ => return 0.0,
        };
        if !options.contains(&entry) {
            return 0.0;
        }
        match self.windows.get(&flow) {
            Some(w) if !w.order.is_empty() => {
                w.counts.get(&entry).copied().unwrap_or(0) as f64 / w.order.len() as f64
            }
            _ => 1.0 / options.len() as f64,
        }
    }

    /// Dominance estimate per member of one entry: 1/|argmax| for the
    /// members with the largest split-weighted backlog, 0 for the rest.
    pub fn m_hat(&self, state: &QmState, table: &NodeEntryTable, entry: usize) -> Vec<f64> {
        self.m_hat_with(&state.flow_counts(), table, entry)
    }

    fn m_hat_with(
        &self,
        counts: &BTreeMap<FlowId, usize>,
        table: &NodeEntryTable,
        entry: usize,
    ) -> Vec<f64> {
        let e = &table.entries[entry];
        let scores: Vec<f64> = e
            .flows
            .iter()
            .map(|&f| {
                self.alpha_hat(table, f, entry) * counts.get(&f).copied().unwrap_or(0) as f64
            })
            .collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let winners = scores.iter().filter(|&&s| s >= best - 1e-12).count();
        scores
            .iter()
            .map(|&s| {
                if s >= best - 1e-12 {
                    1.0 / winners as f64
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Virtual h-queue sizes: per hyperarc with codes at this node,
    /// sum over codes of max over members of (alpha_hat x backlog).
    pub fn virtual_h_queues(&self, state: &QmState, table: &NodeEntryTable) -> BTreeMap<usize, f64> {
        self.virtual_h_queues_with(&state.flow_counts(), table)
    }

    fn virtual_h_queues_with(
        &self,
        counts: &BTreeMap<FlowId, usize>,
        table: &NodeEntryTable,
    ) -> BTreeMap<usize, f64> {
        let mut q: BTreeMap<usize, f64> = BTreeMap::new();
        for (ei, e) in table.entries.iter().enumerate() {
            let peak = e
                .flows
                .iter()
                .map(|&f| {
                    self.alpha_hat(table, f, ei) * counts.get(&f).copied().unwrap_or(0) as f64
                })
                .fold(0.0, f64::max);
            *q.entry(e.hyperarc.index()).or_insert(0.0) += peak;
        }
        q
    }

    /// Phi per flow with codes at this node.
    pub fn compute_phi(&self, state: &QmState, table: &NodeEntryTable) -> BTreeMap<FlowId, f64> {
        let counts = state.flow_counts();
        let qh = self.virtual_h_queues_with(&counts, table);
        let mut phi: BTreeMap<FlowId, f64> =
            table.flow_options.keys().map(|&f| (f, 0.0)).collect();
        for (ei, e) in table.entries.iter().enumerate() {
            let m = self.m_hat_with(&counts, table, ei);
            let q = qh[&e.hyperarc.index()];
            for (mi, &f) in e.flows.iter().enumerate() {
                let a = self.alpha_hat(table, f, ei);
                *phi.get_mut(&f).unwrap() += q * a * m[mi];
            }
        }
        phi
    }

    /// True when the flow holds nonzero dominance in at least one code
    /// at this node.
    pub fn has_dominance(&self, state: &QmState, table: &NodeEntryTable, flow: FlowId) -> bool {
        let counts = state.flow_counts();
        match table.flow_options.get(&flow) {
            Some(options) => options.iter().any(|&ei| {
                let e = &table.entries[ei];
                let mi = e.flows.iter().position(|&f| f == flow).unwrap();
                self.m_hat_with(&counts, table, ei)[mi] > 0.0
            }),
            None => false,
        }
    }
}
