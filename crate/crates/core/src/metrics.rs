//! Run results: per-flow throughput and drop causes, per-node airtime,
//! coding and queue statistics. Serialization is stable, so two runs
//! with the same seed produce byte-identical JSON.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AckStats {
    pub created: u64,
    pub delivered: u64,
    pub drops_queue: u64,
    pub drops_channel: u64,
    pub remaining: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FlowMetrics {
    pub flow: u32,
    /// Data natives injected at the source (retransmissions included).
    pub created: u64,
    /// Data natives consumed at the destination.
    pub delivered: u64,
    /// Unique in-order payload bytes delivered to the application.
    pub payload_bytes: u64,
    pub throughput_bps: f64,
    pub drops_queue: u64,
    pub drops_channel: u64,
    pub drops_coding: u64,
    /// Natives still queued or in flight when the run ended.
    pub remaining: u64,
    pub ack: AckStats,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeMetrics {
    pub node: u32,
    pub airtime: f64,
    pub airtime_frac: f64,
    /// Medium grants including retransmission attempts.
    pub grants: u64,
    /// Logical transmissions of all-data packets.
    pub data_tx: u64,
    /// Of those, how many carried an XOR of two or more flows.
    pub coded_tx: u64,
    pub coded_frac: f64,
    /// Fraction of data transmissions that left uncoded: the node had
    /// no eligible coding partner at that opportunity.
    pub no_partner_frac: f64,
    pub drops_queue: u64,
    pub queue_series: Vec<(f64, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Totals {
    pub payload_bytes: u64,
    pub aggregate_throughput_bps: f64,
    /// Logical transmissions (first attempts).
    pub transmissions: u64,
    /// Medium grants including retries.
    pub attempts: u64,
    pub drops_queue: u64,
    pub drops_channel: u64,
    pub drops_coding: u64,
    /// Drop-rule victims with zero dominance everywhere (diagnostic).
    pub zero_dominance_drops: u64,
    pub events_processed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Metrics {
    pub duration: f64,
    pub seed: u64,
    pub discipline: String,
    pub transport: String,
    pub flows: Vec<FlowMetrics>,
    pub nodes: Vec<NodeMetrics>,
    pub totals: Totals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<String>>,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn aggregate_throughput(&self) -> f64 {
        self.totals.aggregate_throughput_bps
    }
}
