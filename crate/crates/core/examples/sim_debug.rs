//! Scratch: dump one run's metrics for inspection.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig, TransportKind};

fn main() {
    let kind = match std::env::args().nth(1).as_deref() {
        Some("cope") => DisciplineKind::Cope,
        Some("ncaqm") => DisciplineKind::Ncaqm,
        _ => DisciplineKind::NoNc,
    };
    let sc = scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    let cfg = SimConfig {
        qm: QmConfig {
            kind,
            capacity: 10,
            ..QmConfig::default()
        },
        transport: TransportKind::Tcp,
        seed: 3,
        duration: 20.0,
        ..SimConfig::default()
    };
    let m = run(&compiled, &cfg).unwrap();
    for f in &m.flows {
        println!(
            "flow {}: created {} delivered {} payload {} thr {:.0} dq {} dch {} dcod {} rem {} | ack: cr {} del {} dq {} rem {}",
            f.flow, f.created, f.delivered, f.payload_bytes, f.throughput_bps,
            f.drops_queue, f.drops_channel, f.drops_coding, f.remaining,
            f.ack.created, f.ack.delivered, f.ack.drops_queue, f.ack.remaining,
        );
    }
    for n in &m.nodes {
        let avg_q: f64 = n.queue_series.iter().map(|(_, l)| *l as f64).sum::<f64>()
            / n.queue_series.len().max(1) as f64;
        println!(
            "node {}: airtime {:.2} grants {} data_tx {} coded_tx {} dropq {} avg_queue {:.2}",
            n.node, n.airtime_frac, n.grants, n.data_tx, n.coded_tx, n.drops_queue, avg_q
        );
    }
    println!(
        "totals: thr {:.0} bps, tx {} attempts {} events {}",
        m.totals.aggregate_throughput_bps, m.totals.transmissions, m.totals.attempts, m.totals.events_processed
    );
}
