//! Scratch: side-by-side drop/queue detail for two disciplines.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig, TransportKind};

fn main() {
    let topo = std::env::args().nth(1).unwrap_or_else(|| "butterfly".into());
    let buffer: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let (sc, ks) = match topo.as_str() {
        "butterfly" => (
            scenario::butterfly([1e6; 5], 0.85, CodingDepth::TwoHop),
            vec![DisciplineKind::NoNc, DisciplineKind::Bfly, DisciplineKind::Ncaqm],
        ),
        "alice-bob" => (
            scenario::alice_bob([1e6, 1e6], 0.85, CodingDepth::OneHop),
            vec![DisciplineKind::NoNc, DisciplineKind::Cope, DisciplineKind::Ncaqm],
        ),
        _ => (
            scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop),
            vec![DisciplineKind::NoNc, DisciplineKind::Cope, DisciplineKind::Ncaqm],
        ),
    };
    let compiled = compile(sc).unwrap();
    for kind in ks {
        let mut agg = 0.0;
        let mut dq = 0u64;
        let mut dch = 0u64;
        let mut dcod = 0u64;
        let mut ack_dq = 0u64;
        let mut coded = 0u64;
        let mut data = 0u64;
        let mut created = 0u64;
        let mut qavg = 0.0;
        let seeds = 10;
        for seed in 1..=seeds {
            let cfg = SimConfig {
                qm: QmConfig { kind, capacity: buffer, ..QmConfig::default() },
                seed,
                duration: 60.0,
                ..SimConfig::default()
            };
            let m = run(&compiled, &cfg).unwrap();
            agg += m.totals.aggregate_throughput_bps;
            dq += m.flows.iter().map(|f| f.drops_queue).sum::<u64>();
            dch += m.flows.iter().map(|f| f.drops_channel).sum::<u64>();
            dcod += m.flows.iter().map(|f| f.drops_coding).sum::<u64>();
            ack_dq += m.flows.iter().map(|f| f.ack.drops_queue).sum::<u64>();
            created += m.flows.iter().map(|f| f.created).sum::<u64>();
            let relay = m.nodes.iter().max_by_key(|n| n.data_tx).unwrap();
            coded += relay.coded_tx;
            data += relay.data_tx;
            qavg += relay.queue_series.iter().map(|(_, l)| *l as f64).sum::<f64>()
                / relay.queue_series.len() as f64;
        }
        let n = seeds as f64;
        println!(
            "{:6} thr {:7.0}  created {:6.0} dq {:5.0} ack_dq {:5.0} dch {:4.0} dcod {:4.0}  relay coded {:4.1}% qavg {:4.2}",
            kind.name(),
            agg / n,
            created as f64 / n,
            dq as f64 / n,
            ack_dq as f64 / n,
            dch as f64 / n,
            dcod as f64 / n,
            100.0 * coded as f64 / data.max(1) as f64,
            qavg / n
        );
    }
}
