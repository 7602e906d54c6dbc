//! Scratch: why larger buffers do not grow COPE's coding rate.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig};

fn main() {
    let sc = scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    for kind in [DisciplineKind::NoNc, DisciplineKind::Cope, DisciplineKind::Ncaqm] {
        for buf in [10usize, 30, 50] {
            let mut thr = 0.0;
            let mut coded = 0.0;
            let mut qavg = 0.0;
            let mut dq = 0u64;
            let mut rto_proxy = 0u64;
            for seed in 1..=10u64 {
                let cfg = SimConfig {
                    qm: QmConfig { kind, capacity: buf, ..QmConfig::default() },
                    seed,
                    duration: 60.0,
                    ..SimConfig::default()
                };
                let m = run(&compiled, &cfg).unwrap();
                thr += m.totals.aggregate_throughput_bps / 10.0;
                let relay = &m.nodes[2];
                coded += relay.coded_frac / 10.0;
                qavg += relay.queue_series.iter().map(|(_, l)| *l as f64).sum::<f64>()
                    / relay.queue_series.len() as f64
                    / 10.0;
                dq += m.totals.drops_queue;
                rto_proxy += m.flows.iter().map(|f| f.created).sum::<u64>()
                    - m.flows.iter().map(|f| f.delivered).sum::<u64>();
            }
            println!(
                "{:6} L={:2} thr {:7.0} coded {:4.1}% qavg {:5.2} drops {:4} undeliv {:4}",
                kind.name(),
                buf,
                thr,
                coded * 100.0,
                qavg,
                dq,
                rto_proxy
            );
        }
    }
}
