//! Scratch: per-node drop and queue picture for one topology/discipline.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig};

fn main() {
    let topo = std::env::args().nth(1).unwrap_or_else(|| "butterfly".into());
    let (sc, names) = match topo.as_str() {
        "butterfly" => (
            scenario::butterfly([1e6; 5], 0.85, CodingDepth::TwoHop),
            vec!["A1", "B1", "I1", "I2", "A2", "B2"],
        ),
        _ => (
            scenario::alice_bob([1e6, 1e6], 0.85, CodingDepth::OneHop),
            vec!["A1", "I", "A2"],
        ),
    };
    let compiled = compile(sc).unwrap();
    for kind in [DisciplineKind::NoNc, DisciplineKind::Bfly, DisciplineKind::Ncaqm] {
        println!("--- {}", kind.name());
        let mut drops = vec![0u64; names.len()];
        let mut qavg = vec![0.0f64; names.len()];
        let mut data_tx = vec![0u64; names.len()];
        let mut coded_tx = vec![0u64; names.len()];
        for seed in 1..=10u64 {
            let cfg = SimConfig {
                qm: QmConfig { kind, capacity: 10, ..QmConfig::default() },
                seed,
                duration: 60.0,
                ..SimConfig::default()
            };
            let m = run(&compiled, &cfg).unwrap();
            for n in &m.nodes {
                drops[n.node as usize] += n.drops_queue;
                data_tx[n.node as usize] += n.data_tx;
                coded_tx[n.node as usize] += n.coded_tx;
                qavg[n.node as usize] += n.queue_series.iter().map(|(_, l)| *l as f64).sum::<f64>()
                    / n.queue_series.len() as f64
                    / 10.0;
            }
        }
        for (i, name) in names.iter().enumerate() {
            println!(
                "  {name:3} dropq {:5} qavg {:4.2} data_tx {:6} coded {:5}",
                drops[i], qavg[i], data_tx[i], coded_tx[i]
            );
        }
    }
}
