//! Scratch: event trace of one short run, filtered by flow.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig, TransportKind};

fn main() {
    let sc = scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    let cfg = SimConfig {
        qm: QmConfig {
            kind: DisciplineKind::NoNc,
            capacity: 10,
            ..QmConfig::default()
        },
        transport: TransportKind::Tcp,
        seed: 3,
        duration: 8.0,
        record_events: true,
        ..SimConfig::default()
    };
    let m = run(&compiled, &cfg).unwrap();
    let filter = std::env::args().nth(1).unwrap_or_else(|| "flow=1".into());
    for line in m.events.unwrap() {
        if line.contains(&filter) {
            println!("{line}");
        }
    }
}
