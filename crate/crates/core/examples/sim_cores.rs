//! Scratch: relay co-residency of data flows at dequeue instants.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig};

fn main() {
    let sc = scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    for kind in [DisciplineKind::Cope, DisciplineKind::Ncaqm] {
        let cfg = SimConfig {
            qm: QmConfig { kind, capacity: 10, ..QmConfig::default() },
            seed: 3,
            duration: 30.0,
            record_events: true,
            ..SimConfig::default()
        };
        let m = run(&compiled, &cfg).unwrap();
        let mut both = 0u64;
        let mut total = 0u64;
        for line in m.events.as_ref().unwrap() {
            if line.contains("dequeue node=2") {
                total += 1;
                let n: usize = line.rsplit('=').next().unwrap().trim().parse().unwrap();
                if n >= 2 {
                    both += 1;
                }
            }
        }
        let relay = &m.nodes[2];
        println!(
            "{}: relay dequeues {total}, both-flows-present {:.0}%, coded_frac {:.0}%",
            kind.name(),
            100.0 * both as f64 / total as f64,
            100.0 * relay.coded_frac
        );
    }
}
