use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig};

fn main() {
    let sc = scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    for buf in [30usize, 50] {
        for seed in 1..=6u64 {
            let cfg = SimConfig {
                qm: QmConfig { kind: DisciplineKind::Cope, capacity: buf, ..QmConfig::default() },
                seed,
                duration: 60.0,
                ..SimConfig::default()
            };
            let m = run(&compiled, &cfg).unwrap();
            let a = m.flows[0].throughput_bps / 1000.0;
            let b = m.flows[1].throughput_bps / 1000.0;
            println!(
                "L={buf} seed {seed}: flows {a:.0}/{b:.0} kbps  coded {:.0}%  rtoish created-deliv {} {}",
                m.nodes[2].coded_frac * 100.0,
                m.flows[0].created - m.flows[0].delivered,
                m.flows[1].created - m.flows[1].delivered,
            );
        }
    }
}
