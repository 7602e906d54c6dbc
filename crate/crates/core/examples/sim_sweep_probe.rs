//! Scratch: overhead sensitivity of the discipline gaps.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig};

fn main() {
    for overhead in [5e-4, 1e-3, 1.5e-3, 2.5e-3] {
        for (name, sc, ks) in [
            (
                "x",
                scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop),
                [DisciplineKind::NoNc, DisciplineKind::Cope, DisciplineKind::Ncaqm],
            ),
            (
                "butterfly",
                scenario::butterfly([1e6; 5], 0.85, CodingDepth::TwoHop),
                [DisciplineKind::NoNc, DisciplineKind::Bfly, DisciplineKind::Ncaqm],
            ),
        ] {
            let compiled = compile(sc).unwrap();
            let mut means = Vec::new();
            for kind in ks {
                let mut s = 0.0;
                for seed in 1..=10u64 {
                    let cfg = SimConfig {
                        qm: QmConfig { kind, capacity: 10, ..QmConfig::default() },
                        seed,
                        duration: 60.0,
                        per_tx_overhead: overhead,
                        ..SimConfig::default()
                    };
                    s += run(&compiled, &cfg).unwrap().totals.aggregate_throughput_bps;
                }
                means.push(s / 10.0);
            }
            let imp1 = means[1] / means[0] - 1.0;
            let imp2 = means[2] / means[0] - 1.0;
            println!(
                "oh {:4.1}ms {name:10} coded {:+5.1}% ncaqm {:+5.1}%  ratio {:.2}",
                overhead * 1000.0,
                imp1 * 100.0,
                imp2 * 100.0,
                imp2 / imp1
            );
        }
    }
}
