use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig};

fn main() {
    let ss: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64.0);
    let sc = scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    for buf in [10usize, 50] {
        for kind in [DisciplineKind::NoNc, DisciplineKind::Cope, DisciplineKind::Ncaqm] {
            let mut thr = 0.0;
            let mut q = 0.0;
            for seed in 1..=10u64 {
                let mut cfg = SimConfig {
                    qm: QmConfig { kind, capacity: buf, ..QmConfig::default() },
                    seed,
                    duration: 60.0,
                    ..SimConfig::default()
                };
                cfg.tcp.init_ssthresh = ss;
                let m = run(&compiled, &cfg).unwrap();
                thr += m.totals.aggregate_throughput_bps / 10.0;
                let relay = &m.nodes[2];
                q += relay.queue_series.iter().map(|(_, l)| *l as f64).sum::<f64>()
                    / relay.queue_series.len() as f64
                    / 10.0;
            }
            print!("L{buf} {} {:.0}k q{:.0} | ", kind.name(), thr / 1000.0, q);
        }
    }
    println!();
}
