//! Scratch probe: discipline comparison on the built-in topologies.

use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig, TransportKind};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let buffer: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let cap = 1e6;
    let succ = 0.85;

    let topos: Vec<(&str, ncaqm_core::Scenario)> = vec![
        ("alice-bob", scenario::alice_bob([cap, cap], succ, CodingDepth::OneHop)),
        (
            "x",
            scenario::x_topology([cap, cap], [cap, cap], succ, CodingDepth::OneHop),
        ),
        ("cross", scenario::cross(cap, succ, CodingDepth::OneHop)),
        ("wheel8", scenario::wheel(8, cap, succ, CodingDepth::OneHop)),
        (
            "butterfly",
            scenario::butterfly([cap; 5], succ, CodingDepth::TwoHop),
        ),
    ];

    for (name, sc) in topos {
        let compiled = compile(sc).unwrap();
        let disciplines = if name == "butterfly" {
            vec![DisciplineKind::NoNc, DisciplineKind::Bfly, DisciplineKind::Ncaqm]
        } else {
            vec![DisciplineKind::NoNc, DisciplineKind::Cope, DisciplineKind::Ncaqm]
        };
        let mut results: Vec<(String, f64, f64, f64)> = Vec::new();
        for kind in disciplines {
            let mut thr = Vec::new();
            let mut starved = Vec::new();
            let t0 = std::time::Instant::now();
            for seed in 1..=seeds {
                let cfg = SimConfig {
                    qm: QmConfig {
                        kind,
                        capacity: buffer,
                        ..QmConfig::default()
                    },
                    transport: TransportKind::Tcp,
                    seed,
                    duration: 60.0,
                    ..SimConfig::default()
                };
                let m = run(&compiled, &cfg).unwrap();
                thr.push(m.totals.aggregate_throughput_bps);
                // Relay starvation: max data_tx node.
                let relay = m
                    .nodes
                    .iter()
                    .max_by_key(|n| n.data_tx)
                    .map(|n| n.no_partner_frac)
                    .unwrap_or(0.0);
                starved.push(relay);
            }
            let dt = t0.elapsed();
            results.push((
                format!("{:?}", kind),
                mean(&thr),
                mean(&starved),
                dt.as_secs_f64(),
            ));
        }
        let base = results[0].1;
        print!("{name:10} ");
        for (k, thr, st, dt) in &results {
            print!(
                "{k}: {:.0} kbps (+{:.1}%) starve {:.0}%  [{:.2}s]   ",
                thr / 1000.0,
                (thr / base - 1.0) * 100.0,
                st * 100.0,
                dt
            );
        }
        println!();
    }
}
