//! Scratch: buffer trend, wheel trend, fairness, optimal baseline.

use ncaqm_core::catalog::compile;
use ncaqm_core::experiment::{preset, run_experiment, ScenarioRef, SweepAxis};
use ncaqm_core::numopt::{solve, SolverConfig};
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig, TransportKind};

fn main() {
    // Criterion 11 probe: X buffer sweep.
    let mut spec = preset("summary").unwrap();
    spec.sweep = SweepAxis::Buffer;
    spec.sweep_values = vec![10.0, 30.0, 50.0];
    let (table, _) = run_experiment(&spec).unwrap();
    println!("buffer sweep (x):");
    for s in &table.summary {
        println!(
            "  L={:2} {:6} thr {:7.0} imp {:+6.2}%",
            s.sweep_value, s.discipline, s.mean_throughput_bps, s.mean_improvement_pct
        );
    }

    // Criterion 12 probe: wheel flow sweep at buffer 30.
    let mut spec = preset("wheel-flows").unwrap();
    spec.sweep_values = vec![2.0, 4.0, 8.0];
    let (table, _) = run_experiment(&spec).unwrap();
    println!("wheel flows (buffer 30):");
    for s in &table.summary {
        println!(
            "  n={:1} {:6} thr {:7.0} imp {:+6.2}%",
            s.sweep_value, s.discipline, s.mean_throughput_bps, s.mean_improvement_pct
        );
    }

    // AIMD fairness per seed on x/nonc.
    let sc = scenario::x_topology([1e6, 1e6], [1e6, 1e6], 0.85, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    print!("x nonc fairness ratios: ");
    for seed in 1..=8u64 {
        let cfg = SimConfig {
            qm: QmConfig { kind: DisciplineKind::NoNc, capacity: 10, ..QmConfig::default() },
            seed,
            duration: 60.0,
            ..SimConfig::default()
        };
        let m = run(&compiled, &cfg).unwrap();
        let a = m.flows[0].throughput_bps;
        let b = m.flows[1].throughput_bps;
        print!("{:.2} ", a.max(b) / a.min(b).max(1.0));
    }
    println!();

    // Optimal-vs-solver cross check on alice-bob.
    let sc = scenario::alice_bob([4000.0, 4000.0], 1.0, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    let solver_sc = scenario::alice_bob([1.0, 1.0], 1.0, CodingDepth::OneHop);
    let rep = solve(&compile(solver_sc).unwrap(), &SolverConfig::default());
    println!("solver x* = {:?} (pkt/s at 4000 bps, 500 B)", rep.x_avg);
    for seed in 1..=3u64 {
        let cfg = SimConfig {
            qm: QmConfig { kind: DisciplineKind::Ncaqm, capacity: 10, ..QmConfig::default() },
            transport: TransportKind::Optimal,
            seed,
            duration: 600.0,
            ..SimConfig::default()
        };
        let m = run(&compiled, &cfg).unwrap();
        let rates: Vec<f64> = m
            .flows
            .iter()
            .map(|f| f.throughput_bps / 4000.0)
            .collect();
        println!("  optimal sim rates seed {seed}: {rates:?} pkt/s");
    }
}
