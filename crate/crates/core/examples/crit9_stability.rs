//! Scratch: seed-set sensitivity of the improvement ratios.

use ncaqm_core::experiment::{preset, run_experiment, ScenarioRef};

fn main() {
    for base in [1u64, 11, 21] {
        print!("seeds {base:2}..{:2}: ", base + 9);
        for topo in ["alice-bob", "x"] {
            let mut spec = preset("summary").unwrap();
            spec.seeds = (base..base + 10).collect();
            spec.scenario = ScenarioRef::Named {
                topology: topo.into(),
                caps: vec![],
                success_prob: 0.85,
                wheel_flows: 4,
                grid_seed: 1,
            };
            let (table, _) = run_experiment(&spec).unwrap();
            let imp = |d: &str| -> f64 {
                table
                    .summary
                    .iter()
                    .find(|s| s.discipline == d)
                    .map(|s| s.mean_improvement_pct)
                    .unwrap()
            };
            print!(
                "{topo}: cope {:+5.2} ncaqm {:+5.2} ratio {:.2}   ",
                imp("cope"),
                imp("ncaqm"),
                imp("ncaqm") / imp("cope")
            );
        }
        println!();
    }
}
