//! Scratch: criterion-9/13 style paired measurement.

use ncaqm_core::experiment::{preset, run_experiment, ExperimentSpec, ScenarioRef};

fn main() {
    let mut spec = preset("summary").unwrap();
    for topo in ["alice-bob", "x", "cross", "wheel", "butterfly"] {
        let wheel_flows = if topo == "wheel" { 8 } else { 4 };
        spec.scenario = ScenarioRef::Named {
            topology: topo.into(),
            caps: vec![],
            success_prob: 0.85,
            wheel_flows,
            grid_seed: 1,
        };
        spec.disciplines = if topo == "butterfly" {
            vec!["nonc".into(), "bfly".into(), "ncaqm".into()]
        } else {
            vec!["nonc".into(), "cope".into(), "ncaqm".into()]
        };
        let spec2: ExperimentSpec = spec.clone();
        let (table, failures) = run_experiment(&spec2).unwrap();
        assert!(failures.is_empty(), "{failures:?}");
        let imp = |d: &str| -> f64 {
            table
                .summary
                .iter()
                .find(|s| s.discipline == d)
                .map(|s| s.mean_improvement_pct)
                .unwrap_or(f64::NAN)
        };
        let mid = if topo == "butterfly" { "bfly" } else { "cope" };
        println!(
            "{topo:10} {mid} {:+6.2}%  ncaqm {:+6.2}%  ratio {:.2}",
            imp(mid),
            imp("ncaqm"),
            imp("ncaqm") / imp(mid)
        );
    }
}
