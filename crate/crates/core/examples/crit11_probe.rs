//! Scratch: the exact paired one-sided test of the buffer-trend criterion.

use ncaqm_core::experiment::{preset, run_experiment, SweepAxis};

fn main() {
    let mut spec = preset("summary").unwrap();
    spec.sweep = SweepAxis::Buffer;
    spec.sweep_values = vec![10.0, 30.0, 50.0];
    let (table, _) = run_experiment(&spec).unwrap();
    let imp = |d: &str, l: f64| -> Vec<f64> {
        let mut v: Vec<(u64, f64)> = table
            .rows
            .iter()
            .filter(|r| r.discipline == d && r.sweep_value == l)
            .map(|r| (r.seed, r.improvement_pct))
            .collect();
        v.sort_by(|x, y| x.0.cmp(&y.0));
        v.into_iter().map(|(_, x)| x).collect()
    };
    for d in ["cope", "ncaqm"] {
        for (a, b) in [(10.0, 30.0), (30.0, 50.0)] {
            let ia = imp(d, a);
            let ib = imp(d, b);
            let diffs: Vec<f64> = ib.iter().zip(&ia).map(|(x, y)| x - y).collect();
            let n = diffs.len() as f64;
            let mean = diffs.iter().sum::<f64>() / n;
            let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let t = mean / (var.sqrt() / n.sqrt());
            println!("{d}: L{a}->{b}: mean diff {mean:+.2} pts, t = {t:+.2} (reject 'nondecreasing' if t < -1.833)");
        }
    }
    // NCAQM >= COPE at every L, paired.
    for l in [10.0, 30.0, 50.0] {
        let ic = imp("cope", l);
        let in_ = imp("ncaqm", l);
        let diffs: Vec<f64> = in_.iter().zip(&ic).map(|(x, y)| x - y).collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = mean / (var.sqrt() / n.sqrt());
        println!("ncaqm-cope at L={l}: mean {mean:+.2} pts, t = {t:+.2}");
    }
}
