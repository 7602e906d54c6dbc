//! Scratch probe for solver convergence on the built-in instances.

use ncaqm_core::catalog::compile;
use ncaqm_core::numopt::{solve, SolverConfig, StepRule};
use ncaqm_core::scenario::{self, CodingDepth};

fn main() {
    let cases: Vec<(&str, ncaqm_core::Scenario, f64)> = vec![
        (
            "alice-bob 1/1 depth0",
            scenario::alice_bob([1.0, 1.0], 1.0, CodingDepth::None),
            0.50,
        ),
        (
            "alice-bob 1/4 depth0",
            scenario::alice_bob([1.0, 4.0], 1.0, CodingDepth::None),
            0.80,
        ),
        (
            "x src4 dst1 depth0",
            scenario::x_topology([4.0, 4.0], [1.0, 1.0], 1.0, CodingDepth::None),
            0.80,
        ),
        (
            "butterfly all1 depth0",
            scenario::butterfly([1.0; 5], 1.0, CodingDepth::None),
            0.33,
        ),
        (
            "wheel(4) depth1",
            scenario::wheel(4, 1.0, 1.0, CodingDepth::OneHop),
            0.8,
        ),
        (
            "alice-bob 1/1 depth1",
            scenario::alice_bob([1.0, 1.0], 1.0, CodingDepth::OneHop),
            0.66,
        ),
        (
            "alice-bob 1/4 depth1",
            scenario::alice_bob([1.0, 4.0], 1.0, CodingDepth::OneHop),
            0.88,
        ),
        (
            "x 1,1,1,1 depth1",
            scenario::x_topology([1.0, 1.0], [1.0, 1.0], 1.0, CodingDepth::OneHop),
            0.66,
        ),
        (
            "x src4 dst1 depth1",
            scenario::x_topology([4.0, 4.0], [1.0, 1.0], 1.0, CodingDepth::OneHop),
            1.3,
        ),
        (
            "butterfly all1 depth2",
            scenario::butterfly([1.0; 5], 1.0, CodingDepth::TwoHop),
            0.50,
        ),
        (
            "butterfly c3=1 depth2",
            scenario::butterfly([4.0, 4.0, 1.0, 4.0, 4.0], 1.0, CodingDepth::TwoHop),
            1.14,
        ),
    ];

    let mut config = SolverConfig::default();
    if let Some(c0) = std::env::args().nth(1).and_then(|s| s.parse::<f64>().ok()) {
        config.step = StepRule::InvSqrt(c0);
    }
    if let Some(it) = std::env::args().nth(2).and_then(|s| s.parse::<usize>().ok()) {
        config.max_iters = it;
    }
    if let Some(c) = std::env::args().nth(3).and_then(|s| s.parse::<f64>().ok()) {
        config.proximal_c = c;
    }

    for (name, sc, want) in cases {
        let compiled = compile(sc).unwrap();
        let t0 = std::time::Instant::now();
        let rep = solve(&compiled, &config);
        let dt = t0.elapsed();
        let tail = &rep.trace.records[rep.trace.records.len().saturating_sub(50)..];
        let max_dq = tail
            .windows(2)
            .map(|w| {
                w[0].q
                    .iter()
                    .zip(&w[1].q)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        println!(
            "{name:26} want {want:5.2}  got {:.4}  x={:?}  over={:.2e} dq50={:.2e} iters={} conv={} {:?}",
            rep.sum_x_avg,
            rep.x_avg.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            rep.raw_overload,
            max_dq,
            rep.iterations,
            rep.converged,
            dt
        );
    }
}
