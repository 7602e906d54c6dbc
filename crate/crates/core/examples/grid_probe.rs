use ncaqm_core::catalog::compile;
use ncaqm_core::numopt::{solve, SolverConfig};
use ncaqm_core::scenario::{self, CodingDepth};

fn main() {
    for seed in [1u64, 7, 13] {
        let sc = scenario::grid(seed, 1.0, 1.0, CodingDepth::OneHop, 60.0, 0.2);
        let c = compile(sc).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.max_iters = 20_000;
        let t0 = std::time::Instant::now();
        let rep = solve(&c, &cfg);
        println!(
            "grid seed {seed}: flows={} hyperarcs={} cliques={} coded={} sum_x={:.3} over={:.2e} {:?}",
            c.flows.len(),
            c.hypergraph.hyperarcs.len(),
            c.hypergraph.conflict.cliques.len(),
            c.catalog.codes.iter().filter(|k| k.is_coded()).count(),
            rep.sum_x_avg,
            rep.raw_overload,
            t0.elapsed()
        );
    }
}
