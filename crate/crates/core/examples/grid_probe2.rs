use ncaqm_core::catalog::compile;
use ncaqm_core::scenario::{self, CodingDepth};

fn main() {
    let mut with_codes = 0;
    let mut total_coded = 0;
    for seed in 0..30u64 {
        let sc = scenario::grid(seed, 1.0, 1.0, CodingDepth::OneHop, 60.0, 0.2);
        let c = compile(sc).unwrap();
        let coded = c.catalog.codes.iter().filter(|k| k.is_coded()).count();
        if coded > 0 {
            with_codes += 1;
        }
        total_coded += coded;
    }
    println!("seeds with coding: {with_codes}/30, total coded entries: {total_coded}");
}
