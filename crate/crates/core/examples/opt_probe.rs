use ncaqm_core::catalog::compile;
use ncaqm_core::qm::{DisciplineKind, QmConfig};
use ncaqm_core::scenario::{self, CodingDepth};
use ncaqm_core::simcore::{run, SimConfig, TransportKind};

fn main() {
    let sc = scenario::alice_bob([1e6, 1e6], 1.0, CodingDepth::OneHop);
    let compiled = compile(sc).unwrap();
    let mut cfg = SimConfig {
        qm: QmConfig { kind: DisciplineKind::Ncaqm, capacity: 50, ..QmConfig::default() },
        transport: TransportKind::Saturated,
        seed: 1,
        duration: 120.0,
        ..SimConfig::default()
    };
    cfg.tcp.ack_size = 4;
    if let Ok(v) = std::env::var("OPT_SCALE_MULT") {
        let m: f64 = v.parse().unwrap();
        cfg.price_scale = Some(m * 250.0);
    }
    cfg.per_tx_overhead = 0.0;
    cfg.decoding_buffer_capacity = 4096;
    let m = run(&compiled, &cfg).unwrap();
    for f in &m.flows {
        println!(
            "flow {}: created {} delivered {} rate {:.3} pkt/s dq {} dch {} dcod {}",
            f.flow,
            f.created,
            f.delivered,
            f.throughput_bps / 1e6 * 250.0,
            f.drops_queue,
            f.drops_channel,
            f.drops_coding
        );
    }
    let relay = &m.nodes[1];
    println!(
        "relay: coded {:.0}% qavg {:.1} airtime {:.2}; node0 airtime {:.2}, node2 airtime {:.2}",
        relay.coded_frac * 100.0,
        relay.queue_series.iter().map(|(_, l)| *l as f64).sum::<f64>() / relay.queue_series.len() as f64,
        relay.airtime_frac,
        m.nodes[0].airtime_frac,
        m.nodes[2].airtime_frac
    );
}
