//! Deterministic discrete-event engine: slotted medium access over
//! conflict cliques, Bernoulli link losses with MAC retransmissions,
//! pseudo-broadcast with overhearing into decoding buffers, and the
//! pluggable queue disciplines from [`crate::qm`].

pub mod flows;
pub mod packet;

mod engine;

pub use engine::{run, Engine, KnowledgePolicy, SimConfig, SimError, TransportKind};
