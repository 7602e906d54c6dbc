//! Discrete-event simulation and numerical optimization of TCP flows
//! over wireless mesh networks with inter-session network coding.
//!
//! The crate has two halves sharing one scenario model:
//!
//! * [`numopt`] solves the congestion-control network utility
//!   maximization by dual decomposition (rate control, dominance,
//!   traffic splitting, scheduling, queue updates) and reproduces the
//!   reference convergence values on the built-in topologies.
//! * [`simcore`] + [`qm`] + [`transport`] form a deterministic
//!   event-driven packet simulator with pluggable queue disciplines:
//!   plain DropTail (`nonc`), one-hop XOR coding at dequeue (`cope`),
//!   two-hop butterfly coding (`bfly`), and coding-aware queue
//!   management (`ncaqm`) which codes at enqueue and drops from the
//!   flow dominating the coded virtual queues.

pub mod catalog;
pub mod experiment;
pub mod ids;
pub mod metrics;
pub mod numopt;
pub mod qm;
pub mod scenario;
pub mod simcore;
pub mod topology;
pub mod transport;

pub use catalog::{compile, Compiled};
pub use scenario::{CodingDepth, Scenario};
