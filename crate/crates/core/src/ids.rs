//! Dense integer identifiers for the entities of a scenario.
//!
//! All ids are allocated contiguously from zero within one scenario, so
//! they double as indices into the per-entity arrays kept by the
//! topology, the solver, and the simulator.

use serde::{Deserialize, Serialize};

macro_rules! dense_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(i: usize) -> Self {
                Self(i as u32)
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

dense_id!(
    /// A wireless node.
    NodeId
);
dense_id!(
    /// A unicast end-to-end flow.
    FlowId
);
dense_id!(
    /// A lossy directed link between two nodes.
    LinkId
);
dense_id!(
    /// A broadcast transmission opportunity from one node to a set of
    /// next hops that all receive the same packet.
    HyperarcId
);
dense_id!(
    /// A network code: a set of flows whose packets may be XOR-combined
    /// over a particular hyperarc.
    CodeId
);
