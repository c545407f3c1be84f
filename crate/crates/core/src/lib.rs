//! Monte Carlo simulation of constrained-relative-bearing (CRB) routing
//! among mobile nodes on the unit square.
//!
//! Mobile nodes random-walk with billiard reflections. A packet is carried
//! while its carrier heads roughly toward the packet's fixed destination
//! and handed to a node ahead of it otherwise. Two experiment families are
//! supported: a single packet under unit disk reception, and full traffic
//! under an SINR interference model.
//!
//! ```
//! use crbsim::engine::{run, WorldConfig};
//!
//! let mut config = WorldConfig::disk_single_packet(2_000, 7);
//! config.zero_time_handshake = true;
//! let report = run(&config).unwrap();
//! assert_eq!(report.generated_count, report.delivered_count + report.in_flight_count);
//! ```

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod crb;
pub mod engine;
pub mod experiment;
pub mod geometry;
pub mod mobility;
pub mod seed;

mod grid;
mod serde_float;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/mobility.md")]
    mod mobility {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

/// Random stream used for setup, traffic and relay selection.
pub type SimRng = rand_pcg::Pcg64Mcg;
