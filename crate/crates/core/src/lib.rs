//! Agent-based model of competing news cascades on echo-chambered networks,
//! supervised by a deep-Q-learning agent that learns containment
//! interventions (warning, reiterating, forcing, observing).
//!
//! Everything is deterministic per seed: graphs, runs, training and
//! checkpoints reproduce bit-identically from the same master seed.

pub mod centrality;
pub mod config;
pub mod dqn;
mod error;
pub mod graph;
pub mod metrics;
pub mod seed;
pub mod sim;
pub mod superagent;

pub use error::{Error, Result};

/// Half-up rounding used for every fraction-to-count conversion.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}
