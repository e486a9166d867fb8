//! Learns minimal-area, complete-coverage block mappings of large sparse
//! matrices onto size-limited crossbar tiles.
//!
//! The pipeline: reorder a symmetric sparse matrix to reduce its bandwidth
//! ([`reorder`]), partition the diagonal into a decision grid ([`scheme`]),
//! sample diagonal-block / fill-block schemes from a recurrent controller
//! ([`agent`]), score them ([`evaluator`]), and optimize the controller by
//! policy gradient ([`trainer`]). Fixed-size baselines and an exhaustive
//! oracle live in [`baselines`]; [`sim`] verifies that a complete mapping
//! computes the exact matrix-vector product and exports per-tile manifests.

pub mod agent;
pub mod baselines;
pub mod error;
pub mod evaluator;
pub mod fixtures;
pub mod matrix;
pub mod render;
pub mod reorder;
pub mod scheme;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
