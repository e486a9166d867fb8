//! Scores a mapping scheme against a matrix: coverage ratio, area ratio,
//! mapped-block sparsity, and the scalarized reward.

use crate::error::{Error, Result};
use crate::matrix::PrefixIndex;
use crate::scheme::MappingScheme;
use serde::Deserialize;

/// Metrics of one scheme evaluation.
///
/// `reward = alpha * coverage + (1 - alpha) * (1 - area)`: the area term is
/// complemented so that maximizing the reward drives mapped area down while
/// keeping the reward inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct EvalResult {
    pub coverage: f64,
    pub area: f64,
    pub sparsity: f64,
    pub reward: f64,
}

impl EvalResult {
    /// Fixed 6-decimal JSON rendering used by every external surface.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"coverage\": {:.6}, \"area\": {:.6}, \"sparsity\": {:.6}, \"reward\": {:.6}}}",
            self.coverage, self.area, self.sparsity, self.reward
        )
    }
}

/// Fraction of the full matrix area occupied by blocks.
pub fn area_ratio(s: &MappingScheme) -> f64 {
    s.total_area() as f64 / (s.dim * s.dim) as f64
}

/// Evaluates a validated scheme over a prefix index of the same matrix.
///
/// Blocks are disjoint, so the covered count is the sum of per-block
/// rectangle counts. An empty matrix counts as fully covered; a zero-area
/// scheme reports sparsity 0.
pub fn evaluate(s: &MappingScheme, idx: &PrefixIndex, alpha: f64) -> Result<EvalResult> {
    if s.dim != idx.dim() {
        return Err(Error::DimensionMismatch(format!(
            "scheme dim {} vs matrix dim {}",
            s.dim,
            idx.dim()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Argument(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut covered = 0usize;
    for (r, c, sz) in s.all_blocks() {
        covered += idx.count(r, c, sz, sz)?;
    }
    let total = idx.total();
    let coverage = if total == 0 {
        1.0
    } else {
        covered as f64 / total as f64
    };
    let block_area = s.total_area();
    let area = area_ratio(s);
    let sparsity = if block_area == 0 {
        0.0
    } else {
        1.0 - covered as f64 / block_area as f64
    };
    let reward = alpha * coverage + (1.0 - alpha) * (1.0 - area);
    Ok(EvalResult {
        coverage,
        area,
        sparsity,
        reward,
    })
}
