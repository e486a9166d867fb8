//! Functional verification of a mapping: block-wise matrix-vector
//! multiplication must equal the dense product whenever coverage is
//! complete, and each block splits into crossbar-sized tiles for export.

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::reorder::{inverse_permute_vector, permute_matrix, permute_vector, Permutation};
use crate::scheme::MappingScheme;
use serde::{Deserialize, Serialize};

/// Multiplies using only the matrix entries that fall inside blocks.
///
/// Accumulation order is fixed (block index, then row) so results are
/// reproducible bit-for-bit.
#[allow(clippy::needless_range_loop)]
pub fn blockwise_spmv(m: &SparseMatrix, s: &MappingScheme, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.dim() || s.dim != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}, scheme {}, vector {}",
            m.dim(),
            s.dim,
            x.len()
        )));
    }
    let values = m.value_map();
    let mut y = vec![0.0; m.dim()];
    for (r0, c0, sz) in s.all_blocks() {
        for r in r0..r0 + sz {
            let mut acc = 0.0;
            for c in c0..c0 + sz {
                if let Some(v) = values.get(&(r, c)) {
                    acc += v * x[c];
                }
            }
            y[r] += acc;
        }
    }
    Ok(y)
}

/// First nonzero (in row-major order) not covered by any block, if any.
pub fn first_uncovered(m: &SparseMatrix, s: &MappingScheme) -> Option<(usize, usize)> {
    m.entries()
        .iter()
        .find(|&&(r, c, _)| !s.covers(r, c))
        .map(|&(r, c, _)| (r, c))
}

/// Runs the full reordered pipeline: `x' = Px`, `y' = blockwise(A', s, x')`,
/// returns `P^T y'`. The scheme must cover every nonzero of the permuted
/// matrix or the call is refused.
pub fn end_to_end(
    m: &SparseMatrix,
    p: &Permutation,
    s: &MappingScheme,
    x: &[f64],
) -> Result<Vec<f64>> {
    let permuted = permute_matrix(m, p)?;
    if let Some((row, col)) = first_uncovered(&permuted, s) {
        return Err(Error::IncompleteCoverage { row, col });
    }
    let x_p = permute_vector(x, p)?;
    let y_p = blockwise_spmv(&permuted, s, &x_p)?;
    inverse_permute_vector(&y_p, p)
}

/// Reference dense product for verification.
pub fn dense_spmv(m: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix {} vs vector {}",
            m.dim(),
            x.len()
        )));
    }
    let mut y = vec![0.0; m.dim()];
    for &(r, c, v) in m.entries() {
        y[r] += v * x[c];
    }
    Ok(y)
}

/// `max_i |a_i - b_i| / max(max_i |b_i|, eps)`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

/// One crossbar-sized piece of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

/// Deployment export: every block split row-major into tiles no larger
/// than the crossbar size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileManifest {
    pub crossbar: usize,
    pub tiles: Vec<Tile>,
    pub tile_count: usize,
    /// Total cells across all tiles; equals the scheme's block area.
    pub occupied_cells: usize,
}

/// Splits each block into `ceil(s/k) x ceil(s/k)` tiles of side at most `k`.
pub fn tile_manifest(s: &MappingScheme, crossbar: usize) -> Result<TileManifest> {
    if crossbar < 1 {
        return Err(Error::Argument("crossbar size must be at least 1".into()));
    }
    let mut tiles = Vec::new();
    for (block_id, (r0, c0, sz)) in s.all_blocks().enumerate() {
        let mut r = 0;
        while r < sz {
            let h = crossbar.min(sz - r);
            let mut c = 0;
            while c < sz {
                let w = crossbar.min(sz - c);
                tiles.push(Tile {
                    block: block_id,
                    row: r0 + r,
                    col: c0 + c,
                    height: h,
                    width: w,
                });
                c += w;
            }
            r += h;
        }
    }
    let occupied = tiles.iter().map(|t| t.height * t.width).sum();
    Ok(TileManifest {
        crossbar,
        tile_count: tiles.len(),
        occupied_cells: occupied,
        tiles,
    })
}
