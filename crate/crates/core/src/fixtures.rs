//! Canonical small matrices shared by unit, integration, and acceptance
//! tests. Exposed publicly so downstream test harnesses can reuse them.

use crate::matrix::SparseMatrix;

/// 8x8 symmetric 0/1 pattern with 16 nonzeros, countable by hand.
///
/// Two dense 2x2 blocks at the corners, a 2x2 block bridged to its neighbor
/// through (3,4)/(4,3), and two isolated diagonal entries.
pub fn m8() -> SparseMatrix {
    let pos = [
        (0, 0),
        (0, 1),
        (1, 0),
        (1, 1),
        (2, 2),
        (2, 3),
        (3, 2),
        (3, 3),
        (3, 4),
        (4, 3),
        (4, 4),
        (5, 5),
        (6, 6),
        (6, 7),
        (7, 6),
        (7, 7),
    ];
    SparseMatrix::new(8, pos.iter().map(|&(r, c)| (r, c, 1.0)).collect()).unwrap()
}

/// 22x22 symmetric 0/1 pattern with 64 nonzeros, of which exactly 32 lie
/// inside the size-4 fixed diagonal blocks `[4, 4, 4, 4, 4, 2]`.
///
/// Mimics a small molecule adjacency matrix: a full diagonal, one bonded
/// pair per block, and off-block couplings at the block junctions.
pub fn dim22_nnz64() -> SparseMatrix {
    let mut pos: Vec<(usize, usize)> = Vec::new();
    // 22 diagonal entries + 5 symmetric in-block pairs = 32 covered
    for i in 0..22 {
        pos.push((i, i));
    }
    for &base in &[0usize, 4, 8, 12, 16] {
        pos.push((base, base + 1));
        pos.push((base + 1, base));
    }
    // 16 symmetric cross-block pairs = 32 uncovered
    let cross = [
        (3, 4),
        (7, 8),
        (11, 12),
        (15, 16),
        (19, 20),
        (2, 5),
        (6, 9),
        (10, 13),
        (14, 17),
        (18, 21),
        (1, 6),
        (5, 10),
        (9, 14),
        (13, 18),
        (0, 7),
        (2, 9),
    ];
    for &(r, c) in &cross {
        pos.push((r, c));
        pos.push((c, r));
    }
    SparseMatrix::new(22, pos.into_iter().map(|(r, c)| (r, c, 1.0)).collect()).unwrap()
}
