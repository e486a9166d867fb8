//! Decision grid, action decoding, and mapping-scheme geometry.
//!
//! A scheme is a list of square diagonal blocks that tile the main diagonal
//! plus optional square fill blocks at the junctions between consecutive
//! diagonal blocks (each with its mirror across the diagonal).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Partition of `[0, dim)` into `ceil(dim / cell)` grid cells; the last
/// cell is ragged when `cell` does not divide `dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    cell: usize,
    boundaries: Vec<usize>,
}

impl GridSpec {
    pub fn new(dim: usize, cell: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dim must be positive".into()));
        }
        if cell < 1 || cell > dim {
            return Err(Error::Argument(format!(
                "grid size {cell} outside [1, {dim}]"
            )));
        }
        let mut boundaries: Vec<usize> = (0..=dim / cell).map(|i| i * cell).collect();
        if *boundaries.last().unwrap() < dim {
            boundaries.push(dim);
        }
        Ok(Self {
            dim,
            cell,
            boundaries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    pub fn n_cells(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Diagonal decision points: one per interior cell boundary.
    pub fn n_decisions(&self) -> usize {
        self.n_cells() - 1
    }

    /// Ascending cell offsets `[0, k, 2k, ..., dim]`.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
}

/// Per-boundary diagonal decisions: 0 starts a new block, 1 continues the
/// previous one. Length is `n_cells - 1` (the first cell opens block 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalActions(pub Vec<u8>);

/// Fill grades, one per gap (a boundary whose diagonal action is 0),
/// in gap order. Each grade is below the configured grade count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillActions(pub Vec<usize>);

impl DiagonalActions {
    pub fn zeros(&self) -> usize {
        self.0.iter().filter(|&&b| b == 0).count()
    }
}

/// A square block anchored on the main diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagBlock {
    pub offset: usize,
    pub size: usize,
}

/// A square fill block; mirrors are stored as separate entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillBlock {
    pub row: usize,
    pub col: usize,
    pub size: usize,
}

/// Fill sizing rule applied at each gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillMode {
    /// Grade 0 leaves the gap open; any other grade fills it with
    /// `min(size, left, right)`.
    Fixed { size: usize, grades: usize },
    /// Grade `z` fills with `floor(z / (grades - 1) * left)`, clipped to
    /// `min(left, right)`.
    Dynamic { grades: usize },
}

impl FillMode {
    pub fn grades(&self) -> usize {
        match *self {
            FillMode::Fixed { grades, .. } => grades,
            FillMode::Dynamic { grades } => grades,
        }
    }
}

/// Concrete block geometry decoded from one action pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingScheme {
    pub dim: usize,
    pub diag_blocks: Vec<DiagBlock>,
    /// Gap fills in emission order: each gap contributes the upper block
    /// followed by its mirror.
    pub fill_blocks: Vec<FillBlock>,
}

impl MappingScheme {
    /// All blocks as `(row, col, size)`: diagonal blocks first, then fills,
    /// in stored order.
    pub fn all_blocks(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.diag_blocks
            .iter()
            .map(|b| (b.offset, b.offset, b.size))
            .chain(self.fill_blocks.iter().map(|f| (f.row, f.col, f.size)))
    }

    /// Sum of block areas in matrix elements.
    pub fn total_area(&self) -> usize {
        self.all_blocks().map(|(_, _, s)| s * s).sum()
    }

    pub fn diag_sizes(&self) -> Vec<usize> {
        self.diag_blocks.iter().map(|b| b.size).collect()
    }

    /// True when `(r, c)` lies inside some block.
    pub fn covers(&self, r: usize, c: usize) -> bool {
        self.all_blocks()
            .any(|(br, bc, s)| r >= br && r < br + s && c >= bc && c < bc + s)
    }
}

/// Merges grid cells into diagonal blocks: a 1 extends the open block
/// across the boundary, a 0 closes it. Sizes are in element units and sum
/// to the matrix order.
pub fn parse_diagonal(a: &DiagonalActions, g: &GridSpec) -> Result<Vec<DiagBlock>> {
    if a.0.len() != g.n_decisions() {
        return Err(Error::Argument(format!(
            "{} diagonal actions for a grid with {} decision points",
            a.0.len(),
            g.n_decisions()
        )));
    }
    if let Some(b) = a.0.iter().find(|&&b| b > 1) {
        return Err(Error::Argument(format!(
            "diagonal action {b} not in {{0, 1}}"
        )));
    }
    let bounds = g.boundaries();
    let mut blocks = Vec::new();
    let mut start = 0usize;
    for (i, &bit) in a.0.iter().enumerate() {
        let boundary = bounds[i + 1];
        if bit == 0 {
            blocks.push(DiagBlock {
                offset: start,
                size: boundary - start,
            });
            start = boundary;
        }
    }
    blocks.push(DiagBlock {
        offset: start,
        size: g.dim() - start,
    });
    Ok(blocks)
}

/// Inverse of [`parse_diagonal`]: recovers the 0/1 boundary decisions from
/// block sizes. Errors if the blocks do not line up with grid boundaries.
pub fn encode_diagonal(blocks: &[DiagBlock], g: &GridSpec) -> Result<DiagonalActions> {
    let bounds = g.boundaries();
    let starts: std::collections::HashSet<usize> = blocks.iter().map(|b| b.offset).collect();
    let mut covered = 0usize;
    for b in blocks {
        if b.offset != covered {
            return Err(Error::Argument("diagonal blocks are not contiguous".into()));
        }
        covered += b.size;
    }
    if covered != g.dim() {
        return Err(Error::Argument(
            "diagonal blocks do not tile the diagonal".into(),
        ));
    }
    let mut bits = Vec::with_capacity(g.n_decisions());
    for &boundary in &bounds[1..bounds.len() - 1] {
        bits.push(if starts.contains(&boundary) { 0 } else { 1 });
    }
    // a block edge that is not a grid boundary cannot be expressed
    for b in blocks.iter().skip(1) {
        if !bounds.contains(&b.offset) {
            return Err(Error::Argument(format!(
                "block offset {} is not a grid boundary",
                b.offset
            )));
        }
    }
    Ok(DiagonalActions(bits))
}

/// Decodes fill grades into junction blocks.
///
/// Gap `j` sits between diagonal blocks `j` and `j+1`; with the junction at
/// element offset `e` and fill size `f`, the upper block spans rows
/// `[e-f, e)` x cols `[e, e+f)` and is emitted with its mirror. Gaps whose
/// computed size is 0 contribute nothing.
pub fn parse_fill(z: &FillActions, diag: &[DiagBlock], mode: FillMode) -> Result<Vec<FillBlock>> {
    let gaps = diag.len().saturating_sub(1);
    if z.0.len() != gaps {
        return Err(Error::Argument(format!(
            "{} fill actions for {gaps} gaps",
            z.0.len()
        )));
    }
    let grades = mode.grades();
    if grades < 2 {
        return Err(Error::Argument("grade count must be at least 2".into()));
    }
    let mut fills = Vec::new();
    for (j, &grade) in z.0.iter().enumerate() {
        if grade >= grades {
            return Err(Error::Argument(format!(
                "grade {grade} out of range for {grades} grades"
            )));
        }
        let left = diag[j].size;
        let right = diag[j + 1].size;
        let f = match mode {
            FillMode::Fixed { size, .. } => {
                if grade == 0 {
                    0
                } else {
                    size.min(left).min(right)
                }
            }
            FillMode::Dynamic { grades } => {
                let ratio = grade as f64 / (grades - 1) as f64;
                let raw = (ratio * left as f64).floor() as usize;
                raw.min(left).min(right)
            }
        };
        if f > 0 {
            let e = diag[j + 1].offset;
            fills.push(FillBlock {
                row: e - f,
                col: e,
                size: f,
            });
            fills.push(FillBlock {
                row: e,
                col: e - f,
                size: f,
            });
        }
    }
    Ok(fills)
}

/// A single broken scheme invariant, referencing the offending blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DiagonalNotTiled {
        detail: String,
    },
    OutOfBounds {
        block: (usize, usize, usize),
    },
    Overlap {
        a: (usize, usize, usize),
        b: (usize, usize, usize),
    },
    NotFlush {
        block: (usize, usize, usize),
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DiagonalNotTiled { detail } => write!(f, "diagonal not tiled: {detail}"),
            Violation::OutOfBounds { block } => write!(f, "block {block:?} out of bounds"),
            Violation::Overlap { a, b } => write!(f, "overlap between {a:?} and {b:?}"),
            Violation::NotFlush { block } => {
                write!(f, "fill {block:?} not flush at a diagonal junction")
            }
        }
    }
}

/// Checks every scheme invariant; violations are returned as data.
pub fn validate(s: &MappingScheme) -> Vec<Violation> {
    let mut out = Vec::new();

    // diagonal blocks tile [0, dim) contiguously
    let mut covered = 0usize;
    let mut tiled = true;
    for b in &s.diag_blocks {
        if b.offset != covered || b.size == 0 {
            tiled = false;
            break;
        }
        covered += b.size;
    }
    if !tiled || covered != s.dim {
        out.push(Violation::DiagonalNotTiled {
            detail: format!("sizes {:?} against order {}", s.diag_sizes(), s.dim),
        });
    }

    // bounds
    let blocks: Vec<(usize, usize, usize)> = s.all_blocks().collect();
    for &(r, c, sz) in &blocks {
        if r + sz > s.dim || c + sz > s.dim {
            out.push(Violation::OutOfBounds { block: (r, c, sz) });
        }
    }

    // pairwise disjointness
    for i in 0..blocks.len() {
        for j in (i + 1)..blocks.len() {
            let (ar, ac, asz) = blocks[i];
            let (br, bc, bsz) = blocks[j];
            let rows = ar < br + bsz && br < ar + asz;
            let cols = ac < bc + bsz && bc < ac + asz;
            if rows && cols {
                out.push(Violation::Overlap {
                    a: blocks[i],
                    b: blocks[j],
                });
            }
        }
    }

    // every fill sits flush at a junction between consecutive diagonal blocks
    let junctions: std::collections::HashSet<usize> =
        s.diag_blocks.iter().skip(1).map(|b| b.offset).collect();
    for f in &s.fill_blocks {
        let upper_ok = junctions.contains(&f.col) && f.row + f.size == f.col;
        let lower_ok = junctions.contains(&f.row) && f.col + f.size == f.row;
        if !(upper_ok || lower_ok) {
            out.push(Violation::NotFlush {
                block: (f.row, f.col, f.size),
            });
        }
    }

    out
}

/// On-disk scheme document; sizes are in element units and `fills` refer to
/// gap indices between consecutive diagonal blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeFile {
    pub dim: usize,
    pub grid: usize,
    pub grades: usize,
    pub diagonal: Vec<usize>,
    pub fills: Vec<GapFill>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapFill {
    pub gap: usize,
    pub size: usize,
}

impl SchemeFile {
    /// Captures a canonical scheme (one produced by the parse functions)
    /// together with the grid/grade configuration that generated it.
    pub fn from_scheme(s: &MappingScheme, grid: usize, grades: usize) -> Result<Self> {
        let offsets: Vec<usize> = s.diag_blocks.iter().map(|b| b.offset).collect();
        let mut fills = Vec::new();
        for f in &s.fill_blocks {
            if f.size > 0 && f.row + f.size == f.col {
                // upper member of the mirrored pair carries the gap record
                let gap = offsets
                    .iter()
                    .position(|&o| o == f.col)
                    .and_then(|p| p.checked_sub(1))
                    .ok_or_else(|| {
                        Error::Argument(format!(
                            "fill at col {} is not at a diagonal junction",
                            f.col
                        ))
                    })?;
                fills.push(GapFill { gap, size: f.size });
            }
        }
        fills.sort_by_key(|g| g.gap);
        Ok(Self {
            dim: s.dim,
            grid,
            grades,
            diagonal: s.diag_sizes(),
            fills,
        })
    }

    /// Reconstructs the block geometry. Fails on malformed documents.
    pub fn to_scheme(&self) -> Result<MappingScheme> {
        let mut diag = Vec::with_capacity(self.diagonal.len());
        let mut offset = 0usize;
        for &size in &self.diagonal {
            diag.push(DiagBlock { offset, size });
            offset += size;
        }
        if offset != self.dim {
            return Err(Error::Argument(format!(
                "diagonal sizes sum to {offset}, expected {}",
                self.dim
            )));
        }
        let mut fill_blocks = Vec::new();
        for gf in &self.fills {
            if gf.gap + 1 >= diag.len() {
                return Err(Error::Argument(format!(
                    "gap index {} out of range for {} diagonal blocks",
                    gf.gap,
                    diag.len()
                )));
            }
            if gf.size == 0 {
                continue;
            }
            let e = diag[gf.gap + 1].offset;
            if gf.size > diag[gf.gap].size || gf.size > diag[gf.gap + 1].size {
                return Err(Error::Argument(format!(
                    "fill size {} exceeds its neighboring blocks",
                    gf.size
                )));
            }
            fill_blocks.push(FillBlock {
                row: e - gf.size,
                col: e,
                size: gf.size,
            });
            fill_blocks.push(FillBlock {
                row: e,
                col: e - gf.size,
                size: gf.size,
            });
        }
        let s = MappingScheme {
            dim: self.dim,
            diag_blocks: diag,
            fill_blocks,
        };
        let violations = validate(&s);
        if !violations.is_empty() {
            return Err(Error::Argument(format!(
                "scheme document violates invariants: {}",
                violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_examples() {
        let g = GridSpec::new(22, 2).unwrap();
        assert_eq!(g.n_cells(), 11);
        assert!(g.boundaries().windows(2).all(|w| w[1] - w[0] == 2));

        let g = GridSpec::new(882, 32).unwrap();
        assert_eq!(g.n_cells(), 28);
        let last = g.boundaries()[g.n_cells()] - g.boundaries()[g.n_cells() - 1];
        assert_eq!(last, 18);

        let g = GridSpec::new(8, 8).unwrap();
        assert_eq!(g.n_cells(), 1);
        assert_eq!(g.n_decisions(), 0);

        assert!(GridSpec::new(8, 0).is_err());
        assert!(GridSpec::new(8, 9).is_err());
    }

    #[test]
    fn diagonal_parse_examples() {
        let g = GridSpec::new(22, 2).unwrap();
        let all_one = DiagonalActions(vec![1; 10]);
        assert_eq!(
            parse_diagonal(&all_one, &g).unwrap(),
            vec![DiagBlock {
                offset: 0,
                size: 22
            }]
        );

        let all_zero = DiagonalActions(vec![0; 10]);
        let blocks = parse_diagonal(&all_zero, &g).unwrap();
        assert_eq!(blocks.len(), 11);
        assert!(blocks.iter().all(|b| b.size == 2));

        let bits = DiagonalActions(vec![1, 1, 1, 0, 1, 1, 1, 1, 1, 1]);
        let blocks = parse_diagonal(&bits, &g).unwrap();
        assert_eq!(
            blocks.iter().map(|b| b.size).collect::<Vec<_>>(),
            vec![8, 14]
        );

        assert!(parse_diagonal(&DiagonalActions(vec![0; 3]), &g).is_err());
    }

    #[test]
    fn diagonal_parse_is_bijective() {
        let g = GridSpec::new(22, 2).unwrap();
        for code in 0u32..1 << 10 {
            let bits: Vec<u8> = (0..10).map(|j| ((code >> (9 - j)) & 1) as u8).collect();
            let actions = DiagonalActions(bits.clone());
            let blocks = parse_diagonal(&actions, &g).unwrap();
            let back = encode_diagonal(&blocks, &g).unwrap();
            assert_eq!(back.0, bits);
        }
    }

    #[test]
    fn solution_space_count() {
        // distinct compositions reachable for an N-cell grid: 2^(N-1)
        for n_cells in 2usize..=6 {
            let g = GridSpec::new(n_cells * 2, 2).unwrap();
            let nd = g.n_decisions();
            let mut seen = std::collections::HashSet::new();
            for code in 0u32..1 << nd {
                let bits: Vec<u8> = (0..nd)
                    .map(|j| ((code >> (nd - 1 - j)) & 1) as u8)
                    .collect();
                let blocks = parse_diagonal(&DiagonalActions(bits), &g).unwrap();
                seen.insert(blocks.iter().map(|b| b.size).collect::<Vec<_>>());
            }
            assert_eq!(seen.len(), 1 << (n_cells - 1));
        }
    }

    #[test]
    fn fill_fixed_reproduces_junction_clipping() {
        // diag [6,6,6,4] with fixed size-6 fills -> sizes [6, 6, 4]
        let diag = vec![
            DiagBlock { offset: 0, size: 6 },
            DiagBlock { offset: 6, size: 6 },
            DiagBlock {
                offset: 12,
                size: 6,
            },
            DiagBlock {
                offset: 18,
                size: 4,
            },
        ];
        let z = FillActions(vec![1, 1, 1]);
        let fills = parse_fill(&z, &diag, FillMode::Fixed { size: 6, grades: 2 }).unwrap();
        let sizes: Vec<usize> = fills.iter().step_by(2).map(|f| f.size).collect();
        assert_eq!(sizes, vec![6, 6, 4]);

        let s = MappingScheme {
            dim: 22,
            diag_blocks: diag,
            fill_blocks: fills,
        };
        assert_eq!(s.total_area(), 300);
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn fill_grade_zero_emits_nothing() {
        let diag = vec![
            DiagBlock { offset: 0, size: 4 },
            DiagBlock { offset: 4, size: 4 },
        ];
        let fills = parse_fill(
            &FillActions(vec![0]),
            &diag,
            FillMode::Dynamic { grades: 3 },
        )
        .unwrap();
        assert!(fills.is_empty());
    }

    #[test]
    fn fill_full_ratio_clips_to_neighbors() {
        let diag = vec![
            DiagBlock { offset: 0, size: 4 },
            DiagBlock { offset: 4, size: 4 },
        ];
        let fills = parse_fill(
            &FillActions(vec![2]),
            &diag,
            FillMode::Dynamic { grades: 3 },
        )
        .unwrap();
        assert_eq!(
            fills,
            vec![
                FillBlock {
                    row: 0,
                    col: 4,
                    size: 4
                },
                FillBlock {
                    row: 4,
                    col: 0,
                    size: 4
                },
            ]
        );

        assert!(parse_fill(
            &FillActions(vec![3]),
            &diag,
            FillMode::Dynamic { grades: 3 }
        )
        .is_err());
    }

    #[test]
    fn validate_flags_constructed_violations() {
        // diagonal gap: sizes sum to dim - 1
        let s = MappingScheme {
            dim: 8,
            diag_blocks: vec![
                DiagBlock { offset: 0, size: 4 },
                DiagBlock { offset: 4, size: 3 },
            ],
            fill_blocks: vec![],
        };
        assert!(validate(&s)
            .iter()
            .any(|v| matches!(v, Violation::DiagonalNotTiled { .. })));

        // overlapping fill pair
        let s = MappingScheme {
            dim: 8,
            diag_blocks: vec![
                DiagBlock { offset: 0, size: 4 },
                DiagBlock { offset: 4, size: 4 },
            ],
            fill_blocks: vec![
                FillBlock {
                    row: 2,
                    col: 2,
                    size: 4,
                },
                FillBlock {
                    row: 2,
                    col: 2,
                    size: 4,
                },
            ],
        };
        let vs = validate(&s);
        assert!(vs.iter().any(|v| matches!(v, Violation::Overlap { .. })));
        assert!(vs.iter().any(|v| matches!(v, Violation::NotFlush { .. })));
    }

    /// Generates a random valid action pair and checks the decoded scheme.
    #[test]
    fn randomized_schemes_always_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10_000 {
            let dim = rng.gen_range(2usize..40);
            let cell = rng.gen_range(1usize..=dim);
            let grades = rng.gen_range(2usize..7);
            let g = GridSpec::new(dim, cell).unwrap();
            let bits: Vec<u8> = (0..g.n_decisions())
                .map(|_| rng.gen_range(0..2) as u8)
                .collect();
            let actions = DiagonalActions(bits);
            let diag = parse_diagonal(&actions, &g).unwrap();
            let z = FillActions(
                (0..diag.len() - 1)
                    .map(|_| rng.gen_range(0..grades))
                    .collect(),
            );
            let fills = parse_fill(&z, &diag, FillMode::Dynamic { grades }).unwrap();
            let s = MappingScheme {
                dim,
                diag_blocks: diag,
                fill_blocks: fills,
            };
            let vs = validate(&s);
            assert!(vs.is_empty(), "dim {dim} cell {cell}: {vs:?}");
            assert!(s.total_area() <= dim * dim);
        }
    }

    proptest! {
        #[test]
        fn scheme_file_round_trip(dim in 4usize..40, cell in 1usize..8, seed in 0u64..100) {
            prop_assume!(cell <= dim);
            let g = GridSpec::new(dim, cell).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = (0..g.n_decisions()).map(|_| rng.gen_range(0..2) as u8).collect();
            let diag = parse_diagonal(&DiagonalActions(bits), &g).unwrap();
            let z = FillActions((0..diag.len() - 1).map(|_| rng.gen_range(0..4)).collect());
            let fills = parse_fill(&z, &diag, FillMode::Dynamic { grades: 4 }).unwrap();
            let s = MappingScheme { dim, diag_blocks: diag, fill_blocks: fills };

            let file = SchemeFile::from_scheme(&s, cell, 4).unwrap();
            let text = serde_json::to_string(&file).unwrap();
            let parsed: SchemeFile = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(parsed.to_scheme().unwrap(), s);
        }
    }
}
