//! Square sparse matrices in coordinate form, Matrix Market I/O, and a dense
//! 2D prefix-sum index for O(1) rectangle nonzero counts.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Default upper bound on the order accepted by [`PrefixIndex::new`].
pub const DEFAULT_DIM_CAP: usize = 20_000;

/// A square sparse matrix stored as a sorted coordinate list.
///
/// Entries are kept sorted by `(row, col)` with no duplicates; all indices
/// are 0-based and strictly below `dim`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    /// Builds a matrix from raw triplets, sorting them and rejecting
    /// out-of-range indices or duplicate positions.
    pub fn new(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("matrix order must be positive".into()));
        }
        for &(r, c, _) in &entries {
            if r >= dim || c >= dim {
                return Err(Error::Bounds(format!(
                    "entry ({r}, {c}) outside {dim}x{dim} matrix"
                )));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Argument(format!(
                    "duplicate entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Entries sorted by `(row, col)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Fraction of positions that are zero: `1 - nnz / dim^2`.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.nnz() as f64 / (self.dim * self.dim) as f64
    }

    /// True when the pattern of `(i, j)` implies the pattern of `(j, i)`.
    pub fn pattern_symmetric(&self) -> bool {
        self.first_asymmetric().is_none()
    }

    /// First entry whose transpose position is absent, if any.
    pub fn first_asymmetric(&self) -> Option<(usize, usize)> {
        let pos: std::collections::HashSet<(usize, usize)> =
            self.entries.iter().map(|&(r, c, _)| (r, c)).collect();
        self.entries
            .iter()
            .find(|&&(r, c, _)| !pos.contains(&(c, r)))
            .map(|&(r, c, _)| (r, c))
    }

    /// Position -> value lookup table.
    pub fn value_map(&self) -> HashMap<(usize, usize), f64> {
        self.entries.iter().map(|&(r, c, v)| ((r, c), v)).collect()
    }

    /// Dense row-major copy; intended for small matrices in tests and checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for &(r, c, v) in &self.entries {
            d[r][c] = v;
        }
        d
    }
}

/// Parses Matrix Market coordinate text into a square [`SparseMatrix`].
///
/// Accepts the `general` and `symmetric` qualifiers (the latter is eagerly
/// mirrored) and `pattern` fields (value 1.0). Files without a
/// `%%MatrixMarket` banner are read as general real coordinate data. Indices
/// are 1-based on disk and converted to 0-based in memory.
pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut symmetric = false;
    let mut pattern = false;
    let mut header: Option<(usize, usize, usize)> = None;
    let mut header_line = 0usize;
    let mut raw_count = 0usize;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.starts_with('%') {
            if lineno == 1 && line.starts_with("%%MatrixMarket") {
                let banner = line.to_ascii_lowercase();
                let fields: Vec<&str> = banner.split_whitespace().collect();
                if fields.len() < 5 || fields[1] != "matrix" || fields[2] != "coordinate" {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "banner must declare a coordinate matrix".into(),
                    });
                }
                match fields[3] {
                    "real" | "integer" => {}
                    "pattern" => pattern = true,
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("unsupported field type '{other}'"),
                        })
                    }
                }
                match fields[4] {
                    "general" => {}
                    "symmetric" => symmetric = true,
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("unsupported symmetry '{other}'"),
                        })
                    }
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if header.is_none() {
            if toks.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 'rows cols nnz' header, got '{line}'"),
                });
            }
            let rows: usize = toks[0].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad row count '{}'", toks[0]),
            })?;
            let cols: usize = toks[1].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad column count '{}'", toks[1]),
            })?;
            let nnz: usize = toks[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad nonzero count '{}'", toks[2]),
            })?;
            if rows != cols {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("matrix must be square, got {rows}x{cols}"),
                });
            }
            if rows == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "matrix order must be positive".into(),
                });
            }
            header = Some((rows, cols, nnz));
            header_line = lineno;
            continue;
        }
        let (dim, _, _) = header.unwrap();
        let want = if pattern { 2 } else { 3 };
        if toks.len() < want {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {want} fields, got {}", toks.len()),
            });
        }
        let r: usize = toks[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad row index '{}'", toks[0]),
        })?;
        let c: usize = toks[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad column index '{}'", toks[1]),
        })?;
        if r < 1 || r > dim || c < 1 || c > dim {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("index ({r}, {c}) outside 1..={dim}"),
            });
        }
        let v: f64 = if pattern {
            1.0
        } else {
            toks[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad value '{}'", toks[2]),
            })?
        };
        raw_count += 1;
        entries.push((r - 1, c - 1, v));
        if symmetric && r != c {
            entries.push((c - 1, r - 1, v));
        }
    }

    let (dim, _, declared) = header.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        msg: "missing size header".into(),
    })?;
    if raw_count != declared {
        return Err(Error::Parse {
            line: header_line,
            msg: format!("header declares {declared} entries, file lists {raw_count}"),
        });
    }

    SparseMatrix::new(dim, entries).map_err(|e| match e {
        Error::Argument(msg) => Error::Parse {
            line: header_line,
            msg,
        },
        other => other,
    })
}

/// Serializes a matrix as general real Matrix Market coordinate text.
/// `parse_matrix_market` reproduces the input exactly (pattern and values).
pub fn write_matrix_market(m: &SparseMatrix) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.dim(), m.dim(), m.nnz());
    for &(r, c, v) in m.entries() {
        let _ = writeln!(out, "{} {} {}", r + 1, c + 1, v);
    }
    out
}

/// Dense `(dim+1) x (dim+1)` cumulative nonzero-count table.
///
/// `cumulative[i][j]` counts the nonzeros in rows `[0, i)` x cols `[0, j)`,
/// so any rectangle count is four lookups. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PrefixIndex {
    dim: usize,
    // row-major (dim+1)^2 table; u32 is enough for dim <= DEFAULT_DIM_CAP
    cumulative: Vec<u32>,
}

impl PrefixIndex {
    /// Builds the index with the default capacity cap.
    pub fn new(m: &SparseMatrix) -> Result<Self> {
        Self::with_cap(m, DEFAULT_DIM_CAP)
    }

    /// Builds the index, refusing orders above `dim_cap`.
    pub fn with_cap(m: &SparseMatrix, dim_cap: usize) -> Result<Self> {
        let dim = m.dim();
        if dim > dim_cap {
            return Err(Error::Capacity(format!(
                "order {dim} exceeds prefix-index cap {dim_cap}"
            )));
        }
        let n = dim + 1;
        let mut cum = vec![0u32; n * n];
        for &(r, c, _) in m.entries() {
            cum[(r + 1) * n + (c + 1)] = 1;
        }
        for i in 1..n {
            for j in 1..n {
                cum[i * n + j] += cum[(i - 1) * n + j] + cum[i * n + (j - 1)];
                cum[i * n + j] -= cum[(i - 1) * n + (j - 1)];
            }
        }
        Ok(Self {
            dim,
            cumulative: cum,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total nonzeros of the source matrix.
    pub fn total(&self) -> usize {
        self.at(self.dim, self.dim)
    }

    fn at(&self, i: usize, j: usize) -> usize {
        self.cumulative[i * (self.dim + 1) + j] as usize
    }

    /// Exact nonzero count of rows `[r0, r0+h)` x cols `[c0, c0+w)` by
    /// 4-term inclusion-exclusion.
    pub fn count(&self, r0: usize, c0: usize, h: usize, w: usize) -> Result<usize> {
        let (r1, c1) = (r0 + h, c0 + w);
        if r1 > self.dim || c1 > self.dim {
            return Err(Error::Bounds(format!(
                "rectangle rows [{r0}, {r1}) x cols [{c0}, {c1}) exceeds dim {}",
                self.dim
            )));
        }
        Ok(self.at(r1, c1) + self.at(r0, c0) - self.at(r0, c1) - self.at(r1, c0))
    }
}

/// Generates a deterministic symmetric banded test matrix.
///
/// The main diagonal is always present; each off-diagonal position inside
/// the band (`|i - j| <= bw`, taken over `i < j`) is kept with probability
/// `density` and mirrored. Values are drawn in `[0.5, 1.5)`.
pub fn synth_banded(n: usize, bw: usize, density: f64, seed: u64) -> Result<SparseMatrix> {
    if n == 0 {
        return Err(Error::Argument("order must be positive".into()));
    }
    if bw >= n {
        return Err(Error::Argument(format!(
            "bandwidth {bw} must be < order {n}"
        )));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Argument(format!("density {density} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..n {
        entries.push((i, i, 0.5 + rng.gen::<f64>()));
        for j in (i + 1)..n.min(i + bw + 1) {
            if rng.gen::<f64>() < density {
                let v = 0.5 + rng.gen::<f64>();
                entries.push((i, j, v));
                entries.push((j, i, v));
            }
        }
    }
    SparseMatrix::new(n, entries)
}

/// Builds a symmetric 0/1 adjacency matrix from an undirected edge list.
/// Duplicate edges collapse; self-loops stay single entries.
pub fn from_edge_list(edges: &[(usize, usize)], n: usize) -> Result<SparseMatrix> {
    if n == 0 {
        return Err(Error::Argument("order must be positive".into()));
    }
    let mut pos = std::collections::BTreeSet::new();
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::Argument(format!(
                "edge ({u}, {v}) outside graph of order {n}"
            )));
        }
        pos.insert((u, v));
        pos.insert((v, u));
    }
    let entries = pos.into_iter().map(|(r, c)| (r, c, 1.0)).collect();
    SparseMatrix::new(n, entries)
}
