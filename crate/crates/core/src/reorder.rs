//! Bandwidth-reducing Cuthill-McKee reordering and the permutation
//! transforms used to carry `y = Ax` through a reordered matrix.

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use serde::{Deserialize, Serialize};

/// A bijection old index -> new index over `[0, dim)`.
///
/// Serialized as `{"order": [...]}`; deserialization re-validates the
/// bijection, so hand-edited files cannot smuggle in bad orderings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PermutationRepr")]
pub struct Permutation {
    order: Vec<usize>,
}

#[derive(Deserialize)]
struct PermutationRepr {
    order: Vec<usize>,
}

impl TryFrom<PermutationRepr> for Permutation {
    type Error = Error;

    fn try_from(repr: PermutationRepr) -> Result<Self> {
        Permutation::new(repr.order)
    }
}

impl Permutation {
    /// Validates that `order` contains each index in `[0, len)` exactly once.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &o in &order {
            if o >= n || seen[o] {
                return Err(Error::Argument(format!(
                    "order is not a bijection over [0, {n})"
                )));
            }
            seen[o] = true;
        }
        Ok(Self { order })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// New index of old index `i`.
    pub fn map(&self, i: usize) -> usize {
        self.order[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.order.len()];
        for (old, &new) in self.order.iter().enumerate() {
            inv[new] = old;
        }
        Self { order: inv }
    }
}

/// Max over nonzeros of `|i - j|`; 0 for empty or diagonal matrices.
pub fn bandwidth(m: &SparseMatrix) -> usize {
    m.entries()
        .iter()
        .map(|&(r, c, _)| r.abs_diff(c))
        .max()
        .unwrap_or(0)
}

/// Cuthill-McKee ordering of a structurally symmetric matrix;
/// `reverse = true` gives the Reverse Cuthill-McKee variant.
///
/// Each connected component is traversed breadth-first from its
/// minimum-degree vertex (ties by lowest index), expanding neighbors in
/// (degree, index) order; components are processed in order of their
/// minimum vertex index. Fully deterministic.
pub fn rcm_order(m: &SparseMatrix, reverse: bool) -> Result<Permutation> {
    if let Some((r, c)) = m.first_asymmetric() {
        return Err(Error::AsymmetricPattern(r, c));
    }
    let n = m.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(r, c, _) in m.entries() {
        if r != c {
            adj[r].push(c);
        }
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for nbrs in &mut adj {
        nbrs.sort_by_key(|&j| (degree[j], j));
    }

    let mut visited = vec![false; n];
    let mut visit_seq = Vec::with_capacity(n);
    for start_scan in 0..n {
        if visited[start_scan] {
            continue;
        }
        // minimum-degree start within this component, ties by index
        let component = collect_component(&adj, start_scan, n);
        let &start = component
            .iter()
            .min_by_key(|&&v| (degree[v], v))
            .expect("component is nonempty");

        let mut queue = std::collections::VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            visit_seq.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }

    if reverse {
        visit_seq.reverse();
    }
    let mut order = vec![0; n];
    for (new, &old) in visit_seq.iter().enumerate() {
        order[old] = new;
    }
    Permutation::new(order)
}

fn collect_component(adj: &[Vec<usize>], seed: usize, n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut stack = vec![seed];
    let mut out = Vec::new();
    seen[seed] = true;
    while let Some(v) = stack.pop() {
        out.push(v);
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    out
}

/// Conjugates the matrix: entry `(i, j, v)` moves to `(p[i], p[j], v)`.
pub fn permute_matrix(m: &SparseMatrix, p: &Permutation) -> Result<SparseMatrix> {
    if p.len() != m.dim() {
        return Err(Error::Argument(format!(
            "permutation length {} != matrix order {}",
            p.len(),
            m.dim()
        )));
    }
    let entries = m
        .entries()
        .iter()
        .map(|&(r, c, v)| (p.map(r), p.map(c), v))
        .collect();
    SparseMatrix::new(m.dim(), entries)
}

/// Forward transform: `out[p[i]] = x[i]`.
pub fn permute_vector(x: &[f64], p: &Permutation) -> Result<Vec<f64>> {
    if x.len() != p.len() {
        return Err(Error::Argument(format!(
            "vector length {} != permutation length {}",
            x.len(),
            p.len()
        )));
    }
    let mut out = vec![0.0; x.len()];
    for (i, &v) in x.iter().enumerate() {
        out[p.map(i)] = v;
    }
    Ok(out)
}

/// Reverse transform: `out[i] = y[p[i]]`; exact inverse of [`permute_vector`].
pub fn inverse_permute_vector(y: &[f64], p: &Permutation) -> Result<Vec<f64>> {
    if y.len() != p.len() {
        return Err(Error::Argument(format!(
            "vector length {} != permutation length {}",
            y.len(),
            p.len()
        )));
    }
    Ok((0..y.len()).map(|i| y[p.map(i)]).collect())
}
