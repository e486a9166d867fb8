//! Fixed-size comparison schemes and the exhaustive brute-force oracle for
//! small instances.

use crate::error::{Error, Result};
use crate::evaluator::{evaluate, EvalResult};
use crate::matrix::{PrefixIndex, SparseMatrix};
use crate::scheme::{
    parse_diagonal, parse_fill, DiagBlock, DiagonalActions, FillActions, FillMode, GridSpec,
    MappingScheme,
};

/// Uniform diagonal blocks `[B, B, ..., remainder]` with no fills.
pub fn vanilla_scheme(dim: usize, block: usize) -> Result<MappingScheme> {
    if block < 1 || block > dim {
        return Err(Error::Argument(format!(
            "block size {block} outside [1, {dim}]"
        )));
    }
    let mut blocks = Vec::new();
    let mut offset = 0;
    while offset < dim {
        let size = block.min(dim - offset);
        blocks.push(DiagBlock { offset, size });
        offset += size;
    }
    Ok(MappingScheme {
        dim,
        diag_blocks: blocks,
        fill_blocks: vec![],
    })
}

/// Vanilla diagonal plus every gap filled with `min(fill, left, right)`,
/// mirrored across the diagonal.
pub fn vanilla_fill_scheme(dim: usize, block: usize, fill: usize) -> Result<MappingScheme> {
    if fill < 1 {
        return Err(Error::Argument("fill size must be at least 1".into()));
    }
    let mut s = vanilla_scheme(dim, block)?;
    let gaps = s.diag_blocks.len() - 1;
    let z = FillActions(vec![1; gaps]);
    s.fill_blocks = parse_fill(
        &z,
        &s.diag_blocks,
        FillMode::Fixed {
            size: fill,
            grades: 2,
        },
    )?;
    Ok(s)
}

/// Result of exhausting the generative action space.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_scheme: MappingScheme,
    pub best_eval: EvalResult,
    pub best_reward: f64,
    /// Number of (diagonal, fill) action pairs evaluated.
    pub enumerated_count: u64,
}

/// Visits every `(DiagonalActions, FillActions)` pair reachable by the
/// sampler, in lexicographic order (diagonal bits first, then grades).
pub fn for_each_action_pair<F>(n_decisions: usize, grades: usize, mut f: F) -> Result<()>
where
    F: FnMut(&DiagonalActions, &FillActions) -> Result<()>,
{
    if grades < 2 {
        return Err(Error::Argument("grade count must be at least 2".into()));
    }
    if n_decisions >= 63 {
        return Err(Error::SpaceTooLarge {
            size: 2f64.powi(n_decisions as i32),
            cap: 2f64.powi(62),
        });
    }
    let patterns: u64 = 1u64 << n_decisions;
    for code in 0..patterns {
        let bits: Vec<u8> = (0..n_decisions)
            .map(|j| ((code >> (n_decisions - 1 - j)) & 1) as u8)
            .collect();
        let actions = DiagonalActions(bits);
        let gaps = actions.zeros();
        let mut z = vec![0usize; gaps];
        loop {
            f(&actions, &FillActions(z.clone()))?;
            // mixed-radix increment; the rightmost grade is least significant,
            // so fill vectors come out in lexicographic order
            let mut pos = gaps;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                z[pos] += 1;
                if z[pos] < grades {
                    break;
                }
                z[pos] = 0;
                if pos == 0 {
                    break;
                }
            }
            if z.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    Ok(())
}

/// Enumerates every reachable scheme and returns the reward maximizer,
/// breaking ties by smaller area and then by enumeration (lexicographic)
/// order. Refuses when `2^(N-1) * G^(N-1)` exceeds `cap`.
pub fn brute_force_best(
    m: &SparseMatrix,
    grid: usize,
    grades: usize,
    alpha: f64,
    cap: u64,
) -> Result<OracleResult> {
    let g = GridSpec::new(m.dim(), grid)?;
    let nd = g.n_decisions();
    let space = 2f64.powi(nd as i32) * (grades as f64).powi(nd as i32);
    if space > cap as f64 {
        return Err(Error::SpaceTooLarge {
            size: space,
            cap: cap as f64,
        });
    }
    let idx = PrefixIndex::new(m)?;
    let mode = FillMode::Dynamic { grades };
    let mut best: Option<(MappingScheme, EvalResult)> = None;
    let mut count: u64 = 0;
    for_each_action_pair(nd, grades, |actions, fills| {
        let diag = parse_diagonal(actions, &g)?;
        let fill_blocks = parse_fill(fills, &diag, mode)?;
        let scheme = MappingScheme {
            dim: m.dim(),
            diag_blocks: diag,
            fill_blocks,
        };
        let eval = evaluate(&scheme, &idx, alpha)?;
        count += 1;
        let replace = match &best {
            None => true,
            Some((cur_s, cur_e)) => {
                eval.reward > cur_e.reward
                    || (eval.reward == cur_e.reward && scheme.total_area() < cur_s.total_area())
            }
        };
        if replace {
            best = Some((scheme, eval));
        }
        Ok(())
    })?;
    let (best_scheme, best_eval) = best.expect("at least one scheme enumerated");
    Ok(OracleResult {
        best_scheme,
        best_reward: best_eval.reward,
        best_eval,
        enumerated_count: count,
    })
}
