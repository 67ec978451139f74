use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ordering::{btf_scc, mwcm};
use crate::sparse::{permute, CscMatrix, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Small diagonal block, factored whole by one worker.
    FineBtf,
    /// Large diagonal block, split by nested dissection.
    FineNd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarsePlan {
    /// Row matching applied first.
    pub perm_mwcm: Permutation,
    /// Symmetric block triangular permutation applied after the matching.
    pub perm_btf: Permutation,
    pub block_offsets: Vec<usize>,
    pub kinds: Vec<BlockKind>,
    pub nd_threshold: usize,
}

impl CoarsePlan {
    pub fn nblocks(&self) -> usize {
        self.kinds.len()
    }

    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        self.block_offsets[b]..self.block_offsets[b + 1]
    }

    /// Row permutation of the coarse structure (matching, then BTF).
    pub fn row_perm(&self) -> Permutation {
        self.perm_mwcm.then(&self.perm_btf)
    }

    /// Rows (equivalently columns) covered by fine-BTF blocks.
    pub fn btf_rows(&self) -> usize {
        (0..self.nblocks())
            .filter(|&b| self.kinds[b] == BlockKind::FineBtf)
            .map(|b| self.block_range(b).len())
            .sum()
    }
}

/// Matching plus strongly connected components; blocks larger than
/// `nd_threshold` are marked for nested dissection.
pub fn coarse_decompose(a: &CscMatrix, nd_threshold: usize) -> Result<CoarsePlan> {
    let perm_mwcm = mwcm(a)?;
    let n = a.ncols();
    let matched = permute(a, &perm_mwcm, &Permutation::identity(n))?;
    let (perm_btf, block_offsets) = btf_scc(&matched);
    let kinds = block_offsets
        .windows(2)
        .map(|w| {
            if w[1] - w[0] > nd_threshold {
                BlockKind::FineNd
            } else {
                BlockKind::FineBtf
            }
        })
        .collect();
    Ok(CoarsePlan {
        perm_mwcm,
        perm_btf,
        block_offsets,
        kinds,
        nd_threshold,
    })
}

/// The whole matrix as a single nested-dissection block.
pub fn coarse_single(n: usize) -> CoarsePlan {
    CoarsePlan {
        perm_mwcm: Permutation::identity(n),
        perm_btf: Permutation::identity(n),
        block_offsets: vec![0, n],
        kinds: vec![BlockKind::FineNd],
        nd_threshold: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_triangular_gives_unit_blocks() {
        let n = 5;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                d[i * n + j] = 1.0 + j as f64;
            }
        }
        let p = coarse_decompose(&CscMatrix::from_dense(n, n, &d), 1000).unwrap();
        assert_eq!(p.nblocks(), n);
        assert!(p.kinds.iter().all(|&k| k == BlockKind::FineBtf));
        assert_eq!(p.btf_rows(), n);
    }

    #[test]
    fn coupled_matrix_is_one_nd_block() {
        let n = 100;
        let mut t = crate::sparse::Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 4.0);
            t.push(i, (i + 1) % n, 1.0);
        }
        let p = coarse_decompose(&CscMatrix::from_triplets(&t).unwrap(), 10).unwrap();
        assert_eq!(p.nblocks(), 1);
        assert_eq!(p.kinds, vec![BlockKind::FineNd]);
    }
}
