//! Structure-only factorization helpers: exact no-pivot fill and
//! elimination trees.

use serde::{Deserialize, Serialize};

use crate::gp::{ColumnGraph, SparseAccumulator};
use crate::sparse::{CscMatrix, Graph};

pub(crate) const NONE: usize = usize::MAX;

/// Which pattern the elimination tree is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EtreeMode {
    /// `A + Aᵀ`. Exact for diagonal pivoting.
    #[default]
    PatternSymmetric,
    /// `A·Aᵀ`. Looser, but also covers row interchanges.
    ColAAt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationTree {
    /// `parent[i] > i`, or `None` for roots.
    pub parent: Vec<Option<usize>>,
}

impl EliminationTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn is_root(&self, i: usize) -> bool {
        self.parent[i].is_none()
    }
}

pub fn etree_build(a: &CscMatrix, mode: EtreeMode) -> EliminationTree {
    assert!(a.is_square(), "etree_build needs a square matrix");
    let n = a.ncols();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    let link = |i: usize, k: usize, parent: &mut [usize], ancestor: &mut [usize]| {
        let mut r = i;
        while r != NONE && r < k {
            let next = ancestor[r];
            ancestor[r] = k;
            if next == NONE {
                parent[r] = k;
            }
            r = next;
        }
    };
    match mode {
        EtreeMode::PatternSymmetric => {
            let g = Graph::from_symmetrized(a);
            for k in 0..n {
                for &i in g.neighbors(k) {
                    if i < k {
                        link(i, k, &mut parent, &mut ancestor);
                    }
                }
            }
        }
        EtreeMode::ColAAt => {
            // Column elimination tree of Aᵀ, i.e. the etree of A·Aᵀ.
            let at = a.transpose();
            let mut prev = vec![NONE; n];
            for k in 0..n {
                for &c in at.col_rows(k) {
                    link(prev[c], k, &mut parent, &mut ancestor);
                    prev[c] = k;
                }
            }
        }
    }
    EliminationTree {
        parent: parent.into_iter().map(|p| (p != NONE).then_some(p)).collect(),
    }
}

/// Exact factor structure of a stacked panel `[A_ii; A_oi]` under diagonal
/// pivoting (no row interchanges). The diagonal is always assumed present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternLu {
    /// Strictly lower `L` entries per column within the diagonal block.
    pub lcounts: Vec<usize>,
    /// `U` entries per column, diagonal included.
    pub ucounts: Vec<usize>,
    /// Strictly upper `U` entries per row.
    pub urow_counts: Vec<usize>,
    /// Off-diagonal `L` rows per column, counted from `m`, sorted.
    pub l_off: Vec<Vec<usize>>,
    /// Largest diagonal-block row of `L` per column (the column itself when
    /// the column is empty).
    pub l_max: Vec<usize>,
}

impl PatternLu {
    pub fn l_nnz(&self) -> usize {
        self.lcounts.iter().sum()
    }

    pub fn u_nnz(&self) -> usize {
        self.ucounts.iter().sum()
    }

    pub fn l_off_nnz(&self) -> usize {
        self.l_off.iter().map(Vec::len).sum()
    }

    /// Multiply-add count of the elimination.
    pub fn flops(&self) -> u64 {
        self.lcounts
            .iter()
            .zip(&self.urow_counts)
            .map(|(&l, &u)| (l as u64) * (u as u64))
            .sum()
    }
}

struct Growing<'a> {
    ptr: &'a [usize],
    rows: &'a [usize],
}

impl ColumnGraph for Growing<'_> {
    fn successors(&self, node: usize) -> Option<&[usize]> {
        (node + 1 < self.ptr.len()).then(|| &self.rows[self.ptr[node]..self.ptr[node + 1]])
    }
}

pub fn pattern_lu(panel: &CscMatrix, m: usize) -> PatternLu {
    assert!(panel.ncols() == m && panel.nrows() >= m);
    let mut spa = SparseAccumulator::new(panel.nrows());
    let mut ptr = vec![0usize];
    let mut rows: Vec<usize> = Vec::new();
    let mut lcounts = vec![0; m];
    let mut ucounts = vec![0; m];
    let mut urow_counts = vec![0; m];
    let mut l_off = vec![Vec::new(); m];
    let mut l_max = vec![0; m];
    let mut seeds = Vec::new();
    let mut col = Vec::new();
    for k in 0..m {
        seeds.clear();
        seeds.extend_from_slice(panel.col_rows(k));
        seeds.push(k);
        spa.reset();
        spa.reach(&Growing { ptr: &ptr, rows: &rows }, &seeds);
        col.clear();
        for &i in spa.pattern() {
            if i < k {
                ucounts[k] += 1;
                urow_counts[i] += 1;
            } else if i > k {
                col.push(i);
            }
        }
        ucounts[k] += 1;
        col.sort_unstable();
        let split = col.partition_point(|&i| i < m);
        lcounts[k] = split;
        l_max[k] = if split > 0 { col[split - 1] } else { k };
        l_off[k] = col[split..].iter().map(|&i| i - m).collect();
        rows.extend_from_slice(&col);
        ptr.push(rows.len());
    }
    PatternLu {
        lcounts,
        ucounts,
        urow_counts,
        l_off,
        l_max,
    }
}
