use serde::{Deserialize, Serialize};

use super::pattern::pattern_lu;
use crate::ordering::amd_order;
use crate::sparse::{permute, CscMatrix, Permutation};

/// Per-block result of the fine-BTF analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtfBlockSymbolic {
    /// Symmetric fill-reducing permutation of the block.
    pub perm_amd: Permutation,
    /// Strictly lower `L` entries per column.
    pub lcounts: Vec<usize>,
    /// `U` entries per column, diagonal included.
    pub ucounts: Vec<usize>,
    pub flops: u64,
}

impl BtfBlockSymbolic {
    pub fn l_nnz(&self) -> usize {
        self.lcounts.iter().sum()
    }

    pub fn u_nnz(&self) -> usize {
        self.ucounts.iter().sum()
    }

    /// Scheduling weight: arithmetic plus the entries that are written.
    pub fn cost(&self) -> u64 {
        self.flops + (self.l_nnz() + self.u_nnz()) as u64
    }
}

/// AMD ordering, exact no-pivot counts and flop estimate for every block,
/// then an LPT split of the blocks into `p` groups.
pub fn fine_btf_symbolic(blocks: &[CscMatrix], p: usize) -> (Vec<BtfBlockSymbolic>, Vec<Vec<usize>>) {
    let syms: Vec<BtfBlockSymbolic> = blocks.iter().map(analyze_block).collect();
    let costs: Vec<u64> = syms.iter().map(BtfBlockSymbolic::cost).collect();
    let groups = lpt_partition(&costs, p);
    (syms, groups)
}

pub(crate) fn analyze_block(b: &CscMatrix) -> BtfBlockSymbolic {
    let n = b.ncols();
    let perm_amd = if n <= 2 { Permutation::identity(n) } else { amd_order(b) };
    let pat = if perm_amd.is_identity() {
        pattern_lu(b, n)
    } else {
        pattern_lu(&permute(b, &perm_amd, &perm_amd).expect("square block"), n)
    };
    BtfBlockSymbolic {
        flops: pat.flops(),
        perm_amd,
        lcounts: pat.lcounts,
        ucounts: pat.ucounts,
    }
}

/// Longest-processing-time greedy: heaviest job first onto the least loaded
/// group. Ties go to the lower index. Each group lists its jobs ascending.
pub fn lpt_partition(costs: &[u64], p: usize) -> Vec<Vec<usize>> {
    let p = p.max(1);
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[b].cmp(&costs[a]).then(a.cmp(&b)));
    let mut load = vec![0u64; p];
    let mut groups = vec![Vec::new(); p];
    for j in order {
        let g = (0..p).min_by_key(|&g| (load[g], g)).unwrap();
        load[g] += costs[j];
        groups[g].push(j);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_blocks() {
        let blocks: Vec<CscMatrix> = (0..6).map(|_| CscMatrix::identity(1)).collect();
        let (syms, groups) = fine_btf_symbolic(&blocks, 3);
        for s in &syms {
            assert_eq!(s.ucounts, vec![1]);
            assert_eq!(s.lcounts, vec![0]);
            assert_eq!(s.flops, 0);
        }
        assert!(groups.iter().all(|g| g.len() == 2));
    }

    #[test]
    fn large_block_sits_alone() {
        let groups = lpt_partition(&[1, 1, 100, 1, 1], 2);
        assert_eq!(groups[0], vec![2]);
        assert_eq!(groups[1], vec![0, 1, 3, 4]);
    }
}
