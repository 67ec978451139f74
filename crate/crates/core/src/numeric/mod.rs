//! Numeric factorization: the independent fine-BTF blocks, the 2D
//! factorization of nested-dissection blocks, and refactorization of
//! matrices that share a pattern.

mod btf;
mod colbuf;
mod nd;
mod sync;

pub use nd::NdFactor;
pub use sync::SyncCell;

use crate::error::{Error, Result};
use crate::gp::{LuBlock, SparseCol, SpmvWorkspace};
use crate::sparse::{BlockedMatrix, CscMatrix, Permutation};
use crate::symbolic::{BlockSlot, SymbolicPlan};

/// Factor of one coarse diagonal block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockFactor {
    /// `None` when the block turned out numerically singular.
    Btf(Option<LuBlock>),
    Nd(NdFactor),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularBlock {
    pub block: usize,
    /// Global (permuted) column where no pivot was found.
    pub column: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FactorStats {
    /// Factor buffers that outgrew their planned capacity.
    pub reallocs: u64,
    pub flops: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorPart {
    L,
    U,
}

/// Planned versus actual entries of one factor block. `row` and `col` are
/// tree nodes for ND blocks and 0 for fine-BTF blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCount {
    pub block: usize,
    pub part: FactorPart,
    pub row: usize,
    pub col: usize,
    pub estimated: usize,
    pub actual: usize,
}

impl BlockCount {
    pub fn within_estimate(&self) -> bool {
        self.actual <= self.estimated
    }
}

/// `P·A·Q = L·U` in block form, reusable for solves and as the template of
/// a refactorization.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericFactor {
    pub n: usize,
    pub row_perm: Permutation,
    pub col_perm: Permutation,
    pub block_offsets: Vec<usize>,
    /// One entry per coarse block.
    pub blocks: Vec<BlockFactor>,
    /// Coarse blocks above the diagonal, copied from the permuted matrix.
    pub offdiag: BlockedMatrix,
    pub singular: Vec<SingularBlock>,
    pub stats: FactorStats,
}

impl NumericFactor {
    pub fn is_singular(&self) -> bool {
        !self.singular.is_empty()
    }

    pub fn nblocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        self.block_offsets[b]..self.block_offsets[b + 1]
    }

    /// Entries of `L` and `U` over the diagonal blocks plus the coarse
    /// off-diagonal blocks (the unit diagonal of `L` is not counted).
    pub fn nnz(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b {
                BlockFactor::Btf(Some(lu)) => lu.nnz(),
                BlockFactor::Btf(None) => 0,
                BlockFactor::Nd(f) => f.nnz(),
            })
            .sum::<usize>()
            + self.offdiag.nnz()
    }

    /// FNV-1a over pivots, patterns and value bits in a fixed order.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv::new();
        for b in &self.blocks {
            match b {
                BlockFactor::Btf(None) => h.word(u64::MAX),
                BlockFactor::Btf(Some(lu)) => {
                    h.perm(&lu.pivot);
                    h.csc(&lu.l);
                    h.csc(&lu.u);
                }
                BlockFactor::Nd(f) => {
                    for p in &f.pivots {
                        h.perm(p);
                    }
                    for (bi, bj, m) in f.l.iter_blocks().chain(f.u.iter_blocks()) {
                        h.word(bi as u64);
                        h.word(bj as u64);
                        h.csc(m);
                    }
                }
            }
        }
        h.0
    }

    /// Actual factor entries against the plan's estimates, per block.
    pub fn count_report(&self, plan: &SymbolicPlan) -> Vec<BlockCount> {
        let mut out = Vec::new();
        for (b, slot) in plan.slots.iter().enumerate() {
            match (slot, &self.blocks[b]) {
                (BlockSlot::Btf(i), BlockFactor::Btf(Some(lu))) => {
                    let sym = &plan.btf_blocks[*i].sym;
                    for (part, estimated, actual) in
                        [(FactorPart::L, sym.l_nnz(), lu.l.nnz()), (FactorPart::U, sym.u_nnz(), lu.u.nnz())]
                    {
                        out.push(BlockCount {
                            block: b,
                            part,
                            row: 0,
                            col: 0,
                            estimated,
                            actual,
                        });
                    }
                }
                (BlockSlot::Nd(i), BlockFactor::Nd(f)) => {
                    let cols = &plan.nd_blocks[*i].sym.cols;
                    let mut push = |part, row, col, estimated, m: Option<&CscMatrix>| {
                        out.push(BlockCount {
                            block: b,
                            part,
                            row,
                            col,
                            estimated,
                            actual: m.map_or(0, CscMatrix::nnz),
                        })
                    };
                    for (j, est) in cols.iter().enumerate() {
                        push(FactorPart::L, j, j, est.diag_l.total(), f.l.get(j, j));
                        push(FactorPart::U, j, j, est.diag_u.total(), f.u.get(j, j));
                        for (a, e) in &est.lower {
                            push(FactorPart::L, *a, j, e.total(), f.l.get(*a, j));
                        }
                        for (k, e) in &est.upper {
                            push(FactorPart::U, *k, j, e.total(), f.u.get(*k, j));
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn word(&mut self, w: u64) {
        for byte in w.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn perm(&mut self, p: &Permutation) {
        for &i in p.forward() {
            self.word(i as u64);
        }
    }

    fn csc(&mut self, m: &CscMatrix) {
        for &p in m.col_ptr() {
            self.word(p as u64);
        }
        for &r in m.row_idx() {
            self.word(r as u64);
        }
        for &v in m.values() {
            self.word(v.to_bits());
        }
    }
}

/// Factors `a`, whose pattern must be the one the plan was built for.
pub fn factor(plan: &SymbolicPlan, a: &CscMatrix) -> Result<NumericFactor> {
    plan.check_pattern(a)?;
    factor_values(plan, a.values())
}

/// Factors the matrix with the plan's pattern and the given values.
///
/// Singular fine-BTF blocks are recorded in [`NumericFactor::singular`] and
/// the remaining blocks are still factored. A singular column inside an ND
/// block aborts the whole factorization with [`Error::SingularColumn`].
pub fn factor_values(plan: &SymbolicPlan, values: &[f64]) -> Result<NumericFactor> {
    if values.len() != plan.nnz() {
        return Err(Error::PatternMismatch(format!(
            "{} values given, pattern has {} entries",
            values.len(),
            plan.nnz()
        )));
    }
    let opts = &plan.options;
    let mut stats = FactorStats::default();
    let mut singular = Vec::new();

    let mut btf = btf::fine_btf_numeric(plan, values).into_iter();
    let mut blocks = Vec::with_capacity(plan.slots.len());
    for (b, slot) in plan.slots.iter().enumerate() {
        match slot {
            BlockSlot::Btf(_) => {
                let o = btf.next().expect("one outcome per fine-BTF block");
                stats.reallocs += o.reallocs;
                stats.flops += o.flops;
                if let Some(column) = o.singular_at {
                    singular.push(SingularBlock { block: b, column });
                }
                blocks.push(BlockFactor::Btf(o.lu));
            }
            BlockSlot::Nd(i) => {
                let p = &plan.nd_blocks[*i];
                let mut s = nd::NdStats::default();
                let f = nd::nd_numeric(p, values, opts.pivot_tol, opts.threads, p.offset, &mut s)?;
                stats.reallocs += s.reallocs;
                stats.flops += s.flops;
                blocks.push(BlockFactor::Nd(f));
            }
        }
    }

    let off = plan.coarse.block_offsets.clone();
    let mut offdiag = BlockedMatrix::empty(off.clone(), off.clone())?;
    for (bi, bj, m) in &plan.offdiag {
        offdiag.insert(*bi, *bj, m.gather(values))?;
    }
    Ok(NumericFactor {
        n: plan.n,
        row_perm: plan.row_perm.clone(),
        col_perm: plan.col_perm.clone(),
        block_offsets: off,
        blocks,
        offdiag,
        singular,
        stats,
    })
}

/// Repeats the numeric phase for new values on the same pattern. All
/// orderings, estimates and the schedule come from `plan`; pivots may
/// differ from those of `previous`.
pub fn refactor(plan: &SymbolicPlan, previous: &NumericFactor, new_values: &[f64]) -> Result<NumericFactor> {
    if previous.n != plan.n || previous.block_offsets != plan.coarse.block_offsets {
        return Err(Error::PatternMismatch("factor was not produced by this plan".into()));
    }
    factor_values(plan, new_values)
}

/// [`refactor`] taking the new matrix; its pattern is checked first.
pub fn refactor_matrix(plan: &SymbolicPlan, previous: &NumericFactor, a: &CscMatrix) -> Result<NumericFactor> {
    plan.check_pattern(a)?;
    refactor(plan, previous, a.values())
}

/// `target − Σ L_b · u_b` with the terms applied in ascending `b`, whatever
/// order they are listed in. Rows of the result are ascending; entries that
/// cancel to zero are kept.
pub fn reduce_contribution(target: &SparseCol, contribs: &[(usize, &CscMatrix, &SparseCol)]) -> SparseCol {
    let nrows = contribs
        .iter()
        .map(|c| c.1.nrows())
        .chain(target.idx.iter().map(|&i| i + 1))
        .max()
        .unwrap_or(0);
    let mut order: Vec<usize> = (0..contribs.len()).collect();
    order.sort_by_key(|&i| contribs[i].0);
    let mut ws = SpmvWorkspace::new(nrows);
    ws.begin(nrows);
    ws.add(&target.idx, &target.val);
    for i in order {
        let (_, l, u) = contribs[i];
        ws.sub_product(l, &u.idx, &u.val);
    }
    let mut out = SparseCol::new();
    ws.finish_into(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_without_contributions_is_identity() {
        let t = SparseCol::from_pairs(&[(0, 1.0), (2, 3.0)]);
        assert_eq!(reduce_contribution(&t, &[]), t);
    }

    #[test]
    fn reduce_single_hand_case() {
        // L = [[1,0,0],[2,1,0],[0,3,1]] (dense), u = (1, 2, 0)
        let l = CscMatrix::from_dense(3, 3, &[1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 3.0, 1.0]);
        let u = SparseCol::from_pairs(&[(0, 1.0), (1, 2.0)]);
        let t = SparseCol::from_pairs(&[(0, 10.0), (1, 10.0), (2, 10.0)]);
        let r = reduce_contribution(&t, &[(0, &l, &u)]);
        assert_eq!(r, SparseCol::from_pairs(&[(0, 9.0), (1, 6.0), (2, 4.0)]));
    }
}
