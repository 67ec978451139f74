//! Orderings, structure prediction and work assignment, computed once per
//! sparsity pattern.

mod btf;
mod coarse;
mod nd;
mod pattern;
mod schedule;

use serde::{Deserialize, Serialize};

pub use btf::{fine_btf_symbolic, lpt_partition, BtfBlockSymbolic};
pub use coarse::{coarse_decompose, coarse_single, BlockKind, CoarsePlan};
pub use nd::{nd_leaf_symbolic, nd_symbolic, nd_upper_symbolic, BlockEst, ColumnEst, NdSymbolic, RowRangeBound, Span};
pub use pattern::{etree_build, pattern_lu, EliminationTree, EtreeMode, PatternLu};
pub use schedule::{
    build_dependency_tree, build_schedule, nwindows, simulate, CellKey, DepNode, DependencyTree, Schedule, SimReport,
    Task, TaskKind,
};

pub(crate) use nd::stack_panel;

use crate::error::{Error, Result};
use crate::ordering::{amd_order, mwcm, nd_order, NdTree};
use crate::sparse::{extract_blocks_indexed, permute, permute_indexed, BlockedMatrix, CscMatrix, Permutation};

/// Tuning knobs for analysis and factorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Options {
    /// Worker threads for the numeric phase.
    pub threads: usize,
    /// Leaves of the ND tree. Defaults to `threads` rounded down to a power
    /// of two; fixing it makes factors identical for any thread count.
    pub nd_leaves: Option<usize>,
    /// Threshold for keeping the diagonal pivot, in `[0, 1]`.
    pub pivot_tol: f64,
    /// Diagonal blocks larger than this use nested dissection. Defaults to
    /// `max(1000, 2 * threads)`.
    pub nd_threshold: Option<usize>,
    /// When false the whole matrix is treated as one ND block.
    pub use_btf: bool,
    pub etree_mode: EtreeMode,
    /// Separator columns per synchronization step.
    pub window: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            threads: 1,
            nd_leaves: None,
            pivot_tol: 0.001,
            nd_threshold: None,
            use_btf: true,
            etree_mode: EtreeMode::PatternSymmetric,
            window: 64,
        }
    }
}

impl Options {
    pub fn with_threads(threads: usize) -> Self {
        Self {
            threads,
            ..Self::default()
        }
    }

    pub fn leaves(&self) -> usize {
        self.nd_leaves.unwrap_or_else(|| floor_pow2(self.threads.max(1)))
    }

    pub fn threshold(&self) -> usize {
        self.nd_threshold.unwrap_or_else(|| 1000.max(2 * self.threads))
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidOptions(m));
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.pivot_tol) {
            return bad(format!("pivot tolerance {} outside [0, 1]", self.pivot_tol));
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if let Some(l) = self.nd_leaves {
            if l == 0 || !l.is_power_of_two() {
                return bad(format!("ND leaf count {l} is not a power of two"));
            }
        }
        Ok(())
    }
}

pub(crate) fn floor_pow2(x: usize) -> usize {
    if x == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - x.leading_zeros())
    }
}

/// A block's pattern together with the position of each entry in the
/// values array of the original matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedBlock {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub src: Vec<usize>,
}

impl MappedBlock {
    fn new(block: &CscMatrix, src: Vec<usize>) -> Self {
        Self {
            nrows: block.nrows(),
            ncols: block.ncols(),
            col_ptr: block.col_ptr().to_vec(),
            row_idx: block.row_idx().to_vec(),
            src,
        }
    }

    pub fn nnz(&self) -> usize {
        self.src.len()
    }

    /// The block filled with values taken from the original matrix.
    pub fn gather(&self, values: &[f64]) -> CscMatrix {
        let vals = self.src.iter().map(|&s| values[s]).collect();
        CscMatrix::from_raw(self.nrows, self.ncols, self.col_ptr.clone(), self.row_idx.clone(), vals)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtfBlockPlan {
    /// Index of the coarse block.
    pub block: usize,
    pub offset: usize,
    pub sym: BtfBlockSymbolic,
    /// Diagonal block, already in fill-reducing order.
    pub a: MappedBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdBlockPlan {
    pub block: usize,
    pub offset: usize,
    pub size: usize,
    /// Row matching of the block.
    pub perm_m2: Permutation,
    /// Dissection followed by AMD inside each tree node.
    pub perm_nd: Permutation,
    pub tree: NdTree,
    /// 2D blocks `(row node, col node, pattern)` in block-column order.
    pub blocks: Vec<(usize, usize, MappedBlock)>,
    pub sym: NdSymbolic,
    pub deps: DependencyTree,
    pub schedule: Schedule,
}

impl NdBlockPlan {
    /// The block's pattern as a [`BlockedMatrix`] over the tree nodes, with
    /// values gathered from `values`.
    pub fn blocked(&self, values: &[f64]) -> BlockedMatrix {
        let off = self.tree.offsets();
        let mut out = BlockedMatrix::empty(off.clone(), off).expect("tree offsets are valid");
        for (r, c, m) in &self.blocks {
            out.insert(*r, *c, m.gather(values)).expect("block shape matches the tree");
        }
        out
    }

    pub fn nleaves(&self) -> usize {
        self.tree.nleaves()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockSlot {
    Btf(usize),
    Nd(usize),
}

/// Everything the numeric phase needs that depends only on the pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicPlan {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub options: Options,
    pub coarse: CoarsePlan,
    /// Composed row permutation: matching, BTF, then per-block orderings.
    pub row_perm: Permutation,
    pub col_perm: Permutation,
    /// Coarse blocks above the diagonal as `(block row, block col, pattern)`.
    pub offdiag: Vec<(usize, usize, MappedBlock)>,
    pub slots: Vec<BlockSlot>,
    pub btf_blocks: Vec<BtfBlockPlan>,
    pub nd_blocks: Vec<NdBlockPlan>,
    /// Fine-BTF blocks per worker (indices into `btf_blocks`).
    pub btf_groups: Vec<Vec<usize>>,
}

const MAGIC: &[u8; 8] = b"HBLUPLAN";
const VERSION: u32 = 1;

impl SymbolicPlan {
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn btf_block_count(&self) -> usize {
        self.coarse.nblocks()
    }

    /// Percentage of rows inside fine-BTF blocks.
    pub fn btf_pct(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        100.0 * self.coarse.btf_rows() as f64 / self.n as f64
    }

    /// Planned `L` + `U` entries over all diagonal blocks.
    pub fn estimated_factor_nnz(&self) -> usize {
        self.btf_blocks.iter().map(|b| b.sym.l_nnz() + b.sym.u_nnz()).sum::<usize>()
            + self.nd_blocks.iter().map(|b| b.sym.total()).sum::<usize>()
    }

    pub fn matches_pattern(&self, a: &CscMatrix) -> bool {
        a.nrows() == self.n && a.ncols() == self.n && a.col_ptr() == self.col_ptr && a.row_idx() == self.row_idx
    }

    pub fn check_pattern(&self, a: &CscMatrix) -> Result<()> {
        if self.matches_pattern(a) {
            return Ok(());
        }
        Err(Error::PatternMismatch(if a.nrows() != self.n || a.ncols() != self.n {
            format!("matrix is {}x{}, plan expects {}x{}", a.nrows(), a.ncols(), self.n, self.n)
        } else if a.nnz() != self.nnz() {
            format!("matrix has {} entries, plan expects {}", a.nnz(), self.nnz())
        } else {
            "row indices differ from the analysed pattern".into()
        }))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&VERSION.to_le_bytes());
        bincode::serialize_into(&mut out, self).expect("plan serializes");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(Error::InvalidPlan("missing magic header".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::InvalidPlan(format!("version {version}, expected {VERSION}")));
        }
        bincode::deserialize(&bytes[12..]).map_err(|e| Error::InvalidPlan(e.to_string()))
    }
}

/// Square diagonal sub-block `a[r, r]`.
fn diagonal_block(a: &CscMatrix, r: std::ops::Range<usize>) -> CscMatrix {
    let mut ptr = vec![0usize];
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    for j in r.clone() {
        let (ri, vi) = a.col(j);
        let lo = ri.partition_point(|&i| i < r.start);
        let hi = ri.partition_point(|&i| i < r.end);
        rows.extend(ri[lo..hi].iter().map(|&i| i - r.start));
        vals.extend_from_slice(&vi[lo..hi]);
        ptr.push(rows.len());
    }
    CscMatrix::from_raw(r.len(), r.len(), ptr, rows, vals)
}

struct NdLocal {
    perm_m2: Permutation,
    perm_nd: Permutation,
    tree: NdTree,
}

fn order_nd_block(b: &CscMatrix, leaves: usize) -> Result<NdLocal> {
    let m = b.ncols();
    let perm_m2 = mwcm(b)?;
    let id = Permutation::identity(m);
    let b2 = permute(b, &perm_m2, &id)?;
    let leaves = leaves.min(floor_pow2(m.max(1)));
    let (s, tree) = nd_order(&b2, leaves)?;
    let b3 = permute(&b2, &s, &s)?;
    let mut fwd: Vec<usize> = (0..m).collect();
    for node in tree.nodes() {
        if node.len() > 2 {
            let sub = diagonal_block(&b3, node.start..node.end);
            let p = amd_order(&sub);
            for (l, &f) in p.forward().iter().enumerate() {
                fwd[node.start + l] = node.start + f;
            }
        }
    }
    let t = Permutation::from_forward(fwd)?;
    Ok(NdLocal {
        perm_m2,
        perm_nd: s.then(&t),
        tree,
    })
}

/// Runs the whole symbolic phase.
pub fn analyze(a: &CscMatrix, options: &Options) -> Result<SymbolicPlan> {
    options.validate()?;
    if !a.is_square() {
        return Err(Error::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    let n = a.ncols();
    let coarse = if options.use_btf {
        coarse_decompose(a, options.threshold())?
    } else {
        coarse_single(n)
    };
    let rowc = coarse.row_perm();
    let colc = coarse.perm_btf.clone();
    let m1 = permute(a, &rowc, &colc)?;

    let mut row_local: Vec<usize> = (0..n).collect();
    let mut col_local: Vec<usize> = (0..n).collect();
    let mut btf_syms = Vec::new();
    let mut nd_locals = Vec::new();
    for b in 0..coarse.nblocks() {
        let r = coarse.block_range(b);
        let off = r.start;
        match coarse.kinds[b] {
            BlockKind::FineBtf => {
                let sym = if r.len() == 1 {
                    btf::analyze_block(&CscMatrix::identity(1))
                } else {
                    btf::analyze_block(&diagonal_block(&m1, r.clone()))
                };
                for (l, &f) in sym.perm_amd.forward().iter().enumerate() {
                    row_local[off + l] = off + f;
                    col_local[off + l] = off + f;
                }
                btf_syms.push((b, sym));
            }
            BlockKind::FineNd => {
                let loc = order_nd_block(&diagonal_block(&m1, r.clone()), options.leaves())?;
                let rows = loc.perm_m2.then(&loc.perm_nd);
                for l in 0..r.len() {
                    row_local[off + l] = off + rows.forward()[l];
                    col_local[off + l] = off + loc.perm_nd.forward()[l];
                }
                nd_locals.push((b, loc));
            }
        }
    }
    let row_perm = rowc.then(&Permutation::from_forward(row_local)?);
    let col_perm = colc.then(&Permutation::from_forward(col_local)?);
    let (mp, map) = permute_indexed(a, &row_perm, &col_perm)?;
    let (blocked, maps) = extract_blocks_indexed(&mp, &coarse.block_offsets, &coarse.block_offsets)?;

    let mut diag: Vec<Option<MappedBlock>> = vec![None; coarse.nblocks()];
    let mut offdiag = Vec::new();
    for bj in 0..blocked.nblocks_col() {
        for ((bi, blk), src) in blocked.block_col(bj).iter().zip(&maps[bj]) {
            let src: Vec<usize> = src.iter().map(|&s| map[s]).collect();
            let mb = MappedBlock::new(blk, src);
            if *bi == bj {
                diag[bj] = Some(mb);
            } else {
                debug_assert!(*bi < bj, "coarse structure is block upper triangular");
                offdiag.push((*bi, bj, mb));
            }
        }
    }

    let mut slots = vec![BlockSlot::Btf(0); coarse.nblocks()];
    let mut btf_blocks = Vec::with_capacity(btf_syms.len());
    for (b, sym) in btf_syms {
        let r = coarse.block_range(b);
        let a = diag[b].take().unwrap_or_else(|| MappedBlock::new(&CscMatrix::zeros(r.len(), r.len()), Vec::new()));
        slots[b] = BlockSlot::Btf(btf_blocks.len());
        btf_blocks.push(BtfBlockPlan {
            block: b,
            offset: r.start,
            sym,
            a,
        });
    }
    let mut nd_blocks = Vec::with_capacity(nd_locals.len());
    for (b, loc) in nd_locals {
        let r = coarse.block_range(b);
        let dm = diag[b].take().expect("ND block has a zero-free diagonal");
        let dblock = CscMatrix::from_raw(dm.nrows, dm.ncols, dm.col_ptr, dm.row_idx, vec![0.0; dm.src.len()]);
        let off = loc.tree.offsets();
        let (grid, gmaps) = extract_blocks_indexed(&dblock, &off, &off)?;
        let mut blocks = Vec::new();
        for (bj, col_maps) in gmaps.iter().enumerate() {
            for ((bi, blk), src) in grid.block_col(bj).iter().zip(col_maps) {
                let src = src.iter().map(|&p| dm.src[p]).collect();
                blocks.push((*bi, bj, MappedBlock::new(blk, src)));
            }
        }
        let sym = nd_symbolic(&grid, &loc.tree, options.etree_mode);
        let deps = build_dependency_tree(&loc.tree, loc.tree.nleaves())?;
        let schedule = build_schedule(&loc.tree, &deps, options.window);
        slots[b] = BlockSlot::Nd(nd_blocks.len());
        nd_blocks.push(NdBlockPlan {
            block: b,
            offset: r.start,
            size: r.len(),
            perm_m2: loc.perm_m2,
            perm_nd: loc.perm_nd,
            tree: loc.tree,
            blocks,
            sym,
            deps,
            schedule,
        });
    }

    let costs: Vec<u64> = btf_blocks.iter().map(|b| b.sym.cost()).collect();
    let btf_groups = lpt_partition(&costs, options.threads);
    Ok(SymbolicPlan {
        n,
        col_ptr: a.col_ptr().to_vec(),
        row_idx: a.row_idx().to_vec(),
        options: options.clone(),
        coarse,
        row_perm,
        col_perm,
        offdiag,
        slots,
        btf_blocks,
        nd_blocks,
        btf_groups,
    })
}
