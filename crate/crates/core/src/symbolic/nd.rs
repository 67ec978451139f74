//! Symbolic analysis of a nested-dissection block.
//!
//! Leaves get exact structure (no-pivot elimination of the stacked leaf
//! panel). Upper blocks of leaves are counted by walking the leaf's
//! elimination tree. Separator blocks get interval bounds: a product term
//! `L_rd · U_dj(c)` is taken to be dense between the smallest and largest
//! row that any selected column of `L_rd` can hold.

use serde::{Deserialize, Serialize};

use super::pattern::{etree_build, pattern_lu, EliminationTree, EtreeMode};
use crate::ordering::NdTree;
use crate::sparse::{BlockedMatrix, CscMatrix};

pub type Span = Option<(usize, usize)>;

#[inline]
pub(crate) fn join(a: Span, b: Span) -> Span {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
    }
}

#[inline]
fn span_of(rows: &[usize]) -> Span {
    Some((*rows.first()?, *rows.last()?))
}

/// Per-column `(min_row, max_row)` enclosing every nonzero of a factor
/// column, or `None` for an empty column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowRangeBound(pub Vec<Span>);

impl RowRangeBound {
    pub fn empty(ncols: usize) -> Self {
        Self(vec![None; ncols])
    }

    pub fn get(&self, c: usize) -> Span {
        self.0[c]
    }

    /// Hull over the columns `lo..=hi`.
    pub fn hull(&self, lo: usize, hi: usize) -> Span {
        self.0[lo..=hi].iter().fold(None, |acc, &s| join(acc, s))
    }

    /// True when `rows` lies inside the bound of column `c`.
    pub fn encloses(&self, c: usize, rows: &[usize]) -> bool {
        match (span_of(rows), self.0[c]) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, b)), Some((lo, hi))) => lo <= a && b <= hi,
        }
    }
}

/// Estimated structure of one 2D factor block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockEst {
    pub counts: Vec<usize>,
    pub range: RowRangeBound,
}

impl BlockEst {
    fn new(ncols: usize) -> Self {
        Self {
            counts: vec![0; ncols],
            range: RowRangeBound::empty(ncols),
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Estimates for the blocks in the column range of one tree node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnEst {
    /// `U_kj` for every descendant `k`, ascending.
    pub upper: Vec<(usize, BlockEst)>,
    /// Strictly lower part of the diagonal factor.
    pub diag_l: BlockEst,
    /// Upper part of the diagonal factor, diagonal included.
    pub diag_u: BlockEst,
    /// `L_aj` for every ancestor `a`, nearest first.
    pub lower: Vec<(usize, BlockEst)>,
}

impl ColumnEst {
    pub fn upper_of(&self, k: usize) -> Option<&BlockEst> {
        self.upper.iter().find(|e| e.0 == k).map(|e| &e.1)
    }

    pub fn lower_of(&self, a: usize) -> Option<&BlockEst> {
        self.lower.iter().find(|e| e.0 == a).map(|e| &e.1)
    }

    pub fn total(&self) -> usize {
        self.diag_l.total()
            + self.diag_u.total()
            + self.upper.iter().map(|e| e.1.total()).sum::<usize>()
            + self.lower.iter().map(|e| e.1.total()).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdSymbolic {
    /// Elimination tree of each leaf's diagonal block (`None` for
    /// separators).
    pub etrees: Vec<Option<EliminationTree>>,
    /// Indexed by tree node.
    pub cols: Vec<ColumnEst>,
}

impl NdSymbolic {
    pub fn total(&self) -> usize {
        self.cols.iter().map(ColumnEst::total).sum()
    }
}

/// Stacks the diagonal block of node `j` over the blocks of its ancestors.
/// Returns the panel and the row offset of each ancestor inside it.
pub(crate) fn stack_panel(a: &BlockedMatrix, tree: &NdTree, j: usize) -> (CscMatrix, Vec<(usize, usize)>) {
    let m = a.col_range(j).len();
    let mut offs = Vec::new();
    let mut nrows = m;
    for anc in tree.ancestors(j) {
        offs.push((anc, nrows));
        nrows += a.row_range(anc).len();
    }
    let mut ptr = vec![0usize];
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    let diag = a.get(j, j);
    let offs_blocks: Vec<(usize, &CscMatrix)> =
        offs.iter().filter_map(|&(anc, o)| a.get(anc, j).map(|b| (o, b))).collect();
    for c in 0..m {
        if let Some(d) = diag {
            let (r, v) = d.col(c);
            rows.extend_from_slice(r);
            vals.extend_from_slice(v);
        }
        for &(o, b) in &offs_blocks {
            let (r, v) = b.col(c);
            rows.extend(r.iter().map(|&i| i + o));
            vals.extend_from_slice(v);
        }
        ptr.push(rows.len());
    }
    (CscMatrix::from_raw(nrows, m, ptr, rows, vals), offs)
}

/// Exact structure of a leaf: diagonal factor counts, `L_ai` counts with
/// their row bounds (`lest`), and the leaf's elimination tree.
pub fn nd_leaf_symbolic(
    a: &BlockedMatrix,
    tree: &NdTree,
    leaf: usize,
    mode: EtreeMode,
) -> (BlockEst, BlockEst, Vec<(usize, BlockEst)>, EliminationTree, Vec<usize>) {
    let m = a.col_range(leaf).len();
    let (panel, offs) = stack_panel(a, tree, leaf);
    let pat = pattern_lu(&panel, m);
    let mut diag_l = BlockEst::new(m);
    let mut diag_u = BlockEst::new(m);
    for c in 0..m {
        diag_l.counts[c] = pat.lcounts[c];
        if pat.lcounts[c] > 0 {
            diag_l.range.0[c] = Some((c + 1, pat.l_max[c]));
        }
        diag_u.counts[c] = pat.ucounts[c];
    }
    let mut lower: Vec<(usize, BlockEst)> = offs.iter().map(|&(anc, _)| (anc, BlockEst::new(m))).collect();
    for c in 0..m {
        for &r in &pat.l_off[c] {
            // Rows of the panel past the diagonal block, shifted by `m`.
            let k = offs.partition_point(|&(_, o)| o <= r + m) - 1;
            let local = r + m - offs[k].1;
            let e = &mut lower[k].1;
            e.counts[c] += 1;
            e.range.0[c] = join(e.range.0[c], Some((local, local)));
        }
    }
    let etree = etree_build(a.get(leaf, leaf).unwrap_or(&CscMatrix::zeros(m, m)), mode);
    (diag_l, diag_u, lower, etree, pat.l_max)
}

/// Upper bound on the structure of `U_ki = L_ii⁻¹ A_ki` by climbing the
/// leaf's elimination tree from every nonzero of each column.
pub fn nd_upper_symbolic(a_ki: &CscMatrix, etree: &EliminationTree) -> BlockEst {
    let n = a_ki.ncols();
    let mut est = BlockEst::new(n);
    let mut mark = vec![usize::MAX; etree.len()];
    for c in 0..n {
        let mut span = None;
        let mut count = 0;
        for &r in a_ki.col_rows(c) {
            let mut v = Some(r);
            while let Some(x) = v {
                if mark[x] == c {
                    break;
                }
                mark[x] = c;
                count += 1;
                span = join(span, Some((x, x)));
                v = etree.parent[x];
            }
        }
        est.counts[c] = count;
        est.range.0[c] = span;
    }
    est
}

/// Rows reachable from `lo..=hi` through columns whose largest row is
/// `l_max[t]`, restricted to columns below `limit`.
fn closure_max(l_max: &[usize], lo: usize, hi: usize, limit: usize) -> usize {
    let mut cur = hi;
    let mut t = lo;
    while t <= cur && t < limit {
        cur = cur.max(l_max[t]);
        t += 1;
    }
    cur
}

struct Builder<'a> {
    a: &'a BlockedMatrix,
    tree: &'a NdTree,
    cols: Vec<ColumnEst>,
    /// Per node: largest estimated `L` row of each diagonal column.
    l_max: Vec<Vec<usize>>,
    etrees: Vec<Option<EliminationTree>>,
}

impl Builder<'_> {
    fn lower_range(&self, r: usize, d: usize) -> Option<&RowRangeBound> {
        self.cols[d].lower_of(r).map(|e| &e.range)
    }

    /// Hull of `L_rd · U_dj(c)` when `U_dj(c)` spans `u`.
    fn product(&self, r: usize, d: usize, u: Span) -> Span {
        let (lo, hi) = u?;
        self.lower_range(r, d)?.hull(lo, hi)
    }

    fn separator(&mut self, j: usize) {
        let tree = self.tree;
        let m = self.a.col_range(j).len();
        let desc: Vec<usize> = tree.descendants(j).collect();
        let anc: Vec<usize> = tree.ancestors(j).collect();
        let mut upper: Vec<(usize, BlockEst)> = desc.iter().map(|&k| (k, BlockEst::new(m))).collect();
        let mut diag_l = BlockEst::new(m);
        let mut diag_u = BlockEst::new(m);
        let mut lower: Vec<(usize, BlockEst)> = anc.iter().map(|&x| (x, BlockEst::new(m))).collect();
        let mut lmax_j = vec![0usize; m];
        let mut diag_lo = vec![0usize; m];

        let block_span = |r: usize, c: usize| self.a.get(r, j).and_then(|b| span_of(b.col_rows(c)));

        // Leaf upper blocks do not depend on the column: climb the etree.
        for (idx, &k) in desc.iter().enumerate() {
            if tree.node(k).is_leaf() {
                let etree = self.etrees[k].as_ref().expect("leaf etree");
                upper[idx].1 = match self.a.get(k, j) {
                    Some(b) => nd_upper_symbolic(b, etree),
                    None => BlockEst::new(m),
                };
            }
        }

        for c in 0..m {
            for idx in 0..desc.len() {
                let k = desc[idx];
                if tree.node(k).is_leaf() {
                    continue;
                }
                let mut h = block_span(k, c);
                for (e, &d) in desc.iter().enumerate().take(idx) {
                    if tree.contains(k, d) {
                        h = join(h, self.product(k, d, upper[e].1.range.0[c]));
                    }
                }
                if let Some((lo, hi)) = h {
                    let hi = closure_max(&self.l_max[k], lo, hi, usize::MAX);
                    upper[idx].1.range.0[c] = Some((lo, hi));
                    upper[idx].1.counts[c] = hi - lo + 1;
                }
            }

            let mut h = join(block_span(j, c), Some((c, c)));
            for (e, &d) in desc.iter().enumerate() {
                h = join(h, self.product(j, d, upper[e].1.range.0[c]));
            }
            let (lo, hi) = h.unwrap();
            let cur = closure_max(&lmax_j, lo, hi, c);
            let ulo = lo.min(c);
            diag_lo[c] = ulo;
            diag_u.counts[c] = c - ulo + 1;
            diag_u.range.0[c] = Some((ulo, c));
            if cur > c {
                diag_l.counts[c] = cur - c;
                diag_l.range.0[c] = Some((c + 1, cur));
            }
            lmax_j[c] = cur.max(c);

            for (ai, &x) in anc.iter().enumerate() {
                let mut h = block_span(x, c);
                for (e, &d) in desc.iter().enumerate() {
                    h = join(h, self.product(x, d, upper[e].1.range.0[c]));
                }
                if ulo < c {
                    h = join(h, lower[ai].1.range.hull(ulo, c - 1));
                }
                if let Some((lo, hi)) = h {
                    lower[ai].1.range.0[c] = Some((lo, hi));
                    lower[ai].1.counts[c] = hi - lo + 1;
                }
            }
        }
        self.cols[j] = ColumnEst {
            upper,
            diag_l,
            diag_u,
            lower,
        };
        self.l_max[j] = lmax_j;
    }

}

/// Full symbolic pass over an ND block whose pattern is split into the
/// tree's 2D blocks: leaves first, then separators by increasing height.
pub fn nd_symbolic(a: &BlockedMatrix, tree: &NdTree, mode: EtreeMode) -> NdSymbolic {
    let n = tree.len();
    let mut b = Builder {
        a,
        tree,
        cols: vec![ColumnEst::default(); n],
        l_max: vec![Vec::new(); n],
        etrees: vec![None; n],
    };
    for leaf in tree.leaves() {
        let (diag_l, diag_u, lower, etree, l_max) = nd_leaf_symbolic(a, tree, leaf, mode);
        b.cols[leaf] = ColumnEst {
            upper: Vec::new(),
            diag_l,
            diag_u,
            lower,
        };
        b.l_max[leaf] = l_max;
        b.etrees[leaf] = Some(etree);
    }
    let max_h = tree.nodes().iter().map(|x| x.height).max().unwrap_or(0);
    for h in 1..=max_h {
        nd_separator_symbolic(&mut b, h);
    }
    NdSymbolic {
        etrees: b.etrees,
        cols: b.cols,
    }
}

/// Interval estimates for every separator at `height`; all lower heights
/// must already be done.
fn nd_separator_symbolic(b: &mut Builder<'_>, height: usize) {
    for j in b.tree.nodes_at_height(height) {
        b.separator(j);
    }
}
