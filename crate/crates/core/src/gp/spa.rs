use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

pub(crate) const NONE: usize = usize::MAX;

/// A sparse column as parallel index/value lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseCol {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseCol {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, f64)]) -> Self {
        Self {
            idx: pairs.iter().map(|p| p.0).collect(),
            val: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn clear(&mut self) {
        self.idx.clear();
        self.val.clear();
    }

    pub fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for (i, v) in self.iter() {
            d[i] += v;
        }
        d
    }
}

/// Directed graph whose edges are the off-diagonal entries of the columns of
/// a lower factor.
pub trait ColumnGraph {
    /// Out-neighbours of `node`, or `None` if the node has no column yet.
    fn successors(&self, node: usize) -> Option<&[usize]>;
}

/// A unit lower triangular factor stored in step (pivoted) order; the
/// diagonal may be stored or implicit.
pub struct StepLower<'a>(pub &'a CscMatrix);

impl ColumnGraph for StepLower<'_> {
    fn successors(&self, node: usize) -> Option<&[usize]> {
        if node >= self.0.ncols() {
            return None;
        }
        let rows = self.0.col_rows(node);
        // Skip a stored diagonal.
        let k = rows.partition_point(|&r| r <= node);
        Some(&rows[k..])
    }
}

/// A partially built lower factor whose rows still carry their original
/// labels; `pinv[row]` is the step at which `row` was chosen as pivot.
pub(crate) struct PivotedLower<'a> {
    pub ptr: &'a [usize],
    pub rows: &'a [usize],
    pub pinv: &'a [usize],
}

impl ColumnGraph for PivotedLower<'_> {
    #[inline]
    fn successors(&self, node: usize) -> Option<&[usize]> {
        match self.pinv.get(node) {
            Some(&s) if s != NONE => Some(&self.rows[self.ptr[s]..self.ptr[s + 1]]),
            _ => None,
        }
    }
}

/// Operation counters used to check that work tracks the factor size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Edges traversed by depth-first searches.
    pub dfs_edges: u64,
    /// Multiply-add pairs in triangular solves.
    pub flops: u64,
    /// Entries visited while scattering, gathering and pivot searching.
    pub touched: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.dfs_edges + self.flops + self.touched
    }

    pub fn add(&mut self, o: &OpCounts) {
        self.dfs_edges += o.dfs_edges;
        self.flops += o.flops;
        self.touched += o.touched;
    }
}

/// Dense work column plus its nonzero pattern. Marks use a generation
/// counter so nothing is cleared in O(n) between columns.
#[derive(Debug, Clone)]
pub struct SparseAccumulator {
    values: Vec<f64>,
    pattern: Vec<usize>,
    mark: Vec<u32>,
    generation: u32,
    stack: Vec<(usize, usize)>,
    post: Vec<usize>,
    pub ops: OpCounts,
}

impl SparseAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            pattern: Vec::new(),
            mark: vec![0; n],
            generation: 1,
            stack: Vec::new(),
            post: Vec::new(),
            ops: OpCounts::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Zeroes the current pattern and starts a new generation.
    pub fn reset(&mut self) {
        for &i in &self.pattern {
            self.values[i] = 0.0;
        }
        self.pattern.clear();
        self.bump();
    }

    fn bump(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.mark.fill(0);
            self.generation = 1;
        }
    }

    /// Adds `vals` into the dense column. Rows must be part of the seeds of
    /// the following [`SparseAccumulator::reach`].
    pub fn scatter(&mut self, rows: &[usize], vals: &[f64]) {
        for (&i, &v) in rows.iter().zip(vals) {
            self.values[i] += v;
        }
        self.ops.touched += rows.len() as u64;
    }

    pub fn pattern(&self) -> &[usize] {
        &self.pattern
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sets the pattern to every node reachable from `seeds` in `g`, in
    /// topological order (each node precedes the nodes it reaches).
    pub fn reach<G: ColumnGraph>(&mut self, g: &G, seeds: &[usize]) {
        self.post.clear();
        let gen = self.generation;
        for &s in seeds {
            if self.mark[s] == gen {
                continue;
            }
            self.mark[s] = gen;
            self.stack.push((s, 0));
            while let Some(&(v, k)) = self.stack.last() {
                let succ = g.successors(v).unwrap_or(&[]);
                let mut pushed = false;
                let mut p = k;
                while p < succ.len() {
                    let w = succ[p];
                    p += 1;
                    self.ops.dfs_edges += 1;
                    if self.mark[w] != gen {
                        self.mark[w] = gen;
                        self.stack.last_mut().unwrap().1 = p;
                        self.stack.push((w, 0));
                        pushed = true;
                        break;
                    }
                }
                if !pushed {
                    self.stack.pop();
                    self.post.push(v);
                }
            }
        }
        self.pattern.clear();
        self.pattern.extend(self.post.iter().rev());
    }
}

/// All rows reachable from `col_pattern` through the columns of the unit
/// lower factor `l`, in topological order.
pub fn reach(l: &CscMatrix, col_pattern: &[usize]) -> Vec<usize> {
    let mut spa = SparseAccumulator::new(l.nrows());
    spa.reach(&StepLower(l), col_pattern);
    spa.pattern().to_vec()
}

/// Forward substitution with a unit lower factor over the accumulator's
/// (topologically ordered) pattern.
pub fn column_solve(l: &CscMatrix, spa: &mut SparseAccumulator) {
    let g = StepLower(l);
    let pattern = std::mem::take(&mut spa.pattern);
    for &j in &pattern {
        let xj = spa.values[j];
        let Some(rows) = g.successors(j) else { continue };
        let (all_rows, vals) = l.col(j);
        let off = all_rows.len() - rows.len();
        for (&r, &v) in rows.iter().zip(&vals[off..]) {
            spa.values[r] -= v * xj;
        }
        spa.ops.flops += rows.len() as u64;
    }
    spa.pattern = pattern;
}

/// Same as [`column_solve`] for a factor still in original row labels.
pub(crate) fn column_solve_pivoted(
    ptr: &[usize],
    rows: &[usize],
    vals: &[f64],
    pinv: &[usize],
    spa: &mut SparseAccumulator,
) {
    let pattern = std::mem::take(&mut spa.pattern);
    for &i in &pattern {
        let s = match pinv.get(i) {
            Some(&s) if s != NONE => s,
            _ => continue,
        };
        let xi = spa.values[i];
        let r = ptr[s]..ptr[s + 1];
        for (&row, &v) in rows[r.clone()].iter().zip(&vals[r.clone()]) {
            spa.values[row] -= v * xi;
        }
        spa.ops.flops += r.len() as u64;
    }
    spa.pattern = pattern;
}

/// Threshold partial pivoting over the accumulator's pattern.
///
/// Returns `diag_row` when it is a candidate and
/// `|x[diag_row]| >= pivot_tol * max |x|`, otherwise the candidate of largest
/// magnitude (lowest row on ties). `column` only labels the error.
pub fn pivot_select(
    spa: &SparseAccumulator,
    diag_row: Option<usize>,
    pivot_tol: f64,
    column: usize,
    is_candidate: impl Fn(usize) -> bool,
) -> Result<usize> {
    let mut best = NONE;
    let mut best_abs = 0.0f64;
    for &i in spa.pattern() {
        if !is_candidate(i) {
            continue;
        }
        let a = spa.values[i].abs();
        if a > best_abs || (a == best_abs && a > 0.0 && i < best) {
            best = i;
            best_abs = a;
        }
    }
    if best == NONE || best_abs == 0.0 || best_abs.is_nan() {
        return Err(Error::SingularColumn { column });
    }
    if let Some(d) = diag_row {
        if is_candidate(d) && spa.pattern().contains(&d) {
            let a = spa.values[d].abs();
            if a > 0.0 && a >= pivot_tol * best_abs {
                return Ok(d);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lower(n: usize, entries: &[(usize, usize, f64)]) -> CscMatrix {
        let mut d = vec![0.0; n * n];
        for &(i, j, v) in entries {
            d[i * n + j] = v;
        }
        CscMatrix::from_dense(n, n, &d)
    }

    #[test]
    fn reach_without_fill() {
        let l = CscMatrix::identity(6);
        let mut r = reach(&l, &[2, 5]);
        r.sort_unstable();
        assert_eq!(r, vec![2, 5]);
    }

    #[test]
    fn reach_chain_is_topological() {
        let l = lower(3, &[(1, 0, 1.0), (2, 1, 1.0)]);
        assert_eq!(reach(&l, &[0]), vec![0, 1, 2]);
    }

    #[test]
    fn column_solve_hand_case() {
        let l = lower(2, &[(1, 0, 0.5)]);
        let mut spa = SparseAccumulator::new(2);
        spa.reach(&StepLower(&l), &[0, 1]);
        spa.scatter(&[0, 1], &[4.0, 3.0]);
        column_solve(&l, &mut spa);
        assert_eq!(spa.value(0), 4.0);
        assert_eq!(spa.value(1), 3.0 - 0.5 * 4.0);
    }

    #[test]
    fn identity_solve_leaves_column() {
        let l = CscMatrix::identity(3);
        let mut spa = SparseAccumulator::new(3);
        spa.reach(&StepLower(&l), &[0, 2]);
        spa.scatter(&[0, 2], &[1.5, -2.0]);
        column_solve(&l, &mut spa);
        assert_eq!(spa.values(), &[1.5, 0.0, -2.0]);
        spa.reset();
        assert!(spa.values().iter().all(|&v| v == 0.0));
    }

    fn spa_with(vals: &[(usize, f64)], n: usize) -> SparseAccumulator {
        let mut spa = SparseAccumulator::new(n);
        let rows: Vec<usize> = vals.iter().map(|p| p.0).collect();
        let v: Vec<f64> = vals.iter().map(|p| p.1).collect();
        spa.reach(&StepLower(&CscMatrix::identity(n)), &rows);
        spa.scatter(&rows, &v);
        spa
    }

    #[test]
    fn threshold_prefers_diagonal() {
        let spa = spa_with(&[(0, 3.0), (1, 1.0), (2, 1.0)], 3);
        assert_eq!(pivot_select(&spa, Some(0), 0.1, 0, |_| true).unwrap(), 0);
        let spa = spa_with(&[(0, 0.01), (2, 5.0)], 3);
        assert_eq!(pivot_select(&spa, Some(0), 0.1, 0, |_| true).unwrap(), 2);
    }

    #[test]
    fn zero_diagonal_takes_off_diagonal() {
        let spa = spa_with(&[(0, 0.0), (1, 1e-9)], 2);
        assert_eq!(pivot_select(&spa, Some(0), 0.0, 0, |_| true).unwrap(), 1);
    }

    #[test]
    fn all_zero_is_singular() {
        let spa = spa_with(&[(0, 0.0), (1, 0.0)], 2);
        assert!(matches!(
            pivot_select(&spa, Some(0), 0.1, 7, |_| true),
            Err(Error::SingularColumn { column: 7 })
        ));
    }

    #[test]
    fn ties_break_to_lowest_row() {
        let spa = spa_with(&[(3, -2.0), (1, 2.0), (2, 1.0)], 4);
        assert_eq!(pivot_select(&spa, None, 1.0, 0, |_| true).unwrap(), 1);
    }
}
