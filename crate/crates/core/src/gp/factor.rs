use serde::{Deserialize, Serialize};

use super::spa::{column_solve_pivoted, pivot_select, OpCounts, PivotedLower, SparseAccumulator, NONE};
use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, Permutation};

/// `P·A = L·U` for one square block. `L` is strictly lower triangular in
/// pivot-step order (unit diagonal implicit), `U` is upper triangular with
/// its diagonal stored, and `pivot.forward()[row] = step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuBlock {
    pub l: CscMatrix,
    pub u: CscMatrix,
    pub pivot: Permutation,
}

impl LuBlock {
    pub fn n(&self) -> usize {
        self.u.ncols()
    }

    /// Stored entries of `L` and `U` (the unit diagonal is not counted).
    pub fn nnz(&self) -> usize {
        self.l.nnz() + self.u.nnz()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let n = self.n();
        work.clear();
        work.resize(n, 0.0);
        for (i, &s) in self.pivot.forward().iter().enumerate() {
            work[s] = b[i];
        }
        lower_unit_solve(&self.l, work);
        upper_solve(&self.u, work);
        b[..n].copy_from_slice(work);
    }
}

/// Forward substitution with an implicit unit diagonal.
pub(crate) fn lower_unit_solve(l: &CscMatrix, x: &mut [f64]) {
    for j in 0..l.ncols() {
        let xj = x[j];
        let (rows, vals) = l.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            x[r] -= v * xj;
        }
    }
}

/// Back substitution; the diagonal is the last entry of each column.
pub(crate) fn upper_solve(u: &CscMatrix, x: &mut [f64]) {
    for j in (0..u.ncols()).rev() {
        let (rows, vals) = u.col(j);
        let (last, rest) = vals.split_last().expect("U column holds its diagonal");
        debug_assert_eq!(rows[rows.len() - 1], j);
        x[j] /= last;
        let xj = x[j];
        for (&r, &v) in rows[..rest.len()].iter().zip(rest) {
            x[r] -= v * xj;
        }
    }
}

/// Counters collected while factoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GpStats {
    pub ops: OpCounts,
    /// Times a factor buffer outgrew its planned capacity.
    pub reallocs: u64,
}

/// Grows `v` geometrically (factor 1.5) when `extra` more items do not fit,
/// counting the event.
pub(crate) fn reserve_counted<T>(v: &mut Vec<T>, extra: usize, events: &mut u64) {
    let need = v.len() + extra;
    if need > v.capacity() {
        let target = need.max(v.capacity() + v.capacity() / 2);
        v.reserve_exact(target - v.len());
        *events += 1;
    }
}

/// Left-looking factorization of a stacked panel, one column at a time.
///
/// Rows `0..m` form the pivot domain (the diagonal block); rows `m..` are
/// off-diagonal rows that are eliminated but never chosen as pivots. Rows of
/// `L` keep their original labels until [`ColumnFactorizer::finish`].
#[derive(Debug)]
pub(crate) struct ColumnFactorizer {
    m: usize,
    pivot_tol: f64,
    l_ptr: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    u_ptr: Vec<usize>,
    u_rows: Vec<usize>,
    u_vals: Vec<f64>,
    pinv: Vec<usize>,
    spa: SparseAccumulator,
    scratch: Vec<(usize, f64)>,
    reallocs: u64,
}

impl ColumnFactorizer {
    pub fn new(m: usize, extra: usize, pivot_tol: f64, l_cap: usize, u_cap: usize) -> Self {
        let mut l_ptr = Vec::with_capacity(m + 1);
        l_ptr.push(0);
        let mut u_ptr = Vec::with_capacity(m + 1);
        u_ptr.push(0);
        Self {
            m,
            pivot_tol,
            l_ptr,
            l_rows: Vec::with_capacity(l_cap),
            l_vals: Vec::with_capacity(l_cap),
            u_ptr,
            u_rows: Vec::with_capacity(u_cap),
            u_vals: Vec::with_capacity(u_cap),
            pinv: vec![NONE; m + extra],
            spa: SparseAccumulator::new(m + extra),
            scratch: Vec::new(),
            reallocs: 0,
        }
    }

    pub fn columns_done(&self) -> usize {
        self.u_ptr.len() - 1
    }

    /// Factors the next column given its (reduced) entries.
    pub fn push_column(&mut self, rows: &[usize], vals: &[f64]) -> Result<()> {
        let k = self.columns_done();
        assert!(k < self.m, "all {} columns already factored", self.m);
        let m = self.m;
        self.spa.reset();
        {
            let g = PivotedLower {
                ptr: &self.l_ptr,
                rows: &self.l_rows,
                pinv: &self.pinv,
            };
            self.spa.reach(&g, rows);
        }
        self.spa.scatter(rows, vals);
        column_solve_pivoted(&self.l_ptr, &self.l_rows, &self.l_vals, &self.pinv, &mut self.spa);

        let pinv = &self.pinv;
        let diag = (pinv[k] == NONE).then_some(k);
        let piv = pivot_select(&self.spa, diag, self.pivot_tol, k, |i| i < m && pinv[i] == NONE)?;
        let upiv = self.spa.value(piv);
        self.spa.ops.touched += 2 * self.spa.pattern().len() as u64;

        // U column: already pivotal rows, in step order, then the pivot.
        self.scratch.clear();
        for &i in self.spa.pattern() {
            let s = self.pinv[i];
            if s != NONE {
                self.scratch.push((s, self.spa.value(i)));
            }
        }
        self.scratch.sort_unstable_by_key(|e| e.0);
        reserve_counted(&mut self.u_rows, self.scratch.len() + 1, &mut self.reallocs);
        reserve_counted(&mut self.u_vals, self.scratch.len() + 1, &mut self.reallocs);
        for &(s, v) in &self.scratch {
            self.u_rows.push(s);
            self.u_vals.push(v);
        }
        self.u_rows.push(k);
        self.u_vals.push(upiv);
        self.u_ptr.push(self.u_rows.len());

        // L column: the remaining rows scaled by the pivot, by row label.
        self.scratch.clear();
        for &i in self.spa.pattern() {
            if i != piv && self.pinv[i] == NONE {
                self.scratch.push((i, self.spa.value(i) / upiv));
            }
        }
        self.scratch.sort_unstable_by_key(|e| e.0);
        reserve_counted(&mut self.l_rows, self.scratch.len(), &mut self.reallocs);
        reserve_counted(&mut self.l_vals, self.scratch.len(), &mut self.reallocs);
        for &(i, v) in &self.scratch {
            self.l_rows.push(i);
            self.l_vals.push(v);
        }
        self.l_ptr.push(self.l_rows.len());
        self.pinv[piv] = k;
        Ok(())
    }

    /// Column `k` of `U` (rows are pivot steps, diagonal last).
    pub fn u_col(&self, k: usize) -> (&[usize], &[f64]) {
        let r = self.u_ptr[k]..self.u_ptr[k + 1];
        (&self.u_rows[r.clone()], &self.u_vals[r])
    }

    pub fn stats(&self) -> GpStats {
        GpStats {
            ops: self.spa.ops,
            reallocs: self.reallocs,
        }
    }

    /// Splits the finished factor into the step-ordered diagonal factor and
    /// the off-diagonal rows of `L` (labels `0..extra`).
    pub fn finish(self) -> PanelFactor {
        let m = self.m;
        assert_eq!(self.columns_done(), m, "panel not fully factored");
        let stats = self.stats();
        let extra = self.pinv.len() - m;
        let pinv = &self.pinv;

        let mut dp = Vec::with_capacity(m + 1);
        let mut dr = Vec::new();
        let mut dv = Vec::new();
        let mut op = Vec::with_capacity(m + 1);
        let mut or = Vec::new();
        let mut ov = Vec::new();
        dp.push(0);
        op.push(0);
        let mut col: Vec<(usize, f64)> = Vec::new();
        for k in 0..m {
            col.clear();
            for p in self.l_ptr[k]..self.l_ptr[k + 1] {
                let i = self.l_rows[p];
                if i < m {
                    col.push((pinv[i], self.l_vals[p]));
                } else {
                    or.push(i - m);
                    ov.push(self.l_vals[p]);
                }
            }
            col.sort_unstable_by_key(|e| e.0);
            for &(s, v) in &col {
                dr.push(s);
                dv.push(v);
            }
            dp.push(dr.len());
            op.push(or.len());
        }
        let forward: Vec<usize> = pinv[..m].to_vec();
        PanelFactor {
            lu: LuBlock {
                l: CscMatrix::from_raw(m, m, dp, dr, dv),
                u: CscMatrix::from_raw(m, m, self.u_ptr, self.u_rows, self.u_vals),
                pivot: Permutation::from_forward(forward).expect("every domain row pivots once"),
            },
            l_off: CscMatrix::from_raw(extra, m, op, or, ov),
            stats,
        }
    }
}

/// Result of [`factor_panel`].
#[derive(Debug, Clone)]
pub struct PanelFactor {
    pub lu: LuBlock,
    /// `L` rows below the diagonal block, in their original order.
    pub l_off: CscMatrix,
    pub stats: GpStats,
}

/// Factors the stacked panel `[A_ii; A_ai]` whose first `m` rows are the
/// square diagonal block. Pivots are chosen among those rows only.
pub fn factor_panel(panel: &CscMatrix, m: usize, pivot_tol: f64) -> Result<PanelFactor> {
    factor_panel_with_capacity(panel, m, pivot_tol, 0, 0)
}

/// [`factor_panel`] with planned buffer capacities for `L` and `U`.
pub fn factor_panel_with_capacity(
    panel: &CscMatrix,
    m: usize,
    pivot_tol: f64,
    l_cap: usize,
    u_cap: usize,
) -> Result<PanelFactor> {
    if panel.ncols() != m || panel.nrows() < m {
        return Err(Error::DimensionMismatch {
            context: "panel factorization",
            expected: m,
            found: panel.ncols(),
        });
    }
    let mut f = ColumnFactorizer::new(m, panel.nrows() - m, pivot_tol, l_cap, u_cap);
    for k in 0..m {
        let (rows, vals) = panel.col(k);
        f.push_column(rows, vals)?;
    }
    Ok(f.finish())
}

/// Gilbert-Peierls LU of a square block with threshold partial pivoting.
pub fn factor_block_gp(a: &CscMatrix, pivot_tol: f64) -> Result<LuBlock> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    Ok(factor_panel(a, a.ncols(), pivot_tol)?.lu)
}
