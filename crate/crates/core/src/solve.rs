//! Triangular solves through the block hierarchy and iterative refinement.

use crate::error::{Error, Result};
use crate::gp::{lower_unit_solve, upper_solve};
use crate::numeric::{BlockFactor, NdFactor, NumericFactor};
use crate::sparse::CscMatrix;

/// Work counters of one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Stored factor entries read by the substitutions.
    pub factor_reads: u64,
    /// Stored entries of the coarse off-diagonal blocks read.
    pub offdiag_reads: u64,
}

/// Solves `A x = b` with a factor of `A`.
pub fn solve(f: &NumericFactor, b: &[f64]) -> Result<Vec<f64>> {
    solve_with_stats(f, b).map(|r| r.0)
}

pub fn solve_with_stats(f: &NumericFactor, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
    if b.len() != f.n {
        return Err(Error::DimensionMismatch {
            context: "right-hand side",
            expected: f.n,
            found: b.len(),
        });
    }
    if f.is_singular() {
        return Err(Error::SingularFactor);
    }
    let mut stats = SolveStats::default();
    let mut y = f.row_perm.apply(b);
    let mut work = Vec::new();
    for blk in (0..f.nblocks()).rev() {
        let r = f.block_range(blk);
        let seg = &mut y[r.clone()];
        match &f.blocks[blk] {
            BlockFactor::Btf(Some(lu)) => {
                lu.solve_in_place(seg, &mut work);
                stats.factor_reads += lu.nnz() as u64;
            }
            BlockFactor::Btf(None) => return Err(Error::SingularFactor),
            BlockFactor::Nd(nd) => stats.factor_reads += nd_solve(nd, seg, &mut work),
        }
        // Move the solved block's coupling to the right-hand side above it.
        for (bi, m) in f.offdiag.block_col(blk) {
            let (xs, ys) = y.split_at_mut(r.start);
            let r0 = f.block_offsets[*bi];
            for c in 0..m.ncols() {
                let xc = ys[c];
                let (rows, vals) = m.col(c);
                for (&i, &v) in rows.iter().zip(vals) {
                    xs[r0 + i] -= v * xc;
                }
            }
            stats.offdiag_reads += m.nnz() as u64;
        }
    }
    Ok((f.col_perm.unapply(&y), stats))
}

/// Forward then backward substitution over the 2D grid. Returns the number
/// of stored entries read.
fn nd_solve(f: &NdFactor, x: &mut [f64], work: &mut Vec<f64>) -> u64 {
    let tree = &f.tree;
    let mut reads = 0u64;
    for (j, p) in f.pivots.iter().enumerate() {
        let node = tree.node(j);
        let seg = &mut x[node.start..node.end];
        work.clear();
        work.resize(seg.len(), 0.0);
        for (r, &s) in p.forward().iter().enumerate() {
            work[s] = seg[r];
        }
        seg.copy_from_slice(work);
    }
    for j in 0..tree.len() {
        let (s, e) = (tree.node(j).start, tree.node(j).end);
        for (bi, m) in f.l.block_col(j) {
            reads += m.nnz() as u64;
            if *bi == j {
                lower_unit_solve(m, &mut x[s..e]);
            } else {
                let r0 = tree.node(*bi).start;
                sub_block(m, x, s, r0);
            }
        }
    }
    for j in (0..tree.len()).rev() {
        let (s, e) = (tree.node(j).start, tree.node(j).end);
        let col = f.u.block_col(j);
        // The diagonal block is last in the column: descendants come first
        // in post-order.
        if let Some((_, d)) = col.iter().find(|(bi, _)| *bi == j) {
            reads += d.nnz() as u64;
            upper_solve(d, &mut x[s..e]);
        }
        for (bi, m) in col {
            if *bi != j {
                reads += m.nnz() as u64;
                sub_block(m, x, s, tree.node(*bi).start);
            }
        }
    }
    reads
}

/// `x[r0..] -= m · x[c0..]`
fn sub_block(m: &CscMatrix, x: &mut [f64], c0: usize, r0: usize) {
    for c in 0..m.ncols() {
        let xc = x[c0 + c];
        let (rows, vals) = m.col(c);
        for (&i, &v) in rows.iter().zip(vals) {
            x[r0 + i] -= v * xc;
        }
    }
}

/// Componentwise backward error `max_i |b − A x|_i / (|A| |x| + |b|)_i`.
pub fn backward_error(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = b.to_vec();
    let mut d: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    for j in 0..a.ncols() {
        let (rows, vals) = a.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            r[i] -= v * x[j];
            d[i] += (v * x[j]).abs();
        }
    }
    r.iter()
        .zip(&d)
        .map(|(ri, di)| if *di > 0.0 { ri.abs() / di } else if *ri != 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Normwise residual `‖A x − b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
pub fn relative_residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let num = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let inf = |v: &[f64]| v.iter().map(|t| t.abs()).fold(0.0, f64::max);
    let den = a.norm_inf() * inf(x) + inf(b);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub x: Vec<f64>,
    /// Correction steps applied.
    pub iterations: usize,
    /// Backward error of `x`.
    pub berr: f64,
    /// True when the error reached machine precision.
    pub converged: bool,
}

/// Improves `x` by `x ← x + solve(b − A x)` until the componentwise backward
/// error stops decreasing or `max_iters` steps have run. Returns the best
/// iterate seen.
pub fn iterative_refine(
    a: &CscMatrix,
    f: &NumericFactor,
    b: &[f64],
    x0: Vec<f64>,
    max_iters: usize,
) -> Result<Refinement> {
    let mut best = x0;
    let mut best_err = backward_error(a, &best, b);
    let mut iterations = 0;
    while iterations < max_iters && best_err > f64::EPSILON {
        let ax = a.mul_vec(&best);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = solve(f, &r)?;
        let cand: Vec<f64> = best.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let err = backward_error(a, &cand, b);
        if !(err < best_err) {
            break;
        }
        best = cand;
        best_err = err;
        iterations += 1;
    }
    Ok(Refinement {
        x: best,
        iterations,
        berr: best_err,
        converged: best_err <= f64::EPSILON,
    })
}
