//! Level-scheduled 2D factorization of a nested-dissection block.
//!
//! Every task of the plan's [`Schedule`] is run by the thread that owns its
//! virtual worker. Outputs live in write-once slots and become visible to
//! consumers through the progress counters, so each value has exactly one
//! writer and no reader ever observes it half built.

use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};

use super::colbuf::{concat, ColBuf};
use super::sync::SyncCell;
use crate::error::{Error, Result};
use crate::gp::{column_solve, factor_panel_with_capacity, ColumnFactorizer, LuBlock, SparseAccumulator, SpmvWorkspace, StepLower};
use crate::ordering::NdTree;
use crate::sparse::{BlockedMatrix, CscMatrix, Permutation};
use crate::symbolic::{nwindows, stack_panel, NdBlockPlan, TaskKind};

/// Factor of one ND block in the 2D layout of its tree.
///
/// Row block `i` of both grids is expressed in the pivot order of node `i`:
/// local row `r` of node `i` sits at position `pivots[i].forward()[r]`.
/// Column positions are never permuted.
#[derive(Debug, Clone, PartialEq)]
pub struct NdFactor {
    pub tree: NdTree,
    /// Unit lower factor; diagonal blocks are strictly lower.
    pub l: BlockedMatrix,
    /// Upper factor; diagonal blocks store their diagonal last per column.
    pub u: BlockedMatrix,
    pub pivots: Vec<Permutation>,
}

impl NdFactor {
    pub fn nnz(&self) -> usize {
        self.l.nnz() + self.u.nnz()
    }
}

#[derive(Debug, Default)]
pub(crate) struct NdStats {
    pub reallocs: u64,
    pub flops: u64,
}

/// Planned capacity with 20% headroom.
pub(crate) fn headroom(x: usize) -> usize {
    x + x.div_ceil(5)
}

/// `U_kj` for one window plus `L_ak · U_kj` for every ancestor `a` of `k`.
#[derive(Debug)]
struct UpperWin {
    u: ColBuf,
    prods: Vec<ColBuf>,
}

struct Shared<'a> {
    plan: &'a NdBlockPlan,
    a: &'a BlockedMatrix,
    tol: f64,
    window: usize,
    /// Global column of the block's first column, for error reports.
    base: usize,
    cells: Vec<SyncCell>,
    abort: AtomicBool,
    error: Mutex<Option<Error>>,
    factors: Vec<OnceLock<LuBlock>>,
    /// `[k][ancestor index]`, rows in the ancestor's local labels.
    lower: Vec<Vec<OnceLock<CscMatrix>>>,
    /// `[j][d - first(j)][window]`.
    upper: Vec<Vec<Vec<OnceLock<UpperWin>>>>,
    diag_fact: Vec<Mutex<Option<ColumnFactorizer>>>,
    /// `U_jj` columns per window of separator `j`.
    diag_win: Vec<Vec<OnceLock<ColBuf>>>,
    lower_acc: Vec<Vec<Mutex<ColBuf>>>,
    reallocs: AtomicU64,
    flops: AtomicU64,
}

fn anc_index(tree: &NdTree, d: usize, a: usize) -> usize {
    debug_assert!(tree.contains(a, d) && a != d);
    tree.node(d).depth - tree.node(a).depth - 1
}

impl<'a> Shared<'a> {
    fn new(plan: &'a NdBlockPlan, a: &'a BlockedMatrix, tol: f64, base: usize) -> Self {
        let tree = &plan.tree;
        let window = plan.schedule.window;
        let nn = tree.len();
        let nw = |j: usize| nwindows(tree.node(j).len(), window);
        let depth = |j: usize| tree.node(j).depth;
        let s = Self {
            plan,
            a,
            tol,
            window,
            base,
            cells: (0..plan.schedule.cells.len()).map(|_| SyncCell::new()).collect(),
            abort: AtomicBool::new(false),
            error: Mutex::new(None),
            factors: (0..nn).map(|_| OnceLock::new()).collect(),
            lower: (0..nn).map(|j| (0..depth(j)).map(|_| OnceLock::new()).collect()).collect(),
            upper: (0..nn)
                .map(|j| {
                    tree.descendants(j)
                        .map(|_| (0..nw(j)).map(|_| OnceLock::new()).collect())
                        .collect()
                })
                .collect(),
            diag_fact: (0..nn).map(|_| Mutex::new(None)).collect(),
            diag_win: (0..nn).map(|j| (0..nw(j)).map(|_| OnceLock::new()).collect()).collect(),
            lower_acc: (0..nn)
                .map(|j| {
                    let est = &plan.sym.cols[j];
                    tree.ancestors(j)
                        .map(|anc| {
                            let cap = est.lower_of(anc).map_or(0, |e| headroom(e.total()));
                            Mutex::new(ColBuf::with_capacity(tree.node(j).len(), cap))
                        })
                        .collect()
                })
                .collect(),
            reallocs: AtomicU64::new(0),
            flops: AtomicU64::new(0),
        };
        // Empty separators have no tasks; their outputs are known up front.
        for j in 0..nn {
            let node = tree.node(j);
            if node.is_empty() && !node.is_leaf() {
                let _ = s.factors[j].set(LuBlock {
                    l: CscMatrix::zeros(0, 0),
                    u: CscMatrix::zeros(0, 0),
                    pivot: Permutation::identity(0),
                });
                for (idx, anc) in tree.ancestors(j).enumerate() {
                    let _ = s.lower[j][idx].set(CscMatrix::zeros(tree.node(anc).len(), 0));
                }
            }
        }
        s
    }

    fn tree(&self) -> &NdTree {
        &self.plan.tree
    }

    fn len(&self, j: usize) -> usize {
        self.tree().node(j).len()
    }

    fn window_cols(&self, j: usize, w: usize) -> std::ops::Range<usize> {
        let c0 = w * self.window;
        c0..(c0 + self.window).min(self.len(j))
    }

    fn singular(&self, e: Error, j: usize) -> Error {
        match e {
            Error::SingularColumn { column } => Error::SingularColumn {
                column: self.base + self.tree().node(j).start + column,
            },
            other => other,
        }
    }

    fn fail(&self, e: Error) {
        let mut slot = self.error.lock().unwrap_or_else(|p| p.into_inner());
        if slot.is_none() {
            *slot = Some(e);
        }
        self.abort.store(true, Ordering::Release);
    }

    fn add_stats(&self, reallocs: u64, flops: u64) {
        self.reallocs.fetch_add(reallocs, Ordering::Relaxed);
        self.flops.fetch_add(flops, Ordering::Relaxed);
    }

    fn run(&self, t: usize) {
        let task = &self.plan.schedule.tasks[t];
        for &(cell, v) in &task.deps {
            if !self.cells[cell].wait_for(v, &self.abort) {
                return;
            }
        }
        let res = match task.kind {
            TaskKind::Leaf { node } => self.leaf(node),
            TaskKind::Upper { k, j, w } => self.upper_task(k, j, w),
            TaskKind::Diag { j, w } => self.diag(j, w),
            TaskKind::Lower { a, j, w } => self.lower_task(a, j, w),
        };
        match res {
            Ok(()) => self.cells[task.publishes.0].publish(task.publishes.1),
            Err(e) => self.fail(e),
        }
    }

    fn leaf(&self, node: usize) -> Result<()> {
        let tree = self.tree();
        let m = self.len(node);
        let (panel, offs) = stack_panel(self.a, tree, node);
        let est = &self.plan.sym.cols[node];
        let l_cap = est.diag_l.total() + est.lower.iter().map(|e| e.1.total()).sum::<usize>();
        let pf = factor_panel_with_capacity(&panel, m, self.tol, headroom(l_cap), headroom(est.diag_u.total()))
            .map_err(|e| self.singular(e, node))?;

        let mut parts: Vec<ColBuf> = offs.iter().map(|_| ColBuf::with_capacity(m, 0)).collect();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); offs.len()];
        let mut vals: Vec<Vec<f64>> = vec![Vec::new(); offs.len()];
        for c in 0..m {
            let (ri, vi) = pf.l_off.col(c);
            for (&r, &v) in ri.iter().zip(vi) {
                let k = offs.partition_point(|&(_, o)| o <= r + m) - 1;
                rows[k].push(r + m - offs[k].1);
                vals[k].push(v);
            }
            for k in 0..offs.len() {
                parts[k].push(&rows[k], &vals[k]);
                rows[k].clear();
                vals[k].clear();
            }
        }
        for (k, part) in parts.into_iter().enumerate() {
            let _ = self.lower[node][k].set(part.into_csc(self.len(offs[k].0)));
        }
        self.add_stats(pf.stats.reallocs, pf.stats.ops.flops);
        let _ = self.factors[node].set(pf.lu);
        Ok(())
    }

    /// `prod(target, d, c)` for window `w` of separator `j`.
    fn prod(&self, target: usize, d: usize, j: usize, w: usize, c: usize) -> (&[usize], &[f64]) {
        let tree = self.tree();
        let win = self.upper[j][d - tree.node(j).first][w]
            .get()
            .expect("upper window published before use");
        win.prods[anc_index(tree, d, target)].col(c)
    }

    fn upper_task(&self, k: usize, j: usize, w: usize) -> Result<()> {
        let tree = self.tree();
        let lu = self.factors[k].get().expect("node factored before its upper blocks");
        let fwd = lu.pivot.forward();
        let mk = self.len(k);
        let cols = self.window_cols(j, w);
        let c0 = cols.start;
        let a_kj = self.a.get(k, j);
        let anc: Vec<usize> = tree.ancestors(k).collect();
        let l_anc: Vec<&CscMatrix> = (0..anc.len())
            .map(|i| self.lower[k][i].get().expect("lower blocks published with the factor"))
            .collect();

        let est = self.plan.sym.cols[j].upper_of(k);
        let cap = est.map_or(0, |e| headroom(cols.clone().map(|c| e.counts[c]).sum()));
        let mut reallocs = 0;
        let mut u = ColBuf::with_capacity(cols.len(), cap);
        let mut prods: Vec<ColBuf> = anc.iter().map(|_| ColBuf::with_capacity(cols.len(), 0)).collect();
        let mut ws = SpmvWorkspace::new(mk);
        let mut spa = SparseAccumulator::new(mk);
        let mut steps = Vec::new();
        let mut vals = Vec::new();
        let mut col: Vec<(usize, f64)> = Vec::new();
        let mut pws = SpmvWorkspace::new(0);
        let mut flops = 0u64;
        for c in cols.clone() {
            ws.begin(mk);
            if let Some(b) = a_kj {
                let (r, v) = b.col(c);
                ws.add(r, v);
            }
            for e in tree.descendants(k) {
                let (r, v) = self.prod(k, e, j, w, c - c0);
                ws.sub(r, v);
            }
            ws.sort();
            steps.clear();
            vals.clear();
            for &r in ws.rows() {
                steps.push(fwd[r]);
                vals.push(ws.value(r));
            }
            spa.reset();
            spa.reach(&StepLower(&lu.l), &steps);
            spa.scatter(&steps, &vals);
            column_solve(&lu.l, &mut spa);
            col.clear();
            col.extend(spa.pattern().iter().map(|&s| (s, spa.value(s))));
            col.sort_unstable_by_key(|e| e.0);
            let ur: Vec<usize> = col.iter().map(|e| e.0).collect();
            let uv: Vec<f64> = col.iter().map(|e| e.1).collect();
            u.push_counted(&ur, &uv, &mut reallocs);
            for (i, &a) in anc.iter().enumerate() {
                pws.begin(self.len(a));
                pws.add_product(l_anc[i], &ur, &uv);
                pws.sort();
                let pr = pws.rows().to_vec();
                let pv: Vec<f64> = pr.iter().map(|&r| pws.value(r)).collect();
                flops += ur.iter().map(|&t| l_anc[i].col_nnz(t) as u64).sum::<u64>();
                prods[i].push(&pr, &pv);
            }
        }
        flops += spa.ops.flops;
        self.add_stats(reallocs, flops);
        let slot = &self.upper[j][k - tree.node(j).first][w];
        slot.set(UpperWin { u, prods }).expect("one writer per upper window");
        Ok(())
    }

    fn diag(&self, j: usize, w: usize) -> Result<()> {
        let tree = self.tree();
        let m = self.len(j);
        let cols = self.window_cols(j, w);
        let c0 = cols.start;
        let mut guard = self.diag_fact[j].lock().unwrap_or_else(|p| p.into_inner());
        let f = guard.get_or_insert_with(|| {
            let est = &self.plan.sym.cols[j];
            ColumnFactorizer::new(m, 0, self.tol, headroom(est.diag_l.total()), headroom(est.diag_u.total()))
        });
        let a_jj = self.a.get(j, j);
        let mut ws = SpmvWorkspace::new(m);
        let mut vals = Vec::new();
        for c in cols.clone() {
            ws.begin(m);
            if let Some(b) = a_jj {
                let (r, v) = b.col(c);
                ws.add(r, v);
            }
            for d in tree.descendants(j) {
                let (r, v) = self.prod(j, d, j, w, c - c0);
                ws.sub(r, v);
            }
            ws.sort();
            vals.clear();
            vals.extend(ws.rows().iter().map(|&r| ws.value(r)));
            f.push_column(ws.rows(), &vals).map_err(|e| self.singular(e, j))?;
        }
        let mut win = ColBuf::with_capacity(cols.len(), 0);
        for c in cols {
            let (r, v) = f.u_col(c);
            win.push(r, v);
        }
        self.diag_win[j][w].set(win).expect("one writer per diagonal window");
        if w + 1 == nwindows(m, self.window) {
            let f = guard.take().expect("factorizer present");
            let pf = f.finish();
            self.add_stats(pf.stats.reallocs, pf.stats.ops.flops);
            let _ = self.factors[j].set(pf.lu);
        }
        Ok(())
    }

    fn lower_task(&self, a: usize, j: usize, w: usize) -> Result<()> {
        let tree = self.tree();
        let ma = self.len(a);
        let idx = anc_index(tree, j, a);
        let cols = self.window_cols(j, w);
        let c0 = cols.start;
        let a_aj = self.a.get(a, j);
        let uwin = self.diag_win[j][w].get().expect("diagonal window published");
        let mut acc = self.lower_acc[j][idx].lock().unwrap_or_else(|p| p.into_inner());
        let mut ws = SpmvWorkspace::new(ma);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        let mut reallocs = 0;
        let mut flops = 0u64;
        for c in cols.clone() {
            ws.begin(ma);
            if let Some(b) = a_aj {
                let (r, v) = b.col(c);
                ws.add(r, v);
            }
            for d in tree.descendants(j) {
                let (r, v) = self.prod(a, d, j, w, c - c0);
                ws.sub(r, v);
            }
            let (ur, uv) = uwin.col(c - c0);
            let (diag, above) = uv.split_last().expect("U column holds its diagonal");
            for (&t, &utc) in ur.iter().zip(above) {
                let (lr, lv) = acc.col(t);
                flops += lr.len() as u64;
                ws.sub_scaled(lr, lv, utc);
            }
            ws.sort();
            rows.clear();
            vals.clear();
            for &r in ws.rows() {
                rows.push(r);
                vals.push(ws.value(r) / diag);
            }
            acc.push_counted(&rows, &vals, &mut reallocs);
        }
        self.add_stats(reallocs, flops);
        if w + 1 == nwindows(self.len(j), self.window) {
            let done = std::mem::take(&mut *acc);
            self.lower[j][idx].set(done.into_csc(ma)).expect("one writer per lower block");
        }
        Ok(())
    }
}

/// Sets `abort` if the owning thread unwinds, so peers stop waiting.
struct AbortOnPanic<'a>(&'a AtomicBool);

impl Drop for AbortOnPanic<'_> {
    fn drop(&mut self) {
        if std::thread::panicking() {
            self.0.store(true, Ordering::Release);
        }
    }
}

/// Factors one ND block with up to `threads` OS threads. Virtual worker `v`
/// of the schedule runs on thread `v * T / V`; results do not depend on `T`.
pub(crate) fn nd_numeric(
    plan: &NdBlockPlan,
    values: &[f64],
    tol: f64,
    threads: usize,
    base: usize,
    stats: &mut NdStats,
) -> Result<NdFactor> {
    let a = plan.blocked(values);
    let sh = Shared::new(plan, &a, tol, base);
    let v = plan.schedule.nworkers.max(1);
    let t = threads.clamp(1, v);
    let lists: Vec<Vec<usize>> = (0..t)
        .map(|th| {
            (0..plan.schedule.tasks.len())
                .filter(|&i| plan.schedule.tasks[i].owner * t / v == th)
                .collect()
        })
        .collect();
    let work = |list: &[usize]| {
        let _guard = AbortOnPanic(&sh.abort);
        for &i in list {
            if sh.abort.load(Ordering::Acquire) {
                break;
            }
            sh.run(i);
        }
    };
    if t == 1 {
        work(&lists[0]);
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = lists[1..].iter().map(|l| s.spawn(|| work(l))).collect();
            let mine = catch_unwind(AssertUnwindSafe(|| work(&lists[0])));
            for h in handles {
                if let Err(p) = h.join() {
                    resume_unwind(p);
                }
            }
            if let Err(p) = mine {
                resume_unwind(p);
            }
        });
    }
    stats.reallocs += sh.reallocs.load(Ordering::Relaxed);
    stats.flops += sh.flops.load(Ordering::Relaxed);
    if let Some(e) = sh.error.lock().unwrap_or_else(|p| p.into_inner()).take() {
        return Err(e);
    }
    Ok(assemble(sh))
}

fn assemble(sh: Shared<'_>) -> NdFactor {
    let tree = sh.plan.tree.clone();
    let off = tree.offsets();
    let mut l = BlockedMatrix::empty(off.clone(), off.clone()).expect("tree offsets");
    let mut u = BlockedMatrix::empty(off.clone(), off).expect("tree offsets");
    let nn = tree.len();
    let factors: Vec<LuBlock> = sh
        .factors
        .into_iter()
        .map(|f| f.into_inner().expect("every node factored"))
        .collect();
    let mut lower = sh.lower;
    let mut upper = sh.upper;
    for j in 0..nn {
        let mj = tree.node(j).len();
        for (idx, anc) in tree.ancestors(j).enumerate() {
            let blk = lower[j][idx].take().expect("every lower block built");
            if blk.nnz() > 0 {
                l.insert(anc, j, relabel_rows(&blk, factors[anc].pivot.forward()))
                    .expect("block shape");
            }
        }
        for d in tree.descendants(j) {
            let wins: Vec<UpperWin> = upper[j][d - tree.node(j).first]
                .iter_mut()
                .map(|w| w.take().expect("every upper window built"))
                .collect();
            let parts: Vec<&ColBuf> = wins.iter().map(|w| &w.u).collect();
            let blk = concat(tree.node(d).len(), &parts);
            debug_assert_eq!(blk.ncols(), mj);
            if blk.nnz() > 0 {
                u.insert(d, j, blk).expect("block shape");
            }
        }
    }
    let mut pivots = Vec::with_capacity(nn);
    for (j, f) in factors.into_iter().enumerate() {
        l.insert(j, j, f.l).expect("block shape");
        u.insert(j, j, f.u).expect("block shape");
        pivots.push(f.pivot);
    }
    NdFactor { tree, l, u, pivots }
}

/// Renames rows through `fwd` and restores ascending order in each column.
fn relabel_rows(b: &CscMatrix, fwd: &[usize]) -> CscMatrix {
    let mut out = ColBuf::with_capacity(b.ncols(), b.nnz());
    let mut col: Vec<(usize, f64)> = Vec::new();
    for c in 0..b.ncols() {
        let (r, v) = b.col(c);
        col.clear();
        col.extend(r.iter().zip(v).map(|(&i, &x)| (fwd[i], x)));
        col.sort_unstable_by_key(|e| e.0);
        let rows: Vec<usize> = col.iter().map(|e| e.0).collect();
        let vals: Vec<f64> = col.iter().map(|e| e.1).collect();
        out.push(&rows, &vals);
    }
    out.into_csc(b.nrows())
}
