use super::spa::SparseCol;
use crate::sparse::CscMatrix;

/// Dense workspace for sparse products; `mark[i] == gen` flags row `i` as
/// part of the current result.
#[derive(Debug, Clone, Default)]
pub struct SpmvWorkspace {
    acc: Vec<f64>,
    mark: Vec<u32>,
    gen: u32,
    rows: Vec<usize>,
}

impl SpmvWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            acc: vec![0.0; n],
            mark: vec![0; n],
            gen: 0,
            rows: Vec::new(),
        }
    }

    /// Starts a new result over `n` rows.
    pub fn begin(&mut self, n: usize) {
        if self.acc.len() < n {
            self.acc.resize(n, 0.0);
            self.mark.resize(n, 0);
        }
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            self.mark.fill(0);
            self.gen = 1;
        }
        self.rows.clear();
    }

    #[inline]
    fn touch(&mut self, r: usize) {
        if self.mark[r] != self.gen {
            self.mark[r] = self.gen;
            self.acc[r] = 0.0;
            self.rows.push(r);
        }
    }

    /// `acc += x`
    pub fn add(&mut self, rows: &[usize], vals: &[f64]) {
        for (&i, &v) in rows.iter().zip(vals) {
            self.touch(i);
            self.acc[i] += v;
        }
    }

    /// `acc -= x`
    pub fn sub(&mut self, rows: &[usize], vals: &[f64]) {
        for (&i, &v) in rows.iter().zip(vals) {
            self.touch(i);
            self.acc[i] -= v;
        }
    }

    /// `acc -= alpha · x`
    pub fn sub_scaled(&mut self, rows: &[usize], vals: &[f64], alpha: f64) {
        for (&i, &v) in rows.iter().zip(vals) {
            self.touch(i);
            self.acc[i] -= v * alpha;
        }
    }

    /// `acc -= l · u`, visiting `u` in stored order.
    pub fn sub_product(&mut self, l: &CscMatrix, u_rows: &[usize], u_vals: &[f64]) {
        for (&t, &ut) in u_rows.iter().zip(u_vals) {
            let (rows, vals) = l.col(t);
            for (&r, &lv) in rows.iter().zip(vals) {
                self.touch(r);
                self.acc[r] -= lv * ut;
            }
        }
    }

    /// `acc += l · u`, visiting `u` in stored order.
    pub fn add_product(&mut self, l: &CscMatrix, u_rows: &[usize], u_vals: &[f64]) {
        for (&t, &ut) in u_rows.iter().zip(u_vals) {
            let (rows, vals) = l.col(t);
            for (&r, &lv) in rows.iter().zip(vals) {
                self.touch(r);
                self.acc[r] += lv * ut;
            }
        }
    }

    /// Rows touched since [`SpmvWorkspace::begin`], ascending after
    /// [`SpmvWorkspace::sort`].
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn sort(&mut self) {
        self.rows.sort_unstable();
    }

    pub fn value(&self, r: usize) -> f64 {
        self.acc[r]
    }

    /// Writes the result with rows in ascending order.
    pub fn finish_into(&mut self, out: &mut SparseCol) {
        self.rows.sort_unstable();
        out.clear();
        for &r in &self.rows {
            out.push(r, self.acc[r]);
        }
    }
}

/// Sparse product `l_block · u_col`. The result pattern is the union of the
/// columns of `l_block` selected by `u_col`, rows ascending.
pub fn block_spmv_pattern(l_block: &CscMatrix, u_col: &SparseCol) -> SparseCol {
    let mut ws = SpmvWorkspace::new(l_block.nrows());
    let mut out = SparseCol::new();
    spmv_into(l_block, u_col, &mut ws, &mut out);
    out
}

fn spmv_into(l: &CscMatrix, u: &SparseCol, ws: &mut SpmvWorkspace, out: &mut SparseCol) {
    ws.begin(l.nrows());
    ws.add_product(l, &u.idx, &u.val);
    ws.finish_into(out);
}
