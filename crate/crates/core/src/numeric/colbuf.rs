use crate::gp::reserve_counted;
use crate::sparse::CscMatrix;

/// Append-only column storage.
#[derive(Debug, Clone, Default)]
pub(crate) struct ColBuf {
    pub ptr: Vec<usize>,
    pub rows: Vec<usize>,
    pub vals: Vec<f64>,
}

impl ColBuf {
    pub fn with_capacity(ncols: usize, nnz: usize) -> Self {
        let mut ptr = Vec::with_capacity(ncols + 1);
        ptr.push(0);
        Self {
            ptr,
            rows: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn col(&self, c: usize) -> (&[usize], &[f64]) {
        let r = self.ptr[c]..self.ptr[c + 1];
        (&self.rows[r.clone()], &self.vals[r])
    }

    /// Appends a column; growth beyond the planned capacity is counted.
    pub fn push_counted(&mut self, rows: &[usize], vals: &[f64], events: &mut u64) {
        reserve_counted(&mut self.rows, rows.len(), events);
        reserve_counted(&mut self.vals, vals.len(), events);
        self.rows.extend_from_slice(rows);
        self.vals.extend_from_slice(vals);
        self.ptr.push(self.rows.len());
    }

    pub fn push(&mut self, rows: &[usize], vals: &[f64]) {
        self.rows.extend_from_slice(rows);
        self.vals.extend_from_slice(vals);
        self.ptr.push(self.rows.len());
    }

    pub fn into_csc(self, nrows: usize) -> CscMatrix {
        let ncols = self.ncols();
        CscMatrix::from_raw(nrows, ncols, self.ptr, self.rows, self.vals)
    }
}

/// Concatenates column buffers side by side.
pub(crate) fn concat(nrows: usize, parts: &[&ColBuf]) -> CscMatrix {
    let nnz: usize = parts.iter().map(|p| p.nnz()).sum();
    let ncols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = ColBuf::with_capacity(ncols, nnz);
    for p in parts {
        for c in 0..p.ncols() {
            let (r, v) = p.col(c);
            out.push(r, v);
        }
    }
    out.into_csc(nrows)
}
