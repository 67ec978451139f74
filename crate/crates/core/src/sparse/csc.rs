use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate-format assembly buffer. Duplicates are allowed and are summed
/// when converted to CSC.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Compressed sparse column matrix with sorted, duplicate-free row indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from raw arrays, checking every structural invariant.
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        validate(nrows, ncols, &col_ptr, &row_idx, &values)?;
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub(crate) fn from_raw(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert!(
            validate(nrows, ncols, &col_ptr, &row_idx, &values).is_ok(),
            "{:?}",
            validate(nrows, ncols, &col_ptr, &row_idx, &values)
        );
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_raw(nrows, ncols, vec![0; ncols + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_raw(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
    }

    pub fn from_triplets(t: &Triplets) -> Result<Self> {
        csc_from_triplets(t)
    }

    /// Row-major dense input, exact zeros dropped.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), nrows * ncols);
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..ncols {
            for i in 0..nrows {
                let v = dense[i * ncols + j];
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self::from_raw(nrows, ncols, col_ptr, row_idx, values)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_parts(self) -> (usize, usize, Vec<usize>, Vec<usize>, Vec<f64>) {
        (self.nrows, self.ncols, self.col_ptr, self.row_idx, self.values)
    }

    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    #[inline]
    pub fn col_rows(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (rows, vals) = self.col(j);
        rows.binary_search(&i).ok().map(|k| vals[k])
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn to_triplets(&self) -> Triplets {
        Triplets {
            nrows: self.nrows,
            ncols: self.ncols,
            entries: self.iter().collect(),
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for (i, j, v) in self.iter() {
            d[i * self.ncols + j] = v;
        }
        d
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut count = vec![0usize; self.nrows + 1];
        for &i in &self.row_idx {
            count[i + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let col_ptr = count.clone();
        let mut next = count;
        let mut row_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let p = next[i];
                next[i] += 1;
                row_idx[p] = j;
                values[p] = v;
            }
        }
        CscMatrix::from_raw(self.ncols, self.nrows, col_ptr, row_idx, values)
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `y -= A x`
    pub fn sub_mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] -= v * xj;
            }
        }
    }

    pub fn norm_max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rs = vec![0.0f64; self.nrows];
        for (i, _, v) in self.iter() {
            rs[i] += v.abs();
        }
        rs.into_iter().fold(0.0, f64::max)
    }

    pub fn same_pattern(&self, other: &CscMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.col_ptr == other.col_ptr
            && self.row_idx == other.row_idx
    }

    pub fn has_zero_free_diagonal(&self) -> bool {
        self.is_square() && (0..self.ncols).all(|j| self.col_rows(j).binary_search(&j).is_ok())
    }
}

fn validate(
    nrows: usize,
    ncols: usize,
    col_ptr: &[usize],
    row_idx: &[usize],
    values: &[f64],
) -> Result<()> {
    if col_ptr.len() != ncols + 1 {
        return Err(Error::InvalidCsc(format!(
            "col_ptr has length {}, expected {}",
            col_ptr.len(),
            ncols + 1
        )));
    }
    if col_ptr[0] != 0 {
        return Err(Error::InvalidCsc("col_ptr[0] must be 0".into()));
    }
    if col_ptr[ncols] != row_idx.len() {
        return Err(Error::InvalidCsc(format!(
            "col_ptr[ncols] = {} but nnz = {}",
            col_ptr[ncols],
            row_idx.len()
        )));
    }
    if values.len() != row_idx.len() {
        return Err(Error::InvalidCsc(format!(
            "{} values for {} row indices",
            values.len(),
            row_idx.len()
        )));
    }
    for j in 0..ncols {
        if col_ptr[j] > col_ptr[j + 1] {
            return Err(Error::InvalidCsc(format!("col_ptr decreases at column {j}")));
        }
        let rows = &row_idx[col_ptr[j]..col_ptr[j + 1]];
        for (k, &i) in rows.iter().enumerate() {
            if i >= nrows {
                return Err(Error::InvalidCsc(format!(
                    "row index {i} out of range in column {j}"
                )));
            }
            if k > 0 && rows[k - 1] >= i {
                return Err(Error::InvalidCsc(format!(
                    "row indices not strictly increasing in column {j}"
                )));
            }
        }
    }
    Ok(())
}

/// Assembles triplets into CSC. Duplicates are summed; the summation order is
/// canonical (by value) so shuffling the input does not change the result.
pub fn csc_from_triplets(t: &Triplets) -> Result<CscMatrix> {
    for (k, &(i, j, _)) in t.entries.iter().enumerate() {
        if i >= t.nrows || j >= t.ncols {
            return Err(Error::IndexOutOfRange {
                entry: k,
                row: i,
                col: j,
                nrows: t.nrows,
                ncols: t.ncols,
            });
        }
    }
    let mut count = vec![0usize; t.ncols + 1];
    for &(_, j, _) in &t.entries {
        count[j + 1] += 1;
    }
    for j in 0..t.ncols {
        count[j + 1] += count[j];
    }
    let mut next = count.clone();
    let mut bucket = vec![(0usize, 0.0f64); t.entries.len()];
    for &(i, j, v) in &t.entries {
        bucket[next[j]] = (i, v);
        next[j] += 1;
    }

    let mut col_ptr = Vec::with_capacity(t.ncols + 1);
    let mut row_idx = Vec::with_capacity(t.entries.len());
    let mut values = Vec::with_capacity(t.entries.len());
    col_ptr.push(0);
    for j in 0..t.ncols {
        let seg = &mut bucket[count[j]..count[j + 1]];
        seg.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut k = 0;
        while k < seg.len() {
            let row = seg[k].0;
            let mut sum = seg[k].1;
            k += 1;
            while k < seg.len() && seg[k].0 == row {
                sum += seg[k].1;
                k += 1;
            }
            row_idx.push(row);
            values.push(sum);
        }
        col_ptr.push(row_idx.len());
    }
    Ok(CscMatrix::from_raw(t.nrows, t.ncols, col_ptr, row_idx, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_triplets() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 1, 2.0);
        let a = csc_from_triplets(&t).unwrap();
        assert_eq!(a.col_ptr(), &[0, 1, 2]);
        assert_eq!(a.row_idx(), &[0, 1]);
        assert_eq!(a.values(), &[1.0, 2.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new(1, 1);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        let a = csc_from_triplets(&t).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.values(), &[3.0]);
    }

    #[test]
    fn out_of_range_names_entry() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(2, 1, 1.0);
        match csc_from_triplets(&t) {
            Err(Error::IndexOutOfRange { entry, row, col, .. }) => {
                assert_eq!((entry, row, col), (1, 2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn try_new_rejects_unsorted_rows() {
        let e = CscMatrix::try_new(3, 1, vec![0, 2], vec![2, 1], vec![1.0, 1.0]);
        assert!(matches!(e, Err(Error::InvalidCsc(_))));
        let e = CscMatrix::try_new(3, 1, vec![0, 1], vec![0], vec![]);
        assert!(matches!(e, Err(Error::InvalidCsc(_))));
    }

    #[test]
    fn transpose_twice_is_identity() {
        let a = CscMatrix::from_dense(2, 3, &[1.0, 0.0, 2.0, 0.0, 3.0, 4.0]);
        let at = a.transpose();
        assert_eq!(at.nrows(), 3);
        assert_eq!(at.get(2, 1), Some(4.0));
        assert_eq!(at.transpose(), a);
    }

    #[test]
    fn explicit_zeros_are_kept() {
        let mut t = Triplets::new(2, 2);
        t.push(1, 0, 0.0);
        let a = csc_from_triplets(&t).unwrap();
        assert_eq!(a.nnz(), 1);
    }
}
