use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::csc::CscMatrix;
use crate::error::{Error, Result};

/// A two-dimensional grid of CSC blocks. Only structurally nonzero blocks are
/// stored; each block column keeps its blocks sorted by block row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockedMatrix {
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
    cols: Vec<Vec<(usize, CscMatrix)>>,
}

impl BlockedMatrix {
    pub fn empty(row_offsets: Vec<usize>, col_offsets: Vec<usize>) -> Result<Self> {
        check_offsets(&row_offsets, "row")?;
        check_offsets(&col_offsets, "column")?;
        let nbc = col_offsets.len() - 1;
        Ok(Self {
            row_offsets,
            col_offsets,
            cols: vec![Vec::new(); nbc],
        })
    }

    pub fn nblocks_row(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn nblocks_col(&self) -> usize {
        self.col_offsets.len() - 1
    }

    pub fn nrows(&self) -> usize {
        *self.row_offsets.last().unwrap()
    }

    pub fn ncols(&self) -> usize {
        *self.col_offsets.last().unwrap()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_offsets(&self) -> &[usize] {
        &self.col_offsets
    }

    pub fn row_range(&self, bi: usize) -> Range<usize> {
        self.row_offsets[bi]..self.row_offsets[bi + 1]
    }

    pub fn col_range(&self, bj: usize) -> Range<usize> {
        self.col_offsets[bj]..self.col_offsets[bj + 1]
    }

    pub fn get(&self, bi: usize, bj: usize) -> Option<&CscMatrix> {
        let col = &self.cols[bj];
        col.binary_search_by_key(&bi, |e| e.0)
            .ok()
            .map(|k| &col[k].1)
    }

    pub fn get_mut(&mut self, bi: usize, bj: usize) -> Option<&mut CscMatrix> {
        let col = &mut self.cols[bj];
        match col.binary_search_by_key(&bi, |e| e.0) {
            Ok(k) => Some(&mut col[k].1),
            Err(_) => None,
        }
    }

    /// Stored blocks of block column `bj` as `(block_row, block)`.
    pub fn block_col(&self, bj: usize) -> &[(usize, CscMatrix)] {
        &self.cols[bj]
    }

    pub fn insert(&mut self, bi: usize, bj: usize, block: CscMatrix) -> Result<()> {
        let (r, c) = (self.row_range(bi), self.col_range(bj));
        if block.nrows() != r.len() || block.ncols() != c.len() {
            return Err(Error::DimensionMismatch {
                context: "block insert",
                expected: r.len() * c.len(),
                found: block.nrows() * block.ncols(),
            });
        }
        let col = &mut self.cols[bj];
        match col.binary_search_by_key(&bi, |e| e.0) {
            Ok(k) => col[k].1 = block,
            Err(k) => col.insert(k, (bi, block)),
        }
        Ok(())
    }

    pub fn nstored(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn nnz(&self) -> usize {
        self.cols
            .iter()
            .flat_map(|c| c.iter().map(|(_, b)| b.nnz()))
            .sum()
    }

    pub fn iter_blocks(&self) -> impl Iterator<Item = (usize, usize, &CscMatrix)> {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(bj, c)| c.iter().map(move |(bi, b)| (*bi, bj, b)))
    }

    /// Reassembles the global matrix.
    pub fn to_csc(&self) -> CscMatrix {
        let ncols = self.ncols();
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        col_ptr.push(0);
        for bj in 0..self.nblocks_col() {
            for c in 0..self.col_range(bj).len() {
                for (bi, b) in &self.cols[bj] {
                    let r0 = self.row_offsets[*bi];
                    let (rows, vals) = b.col(c);
                    row_idx.extend(rows.iter().map(|&i| i + r0));
                    values.extend_from_slice(vals);
                }
                col_ptr.push(row_idx.len());
            }
        }
        CscMatrix::from_raw(self.nrows(), ncols, col_ptr, row_idx, values)
    }
}

fn check_offsets(off: &[usize], what: &str) -> Result<()> {
    if off.is_empty() || off[0] != 0 {
        return Err(Error::InvalidOffsets(format!("{what} offsets must start at 0")));
    }
    if let Some(k) = off.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::InvalidOffsets(format!(
            "{what} offsets decrease at position {k}"
        )));
    }
    Ok(())
}

/// Splits `a` into the block grid described by the offsets. Structurally
/// empty blocks are not stored.
pub fn extract_blocks(
    a: &CscMatrix,
    row_offsets: &[usize],
    col_offsets: &[usize],
) -> Result<BlockedMatrix> {
    Ok(extract_blocks_indexed(a, row_offsets, col_offsets)?.0)
}

/// Like [`extract_blocks`], also returning, for every stored block in the
/// order of [`BlockedMatrix::block_col`], the source position in `a` of each
/// block entry.
pub fn extract_blocks_indexed(
    a: &CscMatrix,
    row_offsets: &[usize],
    col_offsets: &[usize],
) -> Result<(BlockedMatrix, Vec<Vec<Vec<usize>>>)> {
    let mut out = BlockedMatrix::empty(row_offsets.to_vec(), col_offsets.to_vec())?;
    if out.nrows() != a.nrows() || out.ncols() != a.ncols() {
        return Err(Error::InvalidOffsets(format!(
            "offsets cover {}x{} but matrix is {}x{}",
            out.nrows(),
            out.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let mut row_block = vec![0usize; a.nrows()];
    for bi in 0..out.nblocks_row() {
        for r in out.row_range(bi) {
            row_block[r] = bi;
        }
    }

    struct Bucket {
        bi: usize,
        col_ptr: Vec<usize>,
        rows: Vec<usize>,
        vals: Vec<f64>,
        src: Vec<usize>,
    }

    let mut maps = Vec::with_capacity(out.nblocks_col());
    let mut slot = vec![usize::MAX; out.nblocks_row()];
    for bj in 0..out.nblocks_col() {
        let cr = out.col_range(bj);
        let mut buckets: Vec<Bucket> = Vec::new();
        for (c, j) in cr.clone().enumerate() {
            let start = a.col_ptr()[j];
            let (rows, vals) = a.col(j);
            for (k, (&i, &v)) in rows.iter().zip(vals).enumerate() {
                let bi = row_block[i];
                if slot[bi] == usize::MAX {
                    slot[bi] = buckets.len();
                    buckets.push(Bucket {
                        bi,
                        col_ptr: vec![0],
                        rows: Vec::new(),
                        vals: Vec::new(),
                        src: Vec::new(),
                    });
                }
                let b = &mut buckets[slot[bi]];
                while b.col_ptr.len() <= c {
                    b.col_ptr.push(b.rows.len());
                }
                b.rows.push(i - out.row_offsets[bi]);
                b.vals.push(v);
                b.src.push(start + k);
            }
        }
        buckets.sort_by_key(|b| b.bi);
        let mut col_maps = Vec::with_capacity(buckets.len());
        for mut b in buckets {
            slot[b.bi] = usize::MAX;
            while b.col_ptr.len() <= cr.len() {
                b.col_ptr.push(b.rows.len());
            }
            let nr = out.row_range(b.bi).len();
            let m = CscMatrix::from_raw(nr, cr.len(), b.col_ptr, b.rows, b.vals);
            out.cols[bj].push((b.bi, m));
            col_maps.push(b.src);
        }
        maps.push(col_maps);
    }
    Ok((out, maps))
}
