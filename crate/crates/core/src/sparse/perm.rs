use serde::{Deserialize, Serialize};

use super::csc::CscMatrix;
use crate::error::{Error, Result};

/// A bijection on `0..n`. `forward[old] = new`, `inverse[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let inverse = invert(&forward)?;
        Ok(Self { forward, inverse })
    }

    /// `order[new] = old`, the usual output format of fill-reducing orderings.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let forward = invert(&order)?;
        Ok(Self {
            forward,
            inverse: order,
        })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &f)| i == f)
    }

    pub fn inverted(&self) -> Permutation {
        Permutation {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// The permutation applying `self` first, then `then`.
    pub fn then(&self, then: &Permutation) -> Permutation {
        assert_eq!(self.len(), then.len());
        let forward: Vec<usize> = self.forward.iter().map(|&f| then.forward[f]).collect();
        let mut inverse = vec![0; forward.len()];
        for (i, &f) in forward.iter().enumerate() {
            inverse[f] = i;
        }
        Permutation { forward, inverse }
    }

    /// `out[forward[i]] = x[i]`
    pub fn apply<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.len());
        let mut out = vec![T::default(); x.len()];
        for (i, &v) in x.iter().enumerate() {
            out[self.forward[i]] = v;
        }
        out
    }

    /// `out[i] = x[forward[i]]`, the inverse of [`Permutation::apply`].
    pub fn unapply<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.len());
        self.forward.iter().map(|&f| x[f]).collect()
    }
}

fn invert(p: &[usize]) -> Result<Vec<usize>> {
    let n = p.len();
    let mut inv = vec![usize::MAX; n];
    for (i, &v) in p.iter().enumerate() {
        if v >= n {
            return Err(Error::InvalidPermutation(format!(
                "entry {i} maps to {v}, outside 0..{n}"
            )));
        }
        if inv[v] != usize::MAX {
            return Err(Error::InvalidPermutation(format!("{v} appears twice")));
        }
        inv[v] = i;
    }
    Ok(inv)
}

/// Entry `(i, j, v)` of `a` moves to `(rowp.forward[i], colp.forward[j], v)`.
pub fn permute(a: &CscMatrix, rowp: &Permutation, colp: &Permutation) -> Result<CscMatrix> {
    Ok(permute_indexed(a, rowp, colp)?.0)
}

/// Like [`permute`], also returning for every output entry the position of
/// its source entry in `a`.
pub fn permute_indexed(
    a: &CscMatrix,
    rowp: &Permutation,
    colp: &Permutation,
) -> Result<(CscMatrix, Vec<usize>)> {
    if rowp.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "permute rows",
            expected: a.nrows(),
            found: rowp.len(),
        });
    }
    if colp.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: "permute columns",
            expected: a.ncols(),
            found: colp.len(),
        });
    }
    let nnz = a.nnz();
    let mut col_ptr = Vec::with_capacity(a.ncols() + 1);
    let mut row_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    let mut map = Vec::with_capacity(nnz);
    let mut scratch: Vec<(usize, usize)> = Vec::new();
    col_ptr.push(0);
    for jn in 0..a.ncols() {
        let j = colp.inverse()[jn];
        let start = a.col_ptr()[j];
        scratch.clear();
        scratch.extend(
            a.col_rows(j)
                .iter()
                .enumerate()
                .map(|(k, &i)| (rowp.forward()[i], start + k)),
        );
        scratch.sort_unstable_by_key(|e| e.0);
        for &(i, src) in &scratch {
            row_idx.push(i);
            values.push(a.values()[src]);
            map.push(src);
        }
        col_ptr.push(row_idx.len());
    }
    Ok((
        CscMatrix::from_raw(a.nrows(), a.ncols(), col_ptr, row_idx, values),
        map,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_permute_is_noop() {
        let a = CscMatrix::from_dense(3, 3, &[1., 2., 0., 0., 3., 4., 5., 0., 6.]);
        let id = Permutation::identity(3);
        assert_eq!(permute(&a, &id, &id).unwrap(), a);
    }

    #[test]
    fn reversal_on_diagonal() {
        let a = CscMatrix::from_dense(3, 3, &[1., 0., 0., 0., 2., 0., 0., 0., 3.]);
        let r = Permutation::from_forward(vec![2, 1, 0]).unwrap();
        let id = Permutation::identity(3);
        let b = permute(&a, &r, &id).unwrap();
        assert_eq!(b.get(2, 0), Some(1.0));
        assert_eq!(b.get(1, 1), Some(2.0));
        assert_eq!(b.get(0, 2), Some(3.0));
        let c = permute(&a, &r, &r).unwrap();
        assert_eq!(c.get(0, 0), Some(3.0));
        assert_eq!(c.get(2, 2), Some(1.0));
    }

    #[test]
    fn rejects_bad_permutations() {
        assert!(Permutation::from_forward(vec![0, 0]).is_err());
        assert!(Permutation::from_forward(vec![0, 2]).is_err());
        let a = CscMatrix::identity(3);
        let p = Permutation::identity(2);
        assert!(matches!(
            permute(&a, &p, &Permutation::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn then_composes_left_to_right() {
        let p = Permutation::from_forward(vec![1, 2, 0]).unwrap();
        let q = Permutation::from_forward(vec![2, 0, 1]).unwrap();
        let pq = p.then(&q);
        let x = [10, 20, 30];
        assert_eq!(pq.apply(&x), q.apply(&p.apply(&x)));
        assert_eq!(p.unapply(&p.apply(&x)), x.to_vec());
    }
}
