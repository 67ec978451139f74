//! Bottleneck maximum weight-cardinality matching.
//!
//! Finds a row permutation giving a zero-free diagonal whose smallest
//! absolute entry is as large as possible. The bottleneck value is located by
//! binary search over the distinct entry magnitudes, each probe being a
//! Hopcroft-Karp perfect matching test restricted to entries at or above the
//! threshold.

use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, Permutation};

const NONE: usize = usize::MAX;

/// Row permutation `p` such that `permute(a, p, identity)` has a zero-free
/// diagonal maximizing the minimum diagonal magnitude.
pub fn mwcm(a: &CscMatrix) -> Result<Permutation> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    let n = a.ncols();
    let mut hk = HopcroftKarp::new(a);

    // Structural check first (threshold 0 admits every stored entry).
    let matched = hk.run(0.0, true);
    if matched < n {
        return Err(Error::StructurallySingular { matched, n });
    }

    let mut weights: Vec<f64> = a.values().iter().map(|v| v.abs()).collect();
    // The bottleneck cannot exceed the smallest column maximum.
    let cap = (0..n)
        .map(|j| a.col(j).1.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(f64::INFINITY, f64::min);
    weights.retain(|&w| w <= cap);
    weights.sort_unstable_by(f64::total_cmp);
    weights.dedup();

    // Largest feasible threshold; weights[0] is always feasible because the
    // bottleneck of any perfect matching is at least the smallest weight.
    let (mut lo, mut hi) = (0usize, weights.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if hk.run(weights[mid], true) == n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = weights.get(lo).copied().unwrap_or(0.0);
    let matched = hk.run(tau, true);
    debug_assert_eq!(matched, n);

    // row_of_col[j] = i  =>  row i moves to position j.
    let mut forward = vec![0usize; n];
    for (j, &i) in hk.row_of_col.iter().enumerate() {
        forward[i] = j;
    }
    Permutation::from_forward(forward)
}

/// Smallest diagonal magnitude after applying a row permutation.
pub fn bottleneck_value(a: &CscMatrix, rowp: &Permutation) -> f64 {
    (0..a.ncols())
        .map(|j| {
            let i = rowp.inverse()[j];
            a.get(i, j).map_or(0.0, f64::abs)
        })
        .fold(f64::INFINITY, f64::min)
}

struct HopcroftKarp<'a> {
    a: &'a CscMatrix,
    row_of_col: Vec<usize>,
    col_of_row: Vec<usize>,
    dist: Vec<usize>,
    queue: Vec<usize>,
    stack: Vec<(usize, usize)>,
}

impl<'a> HopcroftKarp<'a> {
    fn new(a: &'a CscMatrix) -> Self {
        let n = a.ncols();
        Self {
            a,
            row_of_col: vec![NONE; n],
            col_of_row: vec![NONE; a.nrows()],
            dist: vec![0; n],
            queue: Vec::with_capacity(n),
            stack: Vec::new(),
        }
    }

    /// Maximum matching using only entries with `|a_ij| >= tau`. With
    /// `prefer_diagonal`, the search starts from the admissible diagonal.
    fn run(&mut self, tau: f64, prefer_diagonal: bool) -> usize {
        let n = self.a.ncols();
        self.row_of_col.fill(NONE);
        self.col_of_row.fill(NONE);
        let mut matched = 0;
        if prefer_diagonal {
            for j in 0..n {
                if let Some(v) = self.a.get(j, j) {
                    if v.abs() >= tau {
                        self.row_of_col[j] = j;
                        self.col_of_row[j] = j;
                        matched += 1;
                    }
                }
            }
        }
        // Greedy pass before the phases: the largest free admissible entry of
        // each column. Any perfect matching found here has the same
        // bottleneck, but large entries make better pivots.
        for j in 0..n {
            if self.row_of_col[j] != NONE {
                continue;
            }
            let (rows, vals) = self.a.col(j);
            let mut best: Option<(usize, f64)> = None;
            for (&i, &v) in rows.iter().zip(vals) {
                if v.abs() >= tau && self.col_of_row[i] == NONE && best.is_none_or(|b| v.abs() > b.1) {
                    best = Some((i, v.abs()));
                }
            }
            if let Some((i, _)) = best {
                self.row_of_col[j] = i;
                self.col_of_row[i] = j;
                matched += 1;
            }
        }
        while matched < n && self.bfs(tau) {
            for j in 0..n {
                if self.row_of_col[j] == NONE && self.augment(j, tau) {
                    matched += 1;
                }
            }
        }
        matched
    }

    fn bfs(&mut self, tau: f64) -> bool {
        let n = self.a.ncols();
        self.queue.clear();
        for j in 0..n {
            if self.row_of_col[j] == NONE {
                self.dist[j] = 0;
                self.queue.push(j);
            } else {
                self.dist[j] = NONE;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < self.queue.len() {
            let j = self.queue[head];
            head += 1;
            let (rows, vals) = self.a.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                if v.abs() < tau {
                    continue;
                }
                let jj = self.col_of_row[i];
                if jj == NONE {
                    found = true;
                } else if self.dist[jj] == NONE {
                    self.dist[jj] = self.dist[j] + 1;
                    self.queue.push(jj);
                }
            }
        }
        found
    }

    /// Iterative layered DFS from free column `root`.
    fn augment(&mut self, root: usize, tau: f64) -> bool {
        self.stack.clear();
        self.stack.push((root, self.a.col_ptr()[root]));
        while let Some(&mut (j, ref mut p)) = self.stack.last_mut() {
            let end = self.a.col_ptr()[j + 1];
            let mut advanced = false;
            while *p < end {
                let k = *p;
                *p += 1;
                if self.a.values()[k].abs() < tau {
                    continue;
                }
                let i = self.a.row_idx()[k];
                let jj = self.col_of_row[i];
                if jj == NONE {
                    // Flip the path held on the stack.
                    let mut row = i;
                    while let Some((c, _)) = self.stack.pop() {
                        let prev = self.row_of_col[c];
                        self.row_of_col[c] = row;
                        self.col_of_row[row] = c;
                        row = prev;
                    }
                    return true;
                }
                if self.dist[jj] == self.dist[j] + 1 {
                    self.stack.push((jj, self.a.col_ptr()[jj]));
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                self.dist[j] = NONE;
                self.stack.pop();
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::permute;

    #[test]
    fn forced_swap() {
        let a = CscMatrix::from_dense(2, 2, &[0.0, 5.0, 3.0, 0.0]);
        let p = mwcm(&a).unwrap();
        let b = permute(&a, &p, &Permutation::identity(2)).unwrap();
        assert_eq!(b.get(0, 0), Some(3.0));
        assert_eq!(b.get(1, 1), Some(5.0));
        assert_eq!(bottleneck_value(&a, &p), 3.0);
    }

    #[test]
    fn dominant_diagonal_kept() {
        let a = CscMatrix::from_dense(3, 3, &[4., 1., 0., 1., 4., 1., 0., 1., 4.]);
        let p = mwcm(&a).unwrap();
        assert!(p.is_identity());
    }

    #[test]
    fn singular_reports_cardinality() {
        let a = CscMatrix::from_dense(3, 3, &[1., 1., 0., 1., 1., 0., 1., 1., 0.]);
        match mwcm(&a) {
            Err(Error::StructurallySingular { matched, n }) => assert_eq!((matched, n), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn prefers_larger_bottleneck() {
        // Identity diagonal has min 1; the anti-diagonal has min 5.
        let a = CscMatrix::from_dense(2, 2, &[1.0, 6.0, 5.0, 1.0]);
        let p = mwcm(&a).unwrap();
        assert_eq!(bottleneck_value(&a, &p), 5.0);
    }
}
