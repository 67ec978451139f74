//! Dense and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the sparse kernels.

#![allow(dead_code)]

use hblu::sparse::{CscMatrix, Triplets};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major dense copy.
pub fn dense(a: &CscMatrix) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; a.ncols()]; a.nrows()];
    for (i, j, v) in a.iter() {
        d[i][j] += v;
    }
    d
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Gaussian elimination with partial pivoting; `None` on an exact zero pivot.
pub fn gepp_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k] == 0.0 {
            return None;
        }
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    Some(x)
}

/// Unit lower forward substitution on a dense matrix (entries on and above
/// the diagonal are ignored).
pub fn dense_unit_lower_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..x.len() {
        for j in 0..i {
            x[i] -= l[i][j] * x[j];
        }
    }
    x
}

/// Structural elimination without pivoting on the boolean pattern of an
/// `nrows x m` panel whose top `m x m` block is eliminated. The diagonal is
/// treated as present. Returns the filled pattern.
pub fn boolean_elimination(a: &CscMatrix, m: usize) -> Vec<Vec<bool>> {
    let mut p = vec![vec![false; m]; a.nrows()];
    for (i, j, _) in a.iter() {
        p[i][j] = true;
    }
    for (k, row) in p.iter_mut().enumerate().take(m) {
        row[k] = true;
    }
    for k in 0..m {
        let pivot_row: Vec<bool> = p[k].clone();
        for row in p.iter_mut().skip(k + 1) {
            if row[k] {
                for j in k + 1..m {
                    if pivot_row[j] {
                        row[j] = true;
                    }
                }
            }
        }
    }
    p
}

/// Strict-lower and upper (diagonal included) counts of a square pattern
/// after [`boolean_elimination`].
pub fn fill_counts(a: &CscMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = a.ncols();
    let p = boolean_elimination(a, n);
    let l = (0..n).map(|k| (k + 1..n).filter(|&i| p[i][k]).count()).collect();
    let u = (0..n).map(|k| (0..=k).filter(|&i| p[i][k]).count()).collect();
    (l, u)
}

/// Elimination tree of `A + Aᵀ` from its Cholesky fill: the parent of `j`
/// is the first row below `j` in column `j` of the filled factor.
pub fn etree_oracle(a: &CscMatrix) -> Vec<Option<usize>> {
    let n = a.ncols();
    let mut t = Triplets::new(n, n);
    for (i, j, _) in a.iter() {
        t.push(i, j, 1.0);
        t.push(j, i, 1.0);
    }
    let sym = CscMatrix::from_triplets(&t).unwrap();
    let p = boolean_elimination(&sym, n);
    (0..n).map(|j| (j + 1..n).find(|&i| p[i][j])).collect()
}

/// Random square matrix in CSC form: each entry present with `density`,
/// plus a random transversal so it is structurally nonsingular.
pub fn random_sparse(n: usize, density: f64, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let perm = random_perm(n, &mut r);
    let mut t = Triplets::new(n, n);
    for j in 0..n {
        for i in 0..n {
            if perm[j] == i {
                t.push(i, j, r.gen_range(1.0..4.0) * if r.gen() { 1.0 } else { -1.0 });
            } else if r.gen_bool(density) {
                t.push(i, j, r.gen_range(-1.0..1.0));
            }
        }
    }
    CscMatrix::from_triplets(&t).unwrap()
}

pub fn random_perm(n: usize, r: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, r.gen_range(0..=i));
    }
    p
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn all_perms(n: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            go(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    go(n, &mut a, &mut out);
    out
}

/// Largest achievable smallest diagonal magnitude over all row orders, by
/// enumeration. `row_of[j]` is the row placed on diagonal `j`.
pub fn brute_bottleneck(a: &CscMatrix) -> f64 {
    let d = dense(a);
    all_perms(a.ncols())
        .iter()
        .map(|row_of| {
            row_of
                .iter()
                .enumerate()
                .map(|(j, &i)| d[i][j].abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Relative forward error `‖x − y‖∞ / ‖y‖∞`.
pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    max_abs_diff(x, y) / norm_inf(y).max(f64::MIN_POSITIVE)
}

/// 5-point Laplacian-like pattern on a `side x side` grid with the given
/// natural ordering and fixed values; used where only structure matters.
pub fn grid_pattern(side: usize) -> CscMatrix {
    let n = side * side;
    let mut t = Triplets::new(n, n);
    for y in 0..side {
        for x in 0..side {
            let v = y * side + x;
            t.push(v, v, 4.0);
            if x + 1 < side {
                t.push(v, v + 1, -1.0);
                t.push(v + 1, v, -1.0);
            }
            if y + 1 < side {
                t.push(v, v + side, -1.0);
                t.push(v + side, v, -1.0);
            }
        }
    }
    CscMatrix::from_triplets(&t).unwrap()
}

/// `|L| + |U|` (strict lower plus upper with diagonal) of the no-pivot
/// structural elimination, using packed rows so grids of a few thousand
/// unknowns stay cheap.
pub fn fill_total_bitset(a: &CscMatrix) -> usize {
    let n = a.ncols();
    let words = n.div_ceil(64);
    let mut rows = vec![0u64; n * words];
    let set = |rows: &mut [u64], i: usize, j: usize| rows[i * words + j / 64] |= 1 << (j % 64);
    for (i, j, _) in a.iter() {
        set(&mut rows, i, j);
    }
    for k in 0..n {
        set(&mut rows, k, k);
    }
    for k in 0..n {
        let pivot: Vec<u64> = rows[k * words..(k + 1) * words].to_vec();
        for i in k + 1..n {
            let row = &mut rows[i * words..(i + 1) * words];
            if row[k / 64] >> (k % 64) & 1 == 1 {
                // Only columns after k come from the pivot row.
                for (w, &p) in pivot.iter().enumerate().skip(k / 64) {
                    let mask = if w == k / 64 { p & u64::MAX.checked_shl(k as u32 % 64 + 1).unwrap_or(0) } else { p };
                    row[w] |= mask;
                }
            }
        }
    }
    rows.iter().map(|w| w.count_ones() as usize).sum()
}
