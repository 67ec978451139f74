//! Synthetic test matrices. All generators are deterministic in their seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::{CscMatrix, Triplets};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn build(t: &Triplets) -> CscMatrix {
    CscMatrix::from_triplets(t).expect("generated indices are in range")
}

/// Nonsymmetric 5-point stencil on a `side × side` grid with a strictly
/// dominant diagonal.
pub fn grid5(side: usize, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let n = side * side;
    let mut t = Triplets::with_capacity(n, n, 5 * n);
    for y in 0..side {
        for x in 0..side {
            let i = y * side + x;
            let mut nbrs = Vec::with_capacity(4);
            if x > 0 {
                nbrs.push(i - 1);
            }
            if x + 1 < side {
                nbrs.push(i + 1);
            }
            if y > 0 {
                nbrs.push(i - side);
            }
            if y + 1 < side {
                nbrs.push(i + side);
            }
            let mut sum = 0.0;
            for &j in &nbrs {
                let v = -r.gen_range(0.5..1.5);
                sum += f64::abs(v);
                t.push(i, j, v);
            }
            t.push(i, i, sum + r.gen_range(0.1..1.0));
        }
    }
    build(&t)
}

/// Random diagonal blocks of the given sizes, each with density `density`
/// and a dominant diagonal, laid out along the diagonal.
pub fn block_diagonal(sizes: &[usize], density: f64, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let n: usize = sizes.iter().sum();
    let mut t = Triplets::new(n, n);
    let mut off = 0;
    for &s in sizes {
        dominant_block(&mut t, &mut r, off, s, density);
        off += s;
    }
    build(&t)
}

fn dominant_block(t: &mut Triplets, r: &mut ChaCha8Rng, off: usize, s: usize, density: f64) {
    let mut rowsum = vec![0.0; s];
    for j in 0..s {
        for i in 0..s {
            if i != j && r.gen_bool(density) {
                let v = r.gen_range(-1.0..1.0);
                rowsum[i] += f64::abs(v);
                t.push(off + i, off + j, v);
            }
        }
    }
    for (i, rs) in rowsum.iter().enumerate() {
        let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        t.push(off + i, off + i, sign * (rs + r.gen_range(0.5..1.5)));
    }
}

/// Dense first row and column plus a dominant diagonal.
pub fn arrowhead(n: usize, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let mut t = Triplets::with_capacity(n, n, 3 * n);
    let mut head = 0.0;
    for i in 1..n {
        let a = r.gen_range(-1.0..1.0);
        let b = r.gen_range(-1.0..1.0);
        head += f64::abs(b);
        t.push(i, 0, a);
        t.push(0, i, b);
        t.push(i, i, f64::abs(a) + r.gen_range(1.0..2.0));
    }
    t.push(0, 0, head + 1.0);
    build(&t)
}

/// Many small strongly connected blocks coupled only above the diagonal,
/// with rows and columns scrambled. Recovering the blocks needs the
/// matching and the triangular form.
pub fn block_rich(nblocks: usize, block: usize, density: f64, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let n = nblocks * block;
    let mut t = Triplets::new(n, n);
    for b in 0..nblocks {
        let off = b * block;
        dominant_block(&mut t, &mut r, off, block, density);
        // Make the block strongly connected with a cycle.
        if block > 1 {
            for i in 0..block {
                t.push(off + i, off + (i + 1) % block, 0.25);
            }
        }
        // A few couplings to later blocks.
        for _ in 0..2 {
            if b + 1 < nblocks {
                let bj = r.gen_range(b + 1..nblocks);
                let i = off + r.gen_range(0..block);
                let j = bj * block + r.gen_range(0..block);
                t.push(i, j, r.gen_range(-1.0..1.0));
            }
        }
    }
    let mut rp: Vec<usize> = (0..n).collect();
    let mut cp: Vec<usize> = (0..n).collect();
    rp.shuffle(&mut r);
    cp.shuffle(&mut r);
    let mut s = Triplets::with_capacity(n, n, t.len());
    let a = build(&t);
    for (i, j, v) in a.iter() {
        s.push(rp[i], cp[j], v);
    }
    build(&s)
}

/// Random structurally nonsingular matrix: a random transversal of large
/// entries plus uniform entries of the given density. Pivoting is needed
/// since the transversal is generally off the diagonal.
pub fn random_nonsingular(n: usize, density: f64, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut r);
    let mut t = Triplets::new(n, n);
    let big = 1.0 + density * n as f64;
    for (j, &i) in perm.iter().enumerate() {
        let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        t.push(i, j, sign * big * r.gen_range(1.0..2.0));
    }
    for j in 0..n {
        for i in 0..n {
            if perm[j] != i && r.gen_bool(density) {
                t.push(i, j, r.gen_range(-1.0..1.0));
            }
        }
    }
    build(&t)
}

/// `A · x` for the all-ones `x`, the usual manufactured right-hand side.
pub fn manufactured_rhs(a: &CscMatrix) -> Vec<f64> {
    a.mul_vec(&vec![1.0; a.ncols()])
}
