//! Matching, block triangular form, nested dissection and AMD, plus the
//! sparse containers they rely on.

mod common;

use common::*;
use hblu::ordering::{amd_order, bottleneck_value, btf_scc, mwcm, nd_order, BALANCE};
use hblu::sparse::{fmt_g17, mm_parse, mm_write_to, permute, CscMatrix, Permutation, Triplets};
use hblu::Error;
use proptest::prelude::*;
use rand::Rng;

fn symmetric_random(n: usize, density: f64, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let mut t = Triplets::new(n, n);
    for j in 0..n {
        t.push(j, j, 4.0);
        for i in j + 1..n {
            if r.gen_bool(density) {
                t.push(i, j, -1.0);
                t.push(j, i, -1.0);
            }
        }
    }
    CscMatrix::from_triplets(&t).unwrap()
}

fn reachability(a: &CscMatrix) -> Vec<Vec<bool>> {
    // Edge j -> i for each entry (i, j), closed by Floyd-Warshall.
    let n = a.ncols();
    let mut r = vec![vec![false; n]; n];
    for (i, j, _) in a.iter() {
        r[j][i] = true;
    }
    for (v, row) in r.iter_mut().enumerate() {
        row[v] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

proptest! {
    #[test]
    fn mwcm_attains_the_brute_force_bottleneck(n in 1usize..8, density in 0.1f64..0.6, seed in any::<u64>()) {
        let a = random_sparse(n, density, seed);
        let p = mwcm(&a).unwrap();
        let b = permute(&a, &p, &Permutation::identity(n)).unwrap();
        prop_assert!(b.has_zero_free_diagonal());
        prop_assert_eq!(bottleneck_value(&a, &p), brute_bottleneck(&a));
    }

    #[test]
    fn btf_blocks_are_the_strong_components(n in 1usize..25, density in 0.0f64..0.2, seed in any::<u64>()) {
        let mut a = random_sparse(n, density, seed);
        // Work on a zero-free diagonal, which is what the block form expects.
        let p = mwcm(&a).unwrap();
        a = permute(&a, &p, &Permutation::identity(n)).unwrap();
        let (q, offsets) = btf_scc(&a);
        prop_assert_eq!(offsets[0], 0);
        prop_assert_eq!(*offsets.last().unwrap(), n);
        let block_of = |v: usize| offsets.partition_point(|&o| o <= v) - 1;

        let b = permute(&a, &q, &q).unwrap();
        for (i, j, _) in b.iter() {
            prop_assert!(block_of(i) <= block_of(j), "entry ({}, {}) below the block diagonal", i, j);
        }
        let reach = reachability(&a);
        for u in 0..n {
            for v in 0..n {
                let same = block_of(q.forward()[u]) == block_of(q.forward()[v]);
                prop_assert_eq!(same, reach[u][v] && reach[v][u]);
            }
        }
    }

    #[test]
    fn nd_separators_decouple_unrelated_nodes(
        n in 8usize..60,
        density in 0.02f64..0.2,
        seed in any::<u64>(),
        log_leaves in 0u32..3,
    ) {
        let a = symmetric_random(n, density, seed);
        let leaves = 1usize << log_leaves;
        let (p, tree) = nd_order(&a, leaves).unwrap();
        prop_assert_eq!(tree.nleaves(), leaves);
        prop_assert_eq!(tree.ncols(), n);
        let b = permute(&a, &p, &p).unwrap();
        let node_of = |v: usize| tree.nodes().iter().position(|nd| nd.start <= v && v < nd.end).unwrap();
        for (i, j, _) in b.iter() {
            let (ni, nj) = (node_of(i), node_of(j));
            prop_assert!(tree.contains(ni, nj) || tree.contains(nj, ni),
                "entry ({}, {}) couples nodes {} and {}", i, j, ni, nj);
        }
    }

    #[test]
    fn permutation_round_trips(n in 1usize..30, seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = Permutation::from_forward(random_perm(n, &mut r)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| r.gen()).collect();
        prop_assert_eq!(p.unapply(&p.apply(&x)), x.clone());
        prop_assert!(p.then(&p.inverted()).is_identity());

        let a = random_sparse(n, 0.2, seed);
        let q = Permutation::from_forward(random_perm(n, &mut r)).unwrap();
        let b = permute(&a, &p, &q).unwrap();
        let back = permute(&b, &p.inverted(), &q.inverted()).unwrap();
        prop_assert_eq!(back, a.clone());
        let d = dense(&a);
        let db = dense(&b);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(db[p.forward()[i]][q.forward()[j]], d[i][j]);
            }
        }
    }

    #[test]
    fn duplicate_triplets_sum_independently_of_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut entries: Vec<(usize, usize, f64)> =
            (0..40).map(|_| (r.gen_range(0..4), r.gen_range(0..4), r.gen_range(-1e3..1e3))).collect();
        let build = |e: &[(usize, usize, f64)]| {
            let mut t = Triplets::new(4, 4);
            for &(i, j, v) in e {
                t.push(i, j, v);
            }
            CscMatrix::from_triplets(&t).unwrap()
        };
        let a = build(&entries);
        let perm = random_perm(entries.len(), &mut r);
        entries = perm.iter().map(|&k| entries[k]).collect();
        let b = build(&entries);
        prop_assert_eq!(a.col_ptr(), b.col_ptr());
        prop_assert_eq!(a.row_idx(), b.row_idx());
        let bits = |m: &CscMatrix| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn matrix_market_round_trip_is_exact(n in 1usize..20, seed in any::<u64>()) {
        let a = random_sparse(n, 0.3, seed);
        let mut buf = Vec::new();
        mm_write_to(&mut buf, &a).unwrap();
        let t = mm_parse(&buf[..], std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(CscMatrix::from_triplets(&t).unwrap(), a);
    }
}

#[test]
fn mwcm_rejects_structurally_singular_input() {
    // Columns 0 and 1 both live only in row 0.
    let a = CscMatrix::from_dense(3, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    match mwcm(&a) {
        Err(Error::StructurallySingular { matched, n }) => assert_eq!((matched, n), (2, 3)),
        other => panic!("expected a structural singularity, got {other:?}"),
    }
}

#[test]
fn nd_on_an_8x8_grid_splits_along_one_grid_line() {
    let a = grid_pattern(8);
    let (p, tree) = nd_order(&a, 2).unwrap();
    let root = tree.node(tree.root());
    assert_eq!(root.len(), 8, "a grid line is the smallest separator");
    let (l, r) = root.children.unwrap();
    assert_eq!(tree.node(l).len() + tree.node(r).len(), 56);
    let big = tree.node(l).len().max(tree.node(r).len());
    assert!(big as f64 <= BALANCE * 56.0 + 1.0);

    let b = permute(&a, &p, &p).unwrap();
    let (ls, rs) = (tree.node(l).start..tree.node(l).end, tree.node(r).start..tree.node(r).end);
    for (i, j, _) in b.iter() {
        assert!(!(ls.contains(&i) && rs.contains(&j)) && !(rs.contains(&i) && ls.contains(&j)));
    }
}

#[test]
fn nd_rejects_bad_leaf_counts() {
    let a = grid_pattern(3);
    assert!(matches!(nd_order(&a, 3), Err(Error::InvalidLeafCount { .. })));
    assert!(matches!(nd_order(&a, 16), Err(Error::InvalidLeafCount { .. })));
}

fn fill_of(a: &CscMatrix, p: &Permutation) -> usize {
    let b = permute(a, p, p).unwrap();
    let (l, u) = fill_counts(&b);
    l.iter().sum::<usize>() + u.iter().sum::<usize>()
}

#[test]
fn amd_moves_the_hub_of_an_arrowhead_last() {
    // Dense first row and column: natural order fills completely.
    let n = 30;
    let mut t = Triplets::new(n, n);
    for i in 0..n {
        t.push(i, i, 4.0);
        if i > 0 {
            t.push(0, i, 1.0);
            t.push(i, 0, 1.0);
        }
    }
    let a = CscMatrix::from_triplets(&t).unwrap();
    let natural = fill_of(&a, &Permutation::identity(n));
    assert_eq!(natural, n * n);
    let p = amd_order(&a);
    assert_eq!(p.forward()[0], n - 1);
    assert_eq!(fill_of(&a, &p), a.nnz(), "no fill once the hub is last");
}

#[test]
fn amd_keeps_a_tridiagonal_fill_free() {
    let n = 40;
    let mut t = Triplets::new(n, n);
    for i in 0..n {
        t.push(i, i, 2.0);
        if i + 1 < n {
            t.push(i + 1, i, -1.0);
            t.push(i, i + 1, -1.0);
        }
    }
    let a = CscMatrix::from_triplets(&t).unwrap();
    assert_eq!(fill_of(&a, &amd_order(&a)), a.nnz());
}

#[test]
fn g17_formatting_round_trips() {
    for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.0, f64::MIN_POSITIVE] {
        assert_eq!(fmt_g17(v).parse::<f64>().unwrap(), v);
    }
}

#[test]
fn packed_fill_count_agrees_with_boolean_elimination() {
    for seed in 0..10 {
        let a = random_sparse(150, 0.01, seed);
        let (l, u) = fill_counts(&a);
        assert_eq!(fill_total_bitset(&a), l.iter().sum::<usize>() + u.iter().sum::<usize>());
    }
}
