//! End-to-end analysis, factorization, refactorization and solves against
//! dense references.

mod common;

use common::*;
use hblu::gen::{arrowhead, block_diagonal, block_rich, grid5, manufactured_rhs};
use hblu::gp::factor_block_gp;
use hblu::numeric::BlockFactor;
use hblu::solve::{backward_error, relative_residual, solve_with_stats};
use hblu::sparse::{permute, CscMatrix, Triplets};
use hblu::*;
use proptest::prelude::*;

fn nd_opts(threshold: usize, leaves: usize, threads: usize) -> Options {
    Options {
        nd_threshold: Some(threshold),
        nd_leaves: Some(leaves),
        threads,
        ..Options::default()
    }
}

fn check_against_gepp(a: &CscMatrix, opts: &Options) -> Result<f64> {
    let n = a.ncols();
    let d = dense(a);
    let xs: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.25).collect();
    let b = matvec(&d, &xs);
    let want = gepp_solve(&d, &b).expect("test matrices are nonsingular");
    let plan = analyze(a, opts)?;
    let f = factor(&plan, a)?;
    let x = solve(&f, &b)?;
    Ok(rel_err(&x, &want))
}

fn option_strategy() -> impl Strategy<Value = Options> {
    (any::<bool>(), 0u32..3, 1usize..5, 2usize..12, prop_oneof![Just(0.001), Just(0.1), Just(1.0)], 1usize..8).prop_map(
        |(use_btf, log_leaves, threads, threshold, pivot_tol, window)| Options {
            use_btf,
            nd_leaves: Some(1 << log_leaves),
            threads,
            nd_threshold: Some(threshold),
            pivot_tol,
            window,
            ..Options::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn solution_matches_dense_partial_pivoting(
        n in 4usize..40,
        density in 0.05f64..0.35,
        seed in any::<u64>(),
        opts in option_strategy(),
    ) {
        let a = random_sparse(n, density, seed);
        let d = dense(&a);
        prop_assume!(gepp_solve(&d, &vec![1.0; n]).is_some());
        match check_against_gepp(&a, &opts) {
            Ok(err) => prop_assert!(err <= 1e-8, "relative error {:e}", err),
            // Too few columns in an ND block for the requested leaves.
            Err(Error::InvalidLeafCount { .. }) => prop_assume!(false),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn solve_reads_every_stored_entry_once(side in 3usize..12, seed in any::<u64>(), leaves in prop_oneof![Just(1usize), Just(2), Just(4)]) {
        let a = grid5(side, seed);
        let plan = analyze(&a, &nd_opts(4, leaves, 2)).unwrap();
        let f = factor(&plan, &a).unwrap();
        let (_, stats) = solve_with_stats(&f, &manufactured_rhs(&a)).unwrap();
        prop_assert_eq!((stats.factor_reads + stats.offdiag_reads) as usize, f.nnz());
    }
}

#[test]
fn nd_pattern_equals_no_pivot_fill_of_the_permuted_matrix() {
    // Diagonally dominant, so a zero threshold keeps every diagonal pivot.
    let a = grid5(8, 5);
    let opts = Options {
        use_btf: false,
        pivot_tol: 0.0,
        ..nd_opts(4, 4, 4)
    };
    let plan = analyze(&a, &opts).unwrap();
    let f = factor(&plan, &a).unwrap();
    assert!(f.blocks.iter().all(|b| matches!(b, BlockFactor::Nd(_))));
    for b in &f.blocks {
        if let BlockFactor::Nd(nd) = b {
            assert!(nd.pivots.iter().all(|p| p.is_identity()));
        }
    }
    let pa = permute(&a, &f.row_perm, &f.col_perm).unwrap();
    let (l, u) = fill_counts(&pa);
    assert_eq!(f.nnz(), l.iter().sum::<usize>() + u.iter().sum::<usize>());
    for c in f.count_report(&plan) {
        assert!(c.within_estimate(), "{c:?}");
    }
    assert_eq!(f.stats.reallocs, 0);
}

#[test]
fn factors_do_not_depend_on_the_thread_count() {
    for (name, a) in [
        ("grid", grid5(20, 1)),
        ("arrow", arrowhead(300, 2)),
        ("rich", block_rich(30, 12, 0.2, 3)),
    ] {
        let sums: Vec<u64> = [1, 2, 3, 4, 8]
            .iter()
            .map(|&t| {
                let plan = analyze(&a, &nd_opts(50, 4, t)).unwrap();
                factor(&plan, &a).unwrap().checksum()
            })
            .collect();
        assert!(sums.windows(2).all(|w| w[0] == w[1]), "{name}: {sums:x?}");
    }
}

#[test]
fn nd_leaves_of_a_block_diagonal_match_independent_factors() {
    // Two disconnected pieces: the top separator is empty and each leaf is
    // one piece, factored exactly as a standalone block.
    let a = block_diagonal(&[40, 40], 0.15, 9);
    let opts = Options {
        use_btf: false,
        ..nd_opts(4, 2, 2)
    };
    let plan = analyze(&a, &opts).unwrap();
    let f = factor(&plan, &a).unwrap();
    let BlockFactor::Nd(nd) = &f.blocks[0] else { panic!("expected one ND block") };
    let pa = permute(&a, &f.row_perm, &f.col_perm).unwrap();
    assert_eq!(nd.tree.node(nd.tree.root()).len(), 0);
    for leaf in nd.tree.leaves() {
        let node = nd.tree.node(leaf);
        let mut t = Triplets::new(node.len(), node.len());
        for (i, j, v) in pa.iter() {
            if (node.start..node.end).contains(&i) && (node.start..node.end).contains(&j) {
                t.push(i - node.start, j - node.start, v);
            }
        }
        let lu = factor_block_gp(&CscMatrix::from_triplets(&t).unwrap(), opts.pivot_tol).unwrap();
        assert_eq!(nd.l.get(leaf, leaf).unwrap(), &lu.l);
        assert_eq!(nd.u.get(leaf, leaf).unwrap(), &lu.u);
        assert_eq!(nd.pivots[leaf], lu.pivot);
    }
}

#[test]
fn refactor_with_the_same_values_is_bitwise_identical() {
    let a = grid5(16, 4);
    let plan = analyze(&a, &nd_opts(30, 4, 2)).unwrap();
    let f = factor(&plan, &a).unwrap();
    let g = refactor(&plan, &f, a.values()).unwrap();
    assert_eq!(f, g);
    assert_eq!(f.checksum(), g.checksum());
}

#[test]
fn refactor_of_a_doubled_matrix_doubles_u_only() {
    let a = block_rich(10, 15, 0.2, 6);
    let plan = analyze(&a, &nd_opts(40, 2, 2)).unwrap();
    let f = factor(&plan, &a).unwrap();
    let doubled: Vec<f64> = a.values().iter().map(|v| 2.0 * v).collect();
    let g = refactor(&plan, &f, &doubled).unwrap();
    assert_eq!(f.blocks.len(), g.blocks.len());
    let twice = |m: &CscMatrix| m.values().iter().map(|v| 2.0 * v).collect::<Vec<_>>();
    for (x, y) in f.blocks.iter().zip(&g.blocks) {
        match (x, y) {
            (BlockFactor::Btf(Some(p)), BlockFactor::Btf(Some(q))) => {
                assert_eq!(p.pivot, q.pivot);
                assert_eq!(p.l, q.l);
                assert_eq!(twice(&p.u), q.u.values());
            }
            (BlockFactor::Nd(p), BlockFactor::Nd(q)) => {
                assert_eq!(p.pivots, q.pivots);
                assert_eq!(p.l, q.l);
                for ((_, _, mu), (_, _, nu)) in p.u.iter_blocks().zip(q.u.iter_blocks()) {
                    assert_eq!(twice(mu), nu.values());
                }
            }
            _ => panic!("block kinds differ"),
        }
    }
}

#[test]
fn refactor_rejects_foreign_factors_and_patterns() {
    let a = grid5(6, 1);
    let b = grid5(7, 1);
    let pa = analyze(&a, &Options::default()).unwrap();
    let pb = analyze(&b, &Options::default()).unwrap();
    let fb = factor(&pb, &b).unwrap();
    assert!(matches!(refactor(&pa, &fb, a.values()), Err(Error::PatternMismatch(_))));
    let fa = factor(&pa, &a).unwrap();
    assert!(matches!(refactor_matrix(&pa, &fa, &b), Err(Error::PatternMismatch(_))));
    assert!(matches!(factor_values(&pa, &a.values()[1..]), Err(Error::PatternMismatch(_))));
}

#[test]
fn iterative_refinement_reaches_working_precision() {
    // A loose pivot threshold on a badly scaled matrix leaves room to improve.
    let mut a = random_sparse(60, 0.15, 77);
    for (k, v) in a.values_mut().iter_mut().enumerate() {
        *v *= 10f64.powi((k % 9) as i32 - 4);
    }
    let opts = Options {
        pivot_tol: 0.0001,
        ..Options::default()
    };
    let plan = analyze(&a, &opts).unwrap();
    let f = factor(&plan, &a).unwrap();
    let b = manufactured_rhs(&a);
    let x0 = solve(&f, &b).unwrap();
    let before = backward_error(&a, &x0, &b);
    let r = iterative_refine(&a, &f, &b, x0, 10).unwrap();
    assert!(r.berr <= before);
    assert!(r.berr <= 4.0 * f64::EPSILON, "berr {:e} after {} steps", r.berr, r.iterations);
    assert_eq!(r.berr, backward_error(&a, &r.x, &b));
}

#[test]
fn plan_survives_serialization() {
    let a = grid5(12, 8);
    let plan = analyze(&a, &nd_opts(20, 2, 2)).unwrap();
    let bytes = plan.to_bytes();
    let back = SymbolicPlan::from_bytes(&bytes).unwrap();
    assert_eq!(back, plan);
    assert_eq!(factor(&back, &a).unwrap().checksum(), factor(&plan, &a).unwrap().checksum());
    assert!(matches!(SymbolicPlan::from_bytes(&bytes[..bytes.len() / 2]), Err(Error::InvalidPlan(_))));
    assert!(matches!(SymbolicPlan::from_bytes(b"not a plan"), Err(Error::InvalidPlan(_))));
}

#[test]
fn singular_btf_block_is_reported_and_solves_refuse() {
    // Upper triangular with a zero on the diagonal: every entry is its own
    // block, and block 1 is an explicit zero.
    let mut t = Triplets::new(3, 3);
    for (i, j, v) in [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 0.0), (1, 2, 1.0), (2, 2, 1.0)] {
        t.push(i, j, v);
    }
    let a = CscMatrix::from_triplets(&t).unwrap();
    let plan = analyze(&a, &Options::default()).unwrap();
    let f = factor(&plan, &a).unwrap();
    assert!(f.is_singular());
    assert_eq!(f.singular.len(), 1);
    assert!(matches!(solve(&f, &[1.0, 1.0, 1.0]), Err(Error::SingularFactor)));
}

#[test]
fn wrong_rhs_length_is_rejected() {
    let a = grid5(4, 1);
    let plan = analyze(&a, &Options::default()).unwrap();
    let f = factor(&plan, &a).unwrap();
    assert!(matches!(solve(&f, &[1.0; 3]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn generators_solve_to_small_residuals() {
    for a in [grid5(30, 2), arrowhead(500, 3), block_diagonal(&[50, 80, 20], 0.1, 4), block_rich(40, 10, 0.3, 5)] {
        let plan = analyze(&a, &nd_opts(100, 4, 4)).unwrap();
        let f = factor(&plan, &a).unwrap();
        let b = manufactured_rhs(&a);
        let x = solve(&f, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) <= 1e-12);
    }
}
