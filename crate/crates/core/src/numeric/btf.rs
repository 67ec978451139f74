use crate::error::Error;
use crate::gp::{factor_panel_with_capacity, LuBlock};
use crate::symbolic::SymbolicPlan;

use super::nd::headroom;

/// Outcome of factoring one fine-BTF block.
#[derive(Debug)]
pub(crate) struct BtfOutcome {
    pub lu: Option<LuBlock>,
    /// Global column of the first failed pivot.
    pub singular_at: Option<usize>,
    pub reallocs: u64,
    pub flops: u64,
}

fn factor_one(plan: &SymbolicPlan, i: usize, values: &[f64]) -> BtfOutcome {
    let b = &plan.btf_blocks[i];
    let a = b.a.gather(values);
    let tol = plan.options.pivot_tol;
    match factor_panel_with_capacity(&a, a.ncols(), tol, headroom(b.sym.l_nnz()), headroom(b.sym.u_nnz())) {
        Ok(pf) => BtfOutcome {
            lu: Some(pf.lu),
            singular_at: None,
            reallocs: pf.stats.reallocs,
            flops: pf.stats.ops.flops,
        },
        Err(Error::SingularColumn { column }) => BtfOutcome {
            lu: None,
            singular_at: Some(b.offset + column),
            reallocs: 0,
            flops: 0,
        },
        Err(e) => unreachable!("square block factorization failed: {e}"),
    }
}

/// Factors every fine-BTF block, one thread per group of the plan's load
/// balanced partition. Outcomes are indexed like `plan.btf_blocks`.
pub(crate) fn fine_btf_numeric(plan: &SymbolicPlan, values: &[f64]) -> Vec<BtfOutcome> {
    let nb = plan.btf_blocks.len();
    let groups: Vec<&Vec<usize>> = plan.btf_groups.iter().filter(|g| !g.is_empty()).collect();
    let mut out: Vec<Option<BtfOutcome>> = (0..nb).map(|_| None).collect();
    if groups.len() <= 1 {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Some(factor_one(plan, i, values));
        }
    } else {
        let results: Vec<Vec<(usize, BtfOutcome)>> = std::thread::scope(|s| {
            let handles: Vec<_> = groups
                .iter()
                .map(|g| s.spawn(|| g.iter().map(|&i| (i, factor_one(plan, i, values))).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect()
        });
        for (i, r) in results.into_iter().flatten() {
            out[i] = Some(r);
        }
    }
    out.into_iter()
        .map(|o| o.expect("every block belongs to one group"))
        .collect()
}
