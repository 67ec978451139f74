//! Serial Gilbert-Peierls kernels: depth-first reach, sparse triangular
//! column solve, threshold pivoting and left-looking block factorization.

mod factor;
mod spa;
mod spmv;

pub use factor::{factor_block_gp, factor_panel, factor_panel_with_capacity, GpStats, LuBlock, PanelFactor};
pub use spa::{column_solve, pivot_select, reach, ColumnGraph, OpCounts, SparseAccumulator, SparseCol, StepLower};
pub use spmv::{block_spmv_pattern, SpmvWorkspace};

pub(crate) use factor::{lower_unit_solve, reserve_counted, upper_solve, ColumnFactorizer};
