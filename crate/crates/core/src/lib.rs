//! Sparse direct LU factorization with two levels of parallelism: a coarse
//! block triangular form whose small diagonal blocks are factored
//! independently, and nested dissection of large diagonal blocks into a 2D
//! grid factored by a level-scheduled left-looking Gilbert-Peierls kernel.

pub mod bench;
pub mod error;
pub mod gen;
pub mod gp;
pub mod numeric;
pub mod ordering;
pub mod solve;
pub mod sparse;
pub mod symbolic;

pub use error::{Error, Result};
pub use numeric::{factor, factor_values, refactor, refactor_matrix, NumericFactor};
pub use solve::{iterative_refine, solve};
pub use symbolic::{analyze, Options, SymbolicPlan};
