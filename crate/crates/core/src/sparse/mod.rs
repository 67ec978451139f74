//! Sparse storage: CSC matrices, permutations, the 2D block grid and
//! Matrix Market I/O.

mod blocked;
mod csc;
mod graph;
mod mm;
mod perm;

pub use blocked::{extract_blocks, extract_blocks_indexed, BlockedMatrix};
pub use csc::{csc_from_triplets, CscMatrix, Triplets};
pub use graph::Graph;
pub use mm::{fmt_g17, mm_parse, mm_read, mm_write, mm_write_to};
pub use perm::{permute, permute_indexed, Permutation};
