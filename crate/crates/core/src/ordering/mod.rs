//! Fill-reducing and stability orderings: bottleneck matching, block
//! triangular form, approximate minimum degree and nested dissection.

mod amd;
mod btf;
mod mwcm;
mod nd;

pub use amd::amd_order;
pub use btf::btf_scc;
pub use mwcm::{bottleneck_value, mwcm};
pub use nd::{nd_order, NdNode, NdTree, BALANCE};

