// NaN-aware `!(a <= b)` guards and index loops in the dense kernels are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dense;
pub mod driver;
pub mod error;
pub mod oracle;
pub mod krylov;
pub mod recycle;
pub mod selection;
pub mod solvers;
pub mod sparse;
pub mod vector;
