//! Decay of entropy solutions to multidimensional scalar conservation laws.

// Parameter guards are written `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod flux;
pub mod grid;
pub mod lattice;
pub mod norms;
pub mod periodization;
pub mod shape;
pub mod solver;
pub mod experiment;
