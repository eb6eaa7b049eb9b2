//! Numerical tools for mixed-norm Lebesgue and Herz spaces on one- and
//! two-dimensional grids: maximal operators, central atom and molecule
//! decompositions, Calderón–Zygmund operators and central Campanato norms.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod atoms;
pub mod duality;
pub mod dyadic;
pub mod error;
pub mod fit;
pub mod grid;
pub mod maximal;
pub mod molecules;
pub mod norms;
pub mod operators;
pub mod poly;
pub mod suite;
pub mod testfns;

pub use error::{HerzError, Result};
