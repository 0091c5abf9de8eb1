//! Numerical laboratory for weighted constant scalar curvature Kähler metrics on toric CP1.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod background;
pub mod error;
pub mod forms;
pub mod functionals;
pub mod grid;
pub mod identities;
pub mod invariants;
pub mod linalg;
pub mod polytope;
pub mod profiles;
pub mod reduction;
pub mod solver;
pub mod state;
pub mod weights;

pub use error::{Error, Result};
