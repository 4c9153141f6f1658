//! Numerical laboratory for the lifespan of small solutions to the 1D
//! weighted semilinear wave equation
//! `u_tt - u_xx = |u|^p / (1+x²)^{(1+a)/2}` with data `ε(f, g)`.

// Negated comparisons are the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod data;
pub mod duhamel;
pub mod error;
pub mod freewave;
pub mod harness;
pub mod marcher;
pub mod model;
pub mod picard;
pub mod quad;

pub use data::{make_data, CompactData, Family, InitialDatum};
pub use error::{Error, Result};
pub use model::{Gauge, Params, Regime, Region};
