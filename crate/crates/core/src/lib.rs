//! Numerical laboratory for the fractional fast diffusion equation
//! `∂ₜu + (−Δ)^{σ/2} u^m = 0`.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual;
pub mod error;
pub mod estimates;
pub mod fractional;
pub mod grid;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use fractional::FracParams;
pub use grid::{Field, Grid, SpectralField};
