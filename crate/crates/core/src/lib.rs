//! Pseudo-spectral solver for the 3D periodic convective Brinkman-Forchheimer
//! equations
//!
//! ```text
//! du/dt - mu Lap u + (u.grad)u + grad p + alpha u + beta |u|^{r-1} u = 0,  div u = 0
//! ```
//!
//! on `[0, 2pi]^3`, with energy accounting, regularity monitors and numerical
//! checks of the functional inequalities behind the energy equality.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod quadrature;
pub mod spectral;

pub use error::{CbfError, Result};
