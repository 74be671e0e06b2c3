//! Linearized free-boundary problem for 2D planar MHD contact discontinuities.
//!
//! The crate provides the symmetric hyperbolic MHD system, the lifted front
//! geometry, the linearized operator around a piecewise-smooth contact state,
//! normal-mode analysis (Lopatinski determinant, neutral modes, dual
//! conditions) and an SBP-SAT finite-difference solver for the regularized
//! linear problem with energy and divergence monitors.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basic_state;
pub mod config;
pub mod dual;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod grid;
pub mod linearization;
pub mod mhd;
pub mod scenarios;
pub mod small;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};

/// Number of unknowns per side.
pub const NU: usize = 6;

/// Small fixed-size matrix used throughout.
pub type Mat6 = [[f64; NU]; NU];
/// State vector (p, v1, v2, H1, H2, S).
pub type Vec6 = [f64; NU];
