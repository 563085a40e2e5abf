//! Numerical laboratory for the orthotropic degenerate parabolic equation
//!
//! ```text
//! u_t = Σ_i ( |u_{x_i}|^{p_i - 2} u_{x_i} )_{x_i}
//! ```
//!
//! on rectangular boxes. The crate is `no_std` (it needs `alloc`) and covers:
//!
//! - [`geometry`]: exponent vectors, anisotropic cubes and intrinsic cylinders,
//!   the intrinsic distance and the π-distance to the parabolic boundary.
//! - [`solver`]: a conservative explicit finite-difference scheme with adaptive
//!   stable time steps and a discrete weak-formulation residual.
//! - [`harnack`]: empirical forward, backward and two-sided intrinsic Harnack
//!   ratios on computed solutions.
//! - [`hoelder`]: nested intrinsic cylinders, oscillation decay, and Hölder
//!   exponents in the intrinsic metric.
//!
//! With the `parallel` feature (on by default) the stencil update is spread over
//! a rayon pool. Every output cell is computed independently, so results do not
//! depend on the number of workers.
#![cfg_attr(not(feature = "parallel"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod geometry;
pub mod harnack;
pub mod hoelder;
mod math;
pub mod solver;

pub use geometry::{
    CylinderKind, DomainBox, GeometryError, IntrinsicCylinder, PowerVector, SpaceTimeBox,
    SpaceTimePoint,
};
pub use harnack::{HarnackError, HarnackOptions, HarnackReport, HarnackSample};
pub use hoelder::{HoelderError, IterationParams, OscillationTrace};

pub use solver::{Boundary, Grid, GridSolution, SolverConfig, SolverError};
