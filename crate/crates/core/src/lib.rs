//! Lattice-point counting for the Picard group PSL₂(Z[i]) acting on
//! hyperbolic 3-space, together with the Selberg-transform and spectral
//! machinery used to study the error term.

// `!(x > 0.0)` style guards must also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod average;
pub mod cli;
pub mod count;
pub mod error;
pub mod gauss;
pub mod geometry;
pub mod numeric;
pub mod planner;
pub mod selberg;
pub mod smoothed;
pub mod spectral;

pub use error::{Error, Result};
pub use gauss::{ext_gcd, solve_unimodular, GaussInt};
pub use geometry::{apply, ball_volume, delta, reduce, Motion, PointH3};
