//! Moment closures for the one-dimensional BGK equation.
//!
//! The crate covers the whole pipeline around a learned hyperbolic closure:
//!
//! * [`hermite`], [`state`], [`moments`] and [`matrix`]: probabilists' Hermite
//!   utilities, primitive/conservative moment states, Maxwellian moments and the
//!   Grad / HME system matrices.
//! * [`closure`]: turns a prescribed set of real, ordered, Galilean-shifted
//!   eigenvalues into the last row of the system matrix.
//! * [`network`]: the MLCW weight format and inference-mode evaluation of the
//!   closure network.
//! * [`solver`]: first- and high-order path-conservative finite-volume schemes
//!   for the non-conservative moment system.
//! * [`kinetic`]: a discrete-velocity BGK reference solver.
//! * [`metrics`]: relative L2 errors and total variation.
//! * [`datagen`]: initial-condition sampling and the BGKD trajectory dataset
//!   format.
//!
//! Data-parallel loops go through [`parallel`]; with the `parallel` feature
//! disabled everything runs sequentially with identical results.

pub mod closure;
mod codec;
pub mod datagen;
pub mod eigen;
pub mod error;
pub mod hermite;
pub mod kinetic;
pub mod matrix;
pub mod metrics;
pub mod moments;
pub mod network;
pub mod parallel;
pub mod quadrature;
pub mod solver;
pub mod state;
pub mod weno;

pub use closure::{EigenOffsets, HermiteCoefficients, LastRow};
pub use error::{Error, FormatError, Result};
pub use matrix::SystemMatrix;
pub use network::{ClosureRuntimeConfig, MlClosure, NetworkWeights};
pub use parallel::Execution;
pub use solver::Closure;
pub use state::{Boundary, ConservativeState, Grid1D, PrimitiveMomentState};
