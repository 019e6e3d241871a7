//! Spectral simulation and verification toolkit for renormalized singular
//! SPDEs on the 2-torus: noise lifts, renormalization constants, parabolic
//! Hölder calculus, multiscale reconstruction, exponential integrators, the
//! Feynman–Kac maximum principle and a priori bound recursions.
//!
//! The numerical core is generic over [`Real`] (`f32`, `f64`); the aliases
//! below fix `f64` for everyday use.

pub mod bounds;
pub mod calculus;
pub mod error;
pub mod model;
pub mod noise;
pub mod reconstruction;
pub mod scalar;
pub mod solver;
pub mod stats;
pub mod torus;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridField = torus::GridField<f64>;
pub type SpectralField = torus::SpectralField<f64>;
pub type SpaceTimeField = torus::SpaceTimeField<f64>;
pub type SpaceTimeSeries = torus::SpaceTimeSeries<f64>;
pub type ParabolicPoint = torus::ParabolicPoint<f64>;
pub type ExponentSet = bounds::ExponentSet<f64>;
