//! Gridless joint range-angle super-resolution for near-field XL-MIMO arrays.
//!
//! The pipeline lifts each antenna's Fresnel response onto a short Fourier
//! model in inverse range, so that a sparse set of paths becomes a sparse sum
//! of 2D harmonic atoms. Recovery solves an atomic-norm SDP over a two-level
//! Toeplitz lift and reads the support off the dual polynomial.
//!
//! The crate is `no_std` and only needs an allocator.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod array;
pub mod basis;
pub mod bessel;
mod error;
pub mod harmonics;
mod linalg;
pub mod localization;
pub mod measurement;
pub mod sdp;
mod trig;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use array::{ArrayConfig, PathParam, SteeringModel};
pub use basis::{InverseRangeMap, LiftedBasis};
pub use localization::{DualPolynomial, PathEstimate, PeakOptions};
pub use measurement::{MeasurementEnsemble, Observation, Provenance, SignalModel};
pub use sdp::{LagArray, SdpProblem, SdpSolution, SolverOptions, SolverStatus};
