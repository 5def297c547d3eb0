//! Simulation of quantum-state readout methods for grid functions.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`);
//! the aliases below fix it to `f64`, which the experiment drivers use.

pub mod bench;
pub mod burgers_tsr;
pub mod cfd;
pub mod error;
pub mod gridfn;
pub mod readout_qae;
pub mod readout_sampling;
pub mod sampling;
pub mod scalar;
pub mod spline;
pub mod statevec;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StateVector = statevec::StateVector<f64>;
pub type Circuit = statevec::Circuit<f64>;
pub type GridSpec = gridfn::GridSpec<f64>;
pub type GridFunction = gridfn::GridFunction<f64>;
pub type NormalizedState = gridfn::NormalizedState<f64>;
pub type FourierCoefficients = gridfn::FourierCoefficients<f64>;
