//! Fourier spectral solver for the space-homogeneous Boltzmann equation in
//! two dimensions, with a classical scheme and a micro-macro variant that
//! keeps the projected Maxwellian as an exact steady state.

pub mod analytic;
pub mod collision;
pub mod config;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod quadrature;
pub mod runner;
pub mod schemes;

pub use error::{Error, Result};
pub use grid::{to_field, to_spectrum, DistributionField, GridSpec, Mode, Spectrum};
pub use kernel::{KernelSpec, KernelTable};
pub use schemes::{IntegratorSpec, SchemeState, Variant};
