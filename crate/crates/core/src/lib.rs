//! Spectral gap numerics and Monte Carlo for Brownian motion with drift on an
//! interval that restarts from a fixed distribution whenever it hits the
//! boundary.

pub mod analytic;
pub mod config;
pub mod coupling;
pub mod eigensolver;
pub mod error;
pub mod experiment;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod simulator;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use model::{
    validate_spec, validate_spec_with, Atom, Boundary, ComplexEigenvalue, Interval, JumpDistribution, PathRealization,
    ProcessSpec, RateFit,
};
