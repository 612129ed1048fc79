//! Numerical laboratory for a one-dimensional gain/loss lattice with
//! long-range hopping: Bloch and real-space Hamiltonians, spectra and
//! defectiveness diagnostics, fractional winding numbers, and time
//! evolution of edge excitations.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod spectra;
pub mod topology;

pub use error::{Error, Result};
