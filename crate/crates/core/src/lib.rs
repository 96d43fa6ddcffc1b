//! Wave-packet dynamics in non-Hermitian lattice and continuum models.
//!
//! Builds open-boundary Hatano–Nelson and SSH Hamiltonians, evolves Gaussian
//! packets exactly through their biorthogonal eigenbasis, extracts peak
//! trajectories and compares them with closed-form predictions.

pub mod error;
pub mod evolve;
pub mod model;
pub mod oracle;
pub mod similarity;
pub mod wavepacket;

pub use error::{Error, Result};
