//! Numerical and analytic spectra of a non-reciprocal SSH ring with a
//! gain/loss domain wall: exact diagonalization, the generalized Brillouin
//! zone, phase classification, the tearing transition, and batch sweeps.

pub mod classify;
pub mod error;
pub mod gbz;
pub mod io;
pub mod linalg;
pub mod model;
pub mod par;
pub mod poly;
pub mod spectral;
pub mod sweep;
pub mod tearing;
pub mod transfer;
pub mod validate;

pub use error::{Error, Result};
