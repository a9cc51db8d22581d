//! Variational quantum solver for the one-dimensional Bratu problem
//! `u'' + lambda e^u = 0`, `u(0) = u(1) = 0`, with a classical
//! finite-difference / pseudo arc-length reference.

pub mod ansatz;
pub mod classical;
pub mod continuation;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod pde;
pub mod qsim;

pub use error::{Error, Result};
