//! Numerical toolkit for single-qubit position-verification studies:
//! hidden measurement channels, the BB84-style protocol and its attacks,
//! and searches over cheating strategies.

pub mod bloch;
pub mod error;
pub mod hmc;
pub mod io;
pub mod matkernel;
pub mod qpvsim;
pub mod random;
pub mod stratsearch;

pub use error::{QpvError, Result};
