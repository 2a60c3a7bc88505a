//! Simulation toolkit for quantum federated learning.
//!
//! * [`qsim`]: dense statevector backend (gates, QFT, basis oracles, sampling).
//! * [`prep`]: amplitude encoding of data rows and of the parameter vector.
//! * [`arith`]: fixed-point codec and Fourier-basis constant arithmetic.
//! * [`qgd`]: quantum gradient estimation (phase estimation + swap test).
//! * [`qsmc`]: GHZ-masked secure summation with CRT reconstruction.
//! * [`flr`]: federated linear regression training loop.
//! * [`scenario`]: reproducible scenario runner used by the CLI.

pub mod arith;
pub mod error;
pub mod flr;
pub mod prep;
pub mod qgd;
pub mod qsim;
pub mod qsmc;
pub mod scenario;
pub mod seed;

pub use error::{Error, Result};
