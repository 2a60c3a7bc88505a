//! Dense statevector simulator.
//!
//! Qubit ordering is little-endian throughout: qubit 0 is the least
//! significant bit of a basis index, and a register spanning qubits
//! `start..start + width` reads its value with qubit `start` as bit 0.

mod circuit;
mod gate;
mod histogram;
mod phase_estimation;
mod state;

pub use circuit::{Circuit, Op};
pub use gate::{Gate, Matrix2};
pub use histogram::Histogram;
pub use phase_estimation::{fold_outcome, folded_argmax, phase_estimation, qpe_distribution};
pub use state::{OracleMode, QubitRange, Register, StateVector, CLEAN_TOL};
