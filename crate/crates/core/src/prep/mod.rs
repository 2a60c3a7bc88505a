//! Amplitude encoding of data rows and parameter vectors, and 2-norm
//! estimation by phase estimation.
//!
//! Registers are laid out with the index register `j` on the low qubits
//! and the rotated `flag` qubit directly above it.

mod angle_tree;
mod encoding;
mod norm;

pub use angle_tree::{build_angle_tree, prepare_parameter_state, AngleTree};
pub use encoding::{
    index_width, parameter_circuit, prepare_data_state, prepare_data_state_with_register,
    prepare_parameter_state_qram, rotation_encoding_circuit, EncodingConstants, ParamEncoding, SCALE_TOL,
};
pub use norm::{norm_operator, qpe_norm, NormEstimate, NormMode};
