//! Quantum gradient estimation for a linear model.
//!
//! Per sample, the overlap angle theta_i of the two encoded branches is
//! read by phase estimation of a Grover operator and turned back into
//! x_i.w; the residuals F_i are loaded into |psi>, each data column into
//! |chi^j>, and an overlap test yields g^j = (2P_j - 1)/(c1 c3).

mod grover;
mod pipeline;
mod states;

pub use grover::{
    a_circuit, build_psi_big, decode_theta, dot_from_sin2, estimate_theta, recover_inner_product, sin2_theta,
    theta_distribution, theta_distribution_analytic, GroverOperator, SineReadout,
};
pub use pipeline::{
    classical_gradient_rows, local_gradient, ErrorBudget, Fidelity, GradientEstimate, QgdConfig, Readout,
    SampleRecord, ThetaMode, SAMPLING_DELTA,
};
pub use states::{
    build_chi_state, build_chi_state_with_register, build_psi_state, build_psi_state_coherent, compute_f_register,
    default_c3, read_f_register, swap_test, uncompute_f_register, SwapOutcome, SwapReadout,
};
