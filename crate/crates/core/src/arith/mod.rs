//! Fixed-point codec and Fourier-basis arithmetic on qubit registers.

mod fixed;
mod fourier;

pub use fixed::FixedPoint;
pub use fourier::{
    apply_f_oracle, f_value, fourier_add_const, fourier_add_indexed, fourier_add_register,
    fourier_phase_const, FControl, Sign,
};
