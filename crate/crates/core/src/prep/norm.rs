use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::encoding::{check_scale, index_width, rotation_encoding_circuit};
use crate::error::{Error, Result};
use crate::qsim::{folded_argmax, phase_estimation, QubitRange, StateVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NormMode {
    /// Exact 2-norm computed classically.
    #[default]
    Direct,
    /// Phase estimation with `bits` ancillas.
    Qpe { bits: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub mode: NormMode,
    /// Folded phase-register outcome (phase mode only).
    pub outcome: Option<u64>,
    /// Decoded flag-1 probability c1^2 |x|^2 / D.
    pub p1: f64,
    /// Worst-case |value - |x||.
    pub bound: f64,
    /// The decoded P1 vanished, so no norm information survived.
    pub degenerate: bool,
}

/// -U S0 U^dagger S1 for the rotation encoding U of `x`, where S0 reflects
/// about |0...0> and S1 negates the flag-0 subspace. Returns the operator
/// and U|0>.
pub fn norm_operator(x: &[f64], c1: f64) -> Result<(DMatrix<Complex64>, StateVector)> {
    let l = index_width(x.len());
    let u = rotation_encoding_circuit(x, c1, QubitRange::new(0, l), l)?.unitary()?;
    let dim = u.nrows();
    let flag_bit = 1usize << l;
    let mut s0 = DMatrix::<Complex64>::identity(dim, dim);
    s0[(0, 0)] = Complex64::new(-1.0, 0.0);
    let s1 = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        Complex64::new(if i & flag_bit == 0 { -1.0 } else { 1.0 }, 0.0)
    }));
    let q = -(&u * s0 * u.adjoint() * s1);
    let start = StateVector::from_amplitudes(u.column(0).iter().copied().collect())?;
    Ok((q, start))
}

/// Estimates |x|. The operator's eigenphases are +-2 phi with
/// cos^2 phi = P1, so an outcome k decodes to P1 = cos^2(k pi / 2^bits)
/// and |x| = sqrt(D P1) / c1.
pub fn qpe_norm(x: &[f64], c1: f64, mode: NormMode) -> Result<NormEstimate> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    check_scale(c1, x)?;
    let d = (1usize << index_width(x.len())) as f64;
    match mode {
        NormMode::Direct => {
            let value = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(NormEstimate {
                value,
                mode,
                outcome: None,
                p1: c1 * c1 * value * value / d,
                bound: 0.0,
                degenerate: false,
            })
        }
        NormMode::Qpe { bits } => {
            let (q, start) = norm_operator(x, c1)?;
            let n_sys = start.n_qubits();
            let out = phase_estimation(&q, &start, bits)?;
            let probs = out.marginal_probabilities(QubitRange::new(n_sys, bits))?;
            let k = folded_argmax(&probs, bits);
            let p1 = (k as f64 * PI / (1u64 << bits) as f64).cos().powi(2);
            let p1 = if p1 < 1e-12 { 0.0 } else { p1 };
            let eps = PI / (1u64 << bits) as f64;
            Ok(NormEstimate {
                value: (d * p1).sqrt() / c1,
                mode,
                outcome: Some(k),
                p1,
                bound: (d * eps).sqrt() / c1,
                degenerate: p1 == 0.0,
            })
        }
    }
}
