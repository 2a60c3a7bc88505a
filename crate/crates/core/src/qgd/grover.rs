use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prep::{index_width, parameter_circuit, rotation_encoding_circuit, EncodingConstants};
use crate::qsim::{folded_argmax, phase_estimation, Circuit, Gate, Histogram, QubitRange, StateVector};

/// A_i on (j, flag4, flag5) with j on the low qubits:
/// H(flag5), U_x if flag5 = 0, U_w if flag5 = 1, H(flag5).
pub fn a_circuit(x: &[f64], w: &[f64], constants: &EncodingConstants) -> Result<Circuit> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: x.len(),
        });
    }
    let l = index_width(x.len());
    let j = QubitRange::new(0, l);
    let (f4, f5) = (l, l + 1);
    let ux = rotation_encoding_circuit(x, constants.c1, j, f4)?;
    constants.check_parameters(w)?;
    let uw = parameter_circuit(w, constants, j, f4)?;
    let mut c = Circuit::new(l + 2);
    c.gate(Gate::H, &[f5], &[]);
    c.controlled(&ux, f5, true);
    c.controlled(&uw, f5, false);
    c.gate(Gate::H, &[f5], &[]);
    Ok(c)
}

/// |Psi> = A_i |0...0>, with registers `j`, `flag4` and `flag5`.
pub fn build_psi_big(x: &[f64], w: &[f64], constants: &EncodingConstants) -> Result<StateVector> {
    let l = index_width(x.len());
    a_circuit(x, w, constants)?
        .prepare()?
        .with_register("j", 0, l)?
        .with_register("flag4", l, 1)?
        .with_register("flag5", l + 1, 1)
}

/// sin^2 theta = (c1^2 |x|^2 + c2'^2 |w|^2 - 2 c1 c2' x.w) / (4D).
pub fn sin2_theta(c1: f64, c2p: f64, norm_x: f64, norm_w: f64, dot: f64, dim: usize) -> f64 {
    (c1 * c1 * norm_x * norm_x + c2p * c2p * norm_w * norm_w - 2.0 * c1 * c2p * dot) / (4.0 * dim as f64)
}

/// Q = -A S00 A^dagger S11 as a dense matrix, with the state it acts on.
#[derive(Clone, Debug)]
pub struct GroverOperator {
    pub a: DMatrix<Complex64>,
    pub q: DMatrix<Complex64>,
    pub psi: StateVector,
    index_width: usize,
}

impl GroverOperator {
    pub fn build(x: &[f64], w: &[f64], constants: &EncodingConstants) -> Result<Self> {
        let circuit = a_circuit(x, w, constants)?;
        let l = index_width(x.len());
        let a = circuit.unitary()?;
        let dim = a.nrows();
        let mut s00 = DMatrix::<Complex64>::identity(dim, dim);
        s00[(0, 0)] = Complex64::new(-1.0, 0.0);
        let both = 0b11usize << l;
        let s11 = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
            Complex64::new(if i & both == both { -1.0 } else { 1.0 }, 0.0)
        }));
        let q = -(&a * s00 * a.adjoint() * s11);
        let psi = StateVector::from_amplitudes(a.column(0).iter().copied().collect())?
            .with_register("j", 0, l)?
            .with_register("flag4", l, 1)?
            .with_register("flag5", l + 1, 1)?;
        Ok(GroverOperator {
            a,
            q,
            psi,
            index_width: l,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.index_width + 2
    }

    /// Weight of |Psi> on flag4 = flag5 = 1, read off the state.
    pub fn sin2_theta(&self) -> f64 {
        let both = 0b11usize << self.index_width;
        (0..self.psi.len())
            .filter(|i| i & both == both)
            .map(|i| self.psi.probability(i))
            .sum()
    }

    pub fn theta(&self) -> f64 {
        self.sin2_theta().sqrt().clamp(0.0, 1.0).asin()
    }
}

/// Phase-register distribution of `bits`-bit phase estimation of Q on |Psi>.
pub fn theta_distribution(op: &GroverOperator, bits: usize) -> Result<Vec<f64>> {
    let out = phase_estimation(&op.q, &op.psi, bits)?;
    out.marginal_probabilities(QubitRange::new(op.n_qubits(), bits))
}

/// Samples the phase register `shots` times.
pub fn estimate_theta(op: &GroverOperator, bits: usize, shots: u64, seed: u64) -> Result<Histogram> {
    Histogram::sample(&theta_distribution(op, bits)?, bits, shots, seed)
}

/// Analytic counterpart of [`theta_distribution`]: weight 1/2 on each of
/// the eigenphases +-theta/pi.
pub fn theta_distribution_analytic(theta: f64, bits: usize) -> Vec<f64> {
    let f = theta / PI;
    let plus = crate::qsim::qpe_distribution(f, bits);
    let minus = crate::qsim::qpe_distribution(1.0 - f, bits);
    plus.iter().zip(&minus).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Folded argmax of a phase-register distribution or histogram.
pub fn decode_theta(weights: &[f64], bits: usize) -> u64 {
    folded_argmax(weights, bits)
}

/// How sin^2(theta~ pi / 2^l) is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SineReadout {
    #[default]
    Exact,
    /// theta~^2 / round(4^l / pi^2); the denominator is 26 for l = 4.
    SmallAngle,
}

impl SineReadout {
    pub fn sin2(&self, theta_tilde: u64, bits: usize) -> f64 {
        let n = (1u64 << bits) as f64;
        let k = theta_tilde as f64;
        match self {
            SineReadout::Exact => (k * PI / n).sin().powi(2),
            SineReadout::SmallAngle => k * k / (n * n / (PI * PI)).round(),
        }
    }
}

/// x.w = (c1^2 |x|^2 + c2'^2 |w|^2 - 4D sin^2) / (2 c1 c2').
#[allow(clippy::too_many_arguments)]
pub fn recover_inner_product(
    theta_tilde: u64,
    bits: usize,
    constants: &EncodingConstants,
    dim: usize,
    norm_x: f64,
    norm_w: f64,
    readout: SineReadout,
) -> f64 {
    dot_from_sin2(readout.sin2(theta_tilde, bits), constants, dim, norm_x, norm_w)
}

pub fn dot_from_sin2(s2: f64, constants: &EncodingConstants, dim: usize, norm_x: f64, norm_w: f64) -> f64 {
    let c1 = constants.c1;
    let c2p = constants.c2_prime(dim);
    (c1 * c1 * norm_x * norm_x + c2p * c2p * norm_w * norm_w - 4.0 * dim as f64 * s2) / (2.0 * c1 * c2p)
}
