use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gate::Gate;
use super::state::{QubitRange, StateVector};
use crate::error::{Error, Result};

/// Textbook phase estimation. `input` occupies the low qubits; `bits`
/// ancillas are appended above it as register `phase`. Ancilla k controls
/// U^(2^k), then an inverse QFT maps e^{2 pi i phi} to |round(phi 2^bits)>.
pub fn phase_estimation(u: &DMatrix<Complex64>, input: &StateVector, bits: usize) -> Result<StateVector> {
    if bits == 0 {
        return Err(Error::InvalidArgument("phase estimation needs at least one ancilla".into()));
    }
    let n = input.n_qubits();
    if u.nrows() != 1 << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: u.nrows(),
        });
    }
    let ancilla = StateVector::zero(bits).with_register("phase", 0, bits)?;
    let mut state = input.tensor(&ancilla)?;
    let system = QubitRange::new(0, n);
    let phase = QubitRange::new(n, bits);
    state.apply_gate(&Gate::H, &phase.qubits().collect::<Vec<_>>(), &[])?;
    let mut power = u.clone();
    for k in 0..bits {
        state.apply_unitary(system, &power, &[phase.qubit(k)])?;
        if k + 1 < bits {
            power = &power * &power;
        }
    }
    state.apply_qft(phase, true)?;
    Ok(state)
}

/// Exact outcome distribution of `bits`-bit phase estimation on an
/// eigenvector with eigenvalue e^{2 pi i phase_fraction}.
pub fn qpe_distribution(phase_fraction: f64, bits: usize) -> Vec<f64> {
    let n = 1usize << bits;
    (0..n)
        .map(|k| {
            let delta = phase_fraction - k as f64 / n as f64;
            let amp: Complex64 = (0..n)
                .map(|y| Complex64::from_polar(1.0, 2.0 * PI * delta * y as f64))
                .sum::<Complex64>()
                / n as f64;
            amp.norm_sqr()
        })
        .collect()
}

/// k -> min(k, 2^bits - k): outcomes for e^{+i phi} and e^{-i phi} coincide.
pub fn fold_outcome(k: u64, bits: usize) -> u64 {
    let n = 1u64 << bits;
    let k = k % n;
    k.min(n - k)
}

/// Argmax over folded outcome weights; exact ties go to the smaller value.
pub fn folded_argmax(weights: &[f64], bits: usize) -> u64 {
    let n = 1usize << bits;
    let mut folded = vec![0.0; n / 2 + 1];
    for (k, w) in weights.iter().enumerate().take(n) {
        folded[fold_outcome(k as u64, bits) as usize] += w;
    }
    let mut best = 0usize;
    for (k, &w) in folded.iter().enumerate() {
        if w > folded[best] {
            best = k;
        }
    }
    best as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_phase(phi: f64) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, 2.0 * PI * phi),
        ]))
    }

    #[test]
    fn exact_phase_gives_deterministic_outcome() {
        let input = StateVector::basis(1, 1).unwrap();
        for k in 0..16u64 {
            let out = phase_estimation(&diag_phase(k as f64 / 16.0), &input, 4).unwrap();
            let probs = out.marginal_probabilities(QubitRange::new(1, 4)).unwrap();
            assert!((probs[k as usize] - 1.0).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn circuit_matches_analytic_distribution() {
        let phi = 0.2137;
        let input = StateVector::basis(1, 1).unwrap();
        let out = phase_estimation(&diag_phase(phi), &input, 5).unwrap();
        let probs = out.marginal_probabilities(QubitRange::new(1, 5)).unwrap();
        let analytic = qpe_distribution(phi, 5);
        for (a, b) in probs.iter().zip(&analytic) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn folding() {
        assert_eq!(fold_outcome(15, 4), 1);
        assert_eq!(fold_outcome(8, 4), 8);
        assert_eq!(fold_outcome(0, 4), 0);
        let mut w = vec![0.0; 16];
        w[1] = 0.3;
        w[15] = 0.3;
        w[2] = 0.4;
        assert_eq!(folded_argmax(&w, 4), 1);
        let mut tie = vec![0.0; 16];
        tie[3] = 0.5;
        tie[2] = 0.5;
        assert_eq!(folded_argmax(&tie, 4), 2);
    }
}
