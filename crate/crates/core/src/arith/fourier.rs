use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fixed::FixedPoint;
use crate::error::{Error, Result};
use crate::qsim::{Gate, QubitRange, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Add,
    Subtract,
}

/// Phase stage of a constant adder, for a register already in the Fourier
/// basis. Bit m of `t` rotates target qubit k by R_{q-m-k} (subtraction) or
/// its adjoint (addition); pairs with m + k >= q contribute a full turn and
/// are skipped.
pub fn fourier_phase_const(state: &mut StateVector, register: QubitRange, t: u64, sign: Sign) -> Result<()> {
    let q = register.width;
    for k in 0..q {
        for m in 0..q - k {
            if (t >> m) & 1 == 0 {
                continue;
            }
            let gate = rotation(q - m - k, sign);
            state.apply_gate(&gate, &[register.qubit(k)], &[])?;
        }
    }
    Ok(())
}

fn rotation(k: usize, sign: Sign) -> Gate {
    match sign {
        Sign::Subtract => Gate::Rk { k: k as u32 },
        Sign::Add => Gate::RkDagger { k: k as u32 },
    }
}

/// |a> -> |(a +- t) mod 2^q> on `register`: QFT, constant phases, inverse QFT.
pub fn fourier_add_const(state: &mut StateVector, register: QubitRange, t: u64, sign: Sign) -> Result<()> {
    state.apply_qft(register, false)?;
    fourier_phase_const(state, register, t, sign)?;
    state.apply_qft(register, true)
}

/// |y>|a> -> |y>|(a +- y) mod 2^q>, with the rotations of
/// [`fourier_add_const`] conditioned on the qubits of `operand`.
pub fn fourier_add_register(
    state: &mut StateVector,
    operand: QubitRange,
    register: QubitRange,
    sign: Sign,
) -> Result<()> {
    if operand.overlaps(&register) {
        return Err(Error::OverlappingQubits(operand.start.max(register.start)));
    }
    let q = register.width;
    state.apply_qft(register, false)?;
    for k in 0..q {
        for m in 0..operand.width.min(q - k) {
            let gate = rotation(q - m - k, sign);
            state.apply_gate(&gate, &[register.qubit(k)], &[operand.qubit(m)])?;
        }
    }
    state.apply_qft(register, true)
}

/// |i>|a> -> |i>|(a +- t(i)) mod 2^q>, where the constant depends on the
/// value of `index`. The Fourier-basis phases are applied as one diagonal.
pub fn fourier_add_indexed<F>(
    state: &mut StateVector,
    index: QubitRange,
    register: QubitRange,
    t: F,
    sign: Sign,
) -> Result<()>
where
    F: Fn(u64) -> u64,
{
    if index.overlaps(&register) {
        return Err(Error::OverlappingQubits(index.start.max(register.start)));
    }
    let n = register.size() as u64;
    let table: Vec<u64> = (0..index.size() as u64).map(|i| t(i) % n).collect();
    let dir = match sign {
        Sign::Add => 1.0,
        Sign::Subtract => -1.0,
    };
    state.apply_qft(register, false)?;
    state.apply_diagonal_phase(|b| {
        let y = register.extract(b);
        let c = table[index.extract(b) as usize];
        dir * 2.0 * PI * ((c * y) % n) as f64 / n as f64
    });
    state.apply_qft(register, true)
}

/// How the y lookup of the F oracle reaches the subtractor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FControl {
    /// y is folded into classical rotation angles.
    Classical,
    /// y is written into `y_register` (which must be |0>), drives the
    /// rotations as controls, and is cleared again.
    Quantum { y_register: QubitRange },
}

/// Classical value of F(v) = v + b - y.
pub fn f_value(dot: f64, y: f64, b: f64) -> f64 {
    dot + b - y
}

/// Maps an encoded x.w in `dot_register` to encoded x.w + b - y: subtract
/// y, then add b. Returns true when any populated input value leaves the
/// signed range of `codec` (the register then holds the wrapped result).
pub fn apply_f_oracle(
    state: &mut StateVector,
    dot_register: QubitRange,
    y: f64,
    b: f64,
    codec: FixedPoint,
    control: FControl,
) -> Result<bool> {
    if dot_register.width != codec.q as usize {
        return Err(Error::DimensionMismatch {
            expected: codec.q as usize,
            got: dot_register.width,
        });
    }
    let y_raw = codec.encode(y)?;
    let b_raw = codec.encode(b)?;
    let ys = codec.to_scaled(y)?;
    let bs = codec.to_scaled(b)?;
    let (lo, hi) = scaled_bounds(codec);
    let overflow = state
        .marginal_probabilities(dot_register)?
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 1e-24)
        .any(|(raw, _)| {
            let v = codec.unwrap_raw(raw as u64);
            let mid = v - ys;
            let out = mid + bs;
            mid < lo || mid > hi || out < lo || out > hi
        });
    match control {
        FControl::Classical => {
            fourier_add_const(state, dot_register, y_raw, Sign::Subtract)?;
        }
        FControl::Quantum { y_register } => {
            let mut targets: Vec<usize> = Vec::new();
            for m in 0..y_register.width {
                if (y_raw >> m) & 1 == 1 {
                    targets.push(y_register.qubit(m));
                }
            }
            if (y_raw >> y_register.width) != 0 {
                return Err(Error::OracleOutputTooWide {
                    value: y_raw,
                    width: y_register.width,
                });
            }
            if !targets.is_empty() {
                state.apply_gate(&Gate::X, &targets, &[])?;
            }
            fourier_add_register(state, y_register, dot_register, Sign::Subtract)?;
            if !targets.is_empty() {
                state.apply_gate(&Gate::X, &targets, &[])?;
            }
        }
    }
    fourier_add_const(state, dot_register, b_raw, Sign::Add)?;
    Ok(overflow)
}

fn scaled_bounds(codec: FixedPoint) -> (i64, i64) {
    let (lo, hi) = codec.range();
    let s = (codec.frac_bits as f64).exp2();
    ((lo * s).round() as i64, (hi * s).round() as i64)
}
