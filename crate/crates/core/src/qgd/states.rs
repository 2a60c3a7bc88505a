use serde::{Deserialize, Serialize};

use crate::arith::{fourier_add_const, fourier_add_indexed, FixedPoint, Sign};
use crate::error::{Error, Result};
use crate::prep::{index_width, AngleTree};
use crate::qsim::{Circuit, Gate, OracleMode, QubitRange, StateVector, CLEAN_TOL};

/// (1/sqrt M) sum_{i<M} |i> on `index`.
fn uniform_index_circuit(m: usize, index: QubitRange) -> Result<Circuit> {
    let tree = AngleTree::build_padded(&vec![1.0; m], 1 << index.width)?;
    tree.circuit(index)
}

fn check_unit(scale: f64, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| (scale * v.abs()) > 1.0 + crate::prep::SCALE_TOL) {
        Some(&value) => Err(Error::ScaleViolation { scale, value }),
        None => Ok(()),
    }
}

fn named(s: StateVector, m: usize, second: &str, third: &str) -> Result<StateVector> {
    s.with_register("i", 0, m)?
        .with_register(second, m, 1)?
        .with_register(third, m + 1, 1)
}

/// |psi> = (1/sqrt M) sum_i |i> (c3 F_i |0> + sqrt(1 - (c3 F_i)^2) |1>) |1>,
/// registers `i`, `phi`, `flag`.
pub fn build_psi_state(f_values: &[f64], c3: f64) -> Result<StateVector> {
    check_unit(c3, f_values)?;
    let m = index_width(f_values.len());
    let index = QubitRange::new(0, m);
    let mut gates: Vec<Gate> = f_values.iter().map(|f| Gate::cosine_rotation((c3 * f).clamp(-1.0, 1.0))).collect();
    gates.resize(1 << m, Gate::cosine_rotation(1.0));
    let mut c = Circuit::new(m + 2);
    c.append(&uniform_index_circuit(f_values.len(), index)?);
    c.multiplexed(index, m, &[], gates);
    c.gate(Gate::X, &[m + 1], &[]);
    named(c.prepare()?, m, "phi", "flag")
}

/// |chi^j> = (1/sqrt M) sum_i |i> |0> (sqrt(1 - (c1 x_i^j)^2)|0> + c1 x_i^j |1>),
/// registers `i`, `zero`, `rot`.
pub fn build_chi_state(j: usize, rows: &[Vec<f64>], c1: f64) -> Result<StateVector> {
    let column = column(rows, j)?;
    check_unit(c1, &column)?;
    let m = index_width(rows.len());
    let index = QubitRange::new(0, m);
    let mut gates: Vec<Gate> = column.iter().map(|x| Gate::amplitude_rotation((c1 * x).clamp(-1.0, 1.0))).collect();
    gates.resize(1 << m, Gate::amplitude_rotation(0.0));
    let mut c = Circuit::new(m + 2);
    c.append(&uniform_index_circuit(rows.len(), index)?);
    c.multiplexed(index, m + 1, &[], gates);
    named(c.prepare()?, m, "zero", "rot")
}

/// [`build_chi_state`] through a value register: O_X writes the encoded
/// x_i^j, the rotation reads it, O_X clears it and the register is dropped.
pub fn build_chi_state_with_register(j: usize, rows: &[Vec<f64>], c1: f64, codec: FixedPoint) -> Result<StateVector> {
    let column = column(rows, j)?;
    check_unit(c1, &column)?;
    let m = index_width(rows.len());
    let q = codec.q as usize;
    let index = QubitRange::new(0, m);
    let work = QubitRange::new(m, q);
    let rot = m + q + 1;
    let mut raw = column.iter().map(|v| codec.encode(*v)).collect::<Result<Vec<u64>>>()?;
    raw.resize(1 << m, 0);
    let mut s = StateVector::zero(m + q + 2).with_register("work", m, q)?;
    uniform_index_circuit(rows.len(), index)?.apply(&mut s)?;
    let lookup = |i: u64| raw[i as usize];
    s.apply_basis_oracle(lookup, index, work, OracleMode::Xor)?;
    s.apply_multiplexed(work, rot, &[], |r| {
        Gate::amplitude_rotation((c1 * codec.decode(r)).clamp(-1.0, 1.0))
    })?;
    s.apply_basis_oracle(lookup, index, work, OracleMode::Xor)?;
    let s = s.discard_zero_register(work, CLEAN_TOL)?;
    named(s, m, "zero", "rot")
}

fn column(rows: &[Vec<f64>], j: usize) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("dataset has no rows".into()));
    }
    rows.iter()
        .map(|r| {
            r.get(j).copied().ok_or(Error::DimensionMismatch {
                expected: j + 1,
                got: r.len(),
            })
        })
        .collect()
}

/// Writes encoded F_i = x_i.w + b - y_i into `f_reg` for each index value:
/// an oracle lookup of the recovered inner product, an indexed Fourier
/// subtraction of y_i, and a constant Fourier addition of b.
pub fn compute_f_register(
    state: &mut StateVector,
    index: QubitRange,
    f_reg: QubitRange,
    dots: &[f64],
    ys: &[f64],
    b: f64,
    codec: FixedPoint,
) -> Result<()> {
    let (dot_raw, y_raw, b_raw) = f_tables(index, dots, ys, b, codec)?;
    state.apply_basis_oracle(|i| dot_raw[i as usize], index, f_reg, OracleMode::Xor)?;
    fourier_add_indexed(state, index, f_reg, |i| y_raw[i as usize], Sign::Subtract)?;
    fourier_add_const(state, f_reg, b_raw, Sign::Add)
}

/// Inverse of [`compute_f_register`].
pub fn uncompute_f_register(
    state: &mut StateVector,
    index: QubitRange,
    f_reg: QubitRange,
    dots: &[f64],
    ys: &[f64],
    b: f64,
    codec: FixedPoint,
) -> Result<()> {
    let (dot_raw, y_raw, b_raw) = f_tables(index, dots, ys, b, codec)?;
    fourier_add_const(state, f_reg, b_raw, Sign::Subtract)?;
    fourier_add_indexed(state, index, f_reg, |i| y_raw[i as usize], Sign::Add)?;
    state.apply_basis_oracle(|i| dot_raw[i as usize], index, f_reg, OracleMode::Xor)
}

type Tables = (Vec<u64>, Vec<u64>, u64);

fn f_tables(index: QubitRange, dots: &[f64], ys: &[f64], b: f64, codec: FixedPoint) -> Result<Tables> {
    if dots.len() != ys.len() || dots.len() > index.size() {
        return Err(Error::DimensionMismatch {
            expected: dots.len(),
            got: ys.len(),
        });
    }
    let enc = |v: &f64, i: usize| codec.encode(*v).map_err(|e| e.in_sample(i));
    let mut dot_raw = dots.iter().enumerate().map(|(i, v)| enc(v, i)).collect::<Result<Vec<_>>>()?;
    let mut y_raw = ys.iter().enumerate().map(|(i, v)| enc(v, i)).collect::<Result<Vec<_>>>()?;
    dot_raw.resize(index.size(), 0);
    y_raw.resize(index.size(), 0);
    Ok((dot_raw, y_raw, codec.encode(b)?))
}

/// Value held by `f_reg` on the branch `index = i`, for i < count. Fails
/// if a branch is not a single basis value.
pub fn read_f_register(
    state: &StateVector,
    index: QubitRange,
    f_reg: QubitRange,
    count: usize,
    codec: FixedPoint,
) -> Result<Vec<f64>> {
    let mut found: Vec<Option<(u64, f64)>> = vec![None; count];
    for (k, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p < 1e-20 {
            continue;
        }
        let i = index.extract(k) as usize;
        if i >= count {
            continue;
        }
        let v = f_reg.extract(k);
        match found[i] {
            Some((prev, _)) if prev != v => {
                return Err(Error::InvalidArgument(format!("F register is not classical on branch {i}")))
            }
            _ => found[i] = Some((v, p)),
        }
    }
    found
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.map(|(v, _)| codec.decode(v))
                .ok_or_else(|| Error::InvalidArgument(format!("branch {i} has no weight")))
        })
        .collect()
}

/// Coherent construction of |psi>: F register computed by Fourier
/// arithmetic, a rotation driven by it, then uncomputation. Returns the
/// state on (`i`, `phi`, `flag`) and the F values the register held.
pub fn build_psi_state_coherent(
    dots: &[f64],
    ys: &[f64],
    b: f64,
    c3: Option<f64>,
    codec: FixedPoint,
) -> Result<(StateVector, Vec<f64>, f64)> {
    let count = dots.len();
    let m = index_width(count);
    let q = codec.q as usize;
    let index = QubitRange::new(0, m);
    let f_reg = QubitRange::new(m, q);
    let phi = m + q;
    let mut s = StateVector::zero(m + q + 2).with_register("f", m, q)?;
    uniform_index_circuit(count, index)?.apply(&mut s)?;
    compute_f_register(&mut s, index, f_reg, dots, ys, b, codec)?;
    let f_values = read_f_register(&s, index, f_reg, count, codec)?;
    let c3 = match c3 {
        Some(c) => {
            check_unit(c, &f_values)?;
            c
        }
        None => default_c3(&f_values),
    };
    s.apply_multiplexed(f_reg, phi, &[], |r| {
        Gate::cosine_rotation((c3 * codec.decode(r)).clamp(-1.0, 1.0))
    })?;
    uncompute_f_register(&mut s, index, f_reg, dots, ys, b, codec)?;
    let mut s = s.discard_zero_register(f_reg, CLEAN_TOL)?;
    s.apply_gate(&Gate::X, &[m + 1], &[])?;
    Ok((named(s, m, "phi", "flag")?, f_values, c3))
}

/// 1 / max|F|, or 1 when every F vanishes.
pub fn default_c3(f_values: &[f64]) -> f64 {
    let max = f_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        1.0 / max
    } else {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SwapReadout {
    Exact,
    Sampled { shots: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapOutcome {
    /// Estimated ancilla-0 probability.
    pub p: f64,
    /// Exact ancilla-0 probability.
    pub p_exact: f64,
    pub shots: Option<u64>,
}

/// Interferometric overlap test: (|0>|psi> + |1>|chi>)/sqrt 2, then H on the
/// ancilla, whose |0> probability is 1/2 + Re<psi|chi>/2.
pub fn swap_test(psi: &StateVector, chi: &StateVector, readout: SwapReadout, seed: u64) -> Result<SwapOutcome> {
    if psi.n_qubits() != chi.n_qubits() || psi.layout().len() != chi.layout().len() {
        return Err(Error::LayoutMismatch);
    }
    let pairs_match = psi
        .layout()
        .iter()
        .zip(chi.layout())
        .all(|(a, b)| a.range == b.range);
    if !pairs_match {
        return Err(Error::LayoutMismatch);
    }
    let n = psi.n_qubits();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let amps = psi
        .amplitudes()
        .iter()
        .chain(chi.amplitudes())
        .map(|a| a * r)
        .collect();
    let mut joint = StateVector::from_amplitudes(amps)?;
    joint.apply_gate(&Gate::H, &[n], &[])?;
    let ancilla = QubitRange::single(n);
    let p_exact = joint.marginal_probabilities(ancilla)?[0];
    match readout {
        SwapReadout::Exact => Ok(SwapOutcome {
            p: p_exact,
            p_exact,
            shots: None,
        }),
        SwapReadout::Sampled { shots } => {
            let h = joint.sample_measurement(ancilla, shots, seed)?;
            Ok(SwapOutcome {
                p: h.frequency(0),
                p_exact,
                shots: Some(shots),
            })
        }
    }
}
