use serde::{Deserialize, Serialize};

use super::angle_tree::AngleTree;
use crate::arith::FixedPoint;
use crate::error::{Error, Result};
use crate::qsim::{Circuit, Gate, OracleMode, QubitRange, StateVector, CLEAN_TOL};

/// Slack allowed on |scale * value| <= 1 before a scale is rejected.
pub const SCALE_TOL: f64 = 1e-12;

/// How the parameter vector is loaded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamEncoding {
    /// Oracle lookup plus controlled rotation, like the data rows:
    /// (1/sqrt D) sum_j |j>(sqrt(1 - (c2 w^j)^2)|0> + c2 w^j |1>).
    QramRotation,
    /// Angle-tree rotations: sum_j c2 w^j |j> |1>.
    #[default]
    AngleTree,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingConstants {
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub method: ParamEncoding,
    /// Preset scale for F values; derived from the data when absent.
    #[serde(default)]
    pub c3: Option<f64>,
    #[serde(default = "default_codec")]
    pub codec: FixedPoint,
}

fn default_codec() -> FixedPoint {
    FixedPoint {
        q: 12,
        frac_bits: 7,
        signed: true,
    }
}

impl EncodingConstants {
    pub fn new(c1: f64, c2: f64, method: ParamEncoding) -> Self {
        EncodingConstants {
            c1,
            c2,
            method,
            c3: None,
            codec: default_codec(),
        }
    }

    /// c1 = 1 / max |x_i^j| and c2 = 1 / |w|.
    pub fn from_data(rows: &[Vec<f64>], w: &[f64], method: ParamEncoding) -> Result<Self> {
        let max = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if max == 0.0 || norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self::new(1.0 / max, 1.0 / norm, method))
    }

    pub fn with_c3(mut self, c3: f64) -> Self {
        self.c3 = Some(c3);
        self
    }

    pub fn with_codec(mut self, codec: FixedPoint) -> Self {
        self.codec = codec;
        self
    }

    /// sqrt(D) c2 for the angle tree, c2 for the rotation method.
    pub fn c2_prime(&self, dim: usize) -> f64 {
        match self.method {
            ParamEncoding::AngleTree => (dim as f64).sqrt() * self.c2,
            ParamEncoding::QramRotation => self.c2,
        }
    }

    pub fn check_data(&self, x: &[f64]) -> Result<()> {
        check_scale(self.c1, x)
    }

    pub fn check_parameters(&self, w: &[f64]) -> Result<()> {
        let dim = w.len().max(2).next_power_of_two();
        let s = self.c2_prime(dim) / (dim as f64).sqrt();
        check_scale(s, w)
    }
}

pub(crate) fn check_scale(scale: f64, values: &[f64]) -> Result<()> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidArgument(format!("scale {scale} must be positive")));
    }
    match values.iter().find(|v| (scale * v.abs()) > 1.0 + SCALE_TOL || !v.is_finite()) {
        Some(&value) => Err(Error::ScaleViolation { scale, value }),
        None => Ok(()),
    }
}

/// Register width for a vector of length `len`: log2 of the padded size, at least 1.
pub fn index_width(len: usize) -> usize {
    len.max(2).next_power_of_two().trailing_zeros() as usize
}

fn padded(values: &[f64], width: usize) -> Result<Vec<f64>> {
    let dim = 1usize << width;
    if values.len() > dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: values.len(),
        });
    }
    let mut v = values.to_vec();
    v.resize(dim, 0.0);
    Ok(v)
}

fn clamp_unit(a: f64) -> f64 {
    a.clamp(-1.0, 1.0)
}

/// H on `index`, then a rotation of `flag` selected by the index value:
/// (1/sqrt D) sum_j |j> (sqrt(1 - (s v_j)^2)|0> + s v_j |1>).
pub fn rotation_encoding_circuit(values: &[f64], scale: f64, index: QubitRange, flag: usize) -> Result<Circuit> {
    check_scale(scale, values)?;
    let v = padded(values, index.width)?;
    let mut c = Circuit::new(index.end().max(flag + 1));
    c.gate(Gate::H, &index.qubits().collect::<Vec<_>>(), &[]);
    let gates = v.iter().map(|x| Gate::amplitude_rotation(clamp_unit(scale * x))).collect();
    c.multiplexed(index, flag, &[], gates);
    Ok(c)
}

/// Data state |phi(x)> with register `j` low and `flag` above it.
pub fn prepare_data_state(x: &[f64], c1: f64) -> Result<StateVector> {
    let l = index_width(x.len());
    rotation_encoding_circuit(x, c1, QubitRange::new(0, l), l)?
        .prepare()?
        .with_register("j", 0, l)?
        .with_register("flag", l, 1)
}

/// Data state built through a q-qubit value register: O_X writes the
/// encoded x^j, a rotation reads it, O_X runs again to clear it, and the
/// cleared register is dropped. Amplitudes follow the quantized values.
pub fn prepare_data_state_with_register(x: &[f64], c1: f64, codec: FixedPoint) -> Result<StateVector> {
    check_scale(c1, x)?;
    let l = index_width(x.len());
    let q = codec.q as usize;
    let v = padded(x, l)?;
    let raw: Vec<u64> = v.iter().map(|e| codec.encode(*e)).collect::<Result<_>>()?;
    let j = QubitRange::new(0, l);
    let work = QubitRange::new(l, q);
    let flag = l + q;
    let mut s = StateVector::zero(l + q + 1)
        .with_register("j", 0, l)?
        .with_register("work", l, q)?
        .with_register("flag", flag, 1)?;
    s.apply_gate(&Gate::H, &j.qubits().collect::<Vec<_>>(), &[])?;
    let lookup = |i: u64| raw[i as usize];
    s.apply_basis_oracle(lookup, j, work, OracleMode::Xor)?;
    s.apply_multiplexed(work, flag, &[], |r| {
        Gate::amplitude_rotation(clamp_unit(c1 * codec.decode(r)))
    })?;
    s.apply_basis_oracle(lookup, j, work, OracleMode::Xor)?;
    s.discard_zero_register(work, CLEAN_TOL)
}

/// Parameter-loading circuit on (`index`, `flag`) for either method.
pub fn parameter_circuit(w: &[f64], constants: &EncodingConstants, index: QubitRange, flag: usize) -> Result<Circuit> {
    match constants.method {
        ParamEncoding::QramRotation => rotation_encoding_circuit(w, constants.c2, index, flag),
        ParamEncoding::AngleTree => {
            let tree = AngleTree::build_padded(w, 1 << index.width)?;
            let mut c = Circuit::new(index.end().max(flag + 1));
            c.append(&tree.circuit(index)?);
            c.gate(Gate::X, &[flag], &[]);
            Ok(c)
        }
    }
}

/// Rotation-method parameter state (the oracle variant of parameter loading).
pub fn prepare_parameter_state_qram(w: &[f64], c2: f64) -> Result<StateVector> {
    prepare_data_state(w, c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prep::prepare_parameter_state;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn data_state_example() {
        let s = prepare_data_state(&[2.0, 3.464], 0.25).unwrap();
        let r = 0.5f64.sqrt();
        assert_abs_diff_eq!(s.amplitude(0b10).re, r * 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(s.amplitude(0b11).re, r * 0.866, epsilon = 1e-10);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_data_stays_on_flag_zero() {
        let s = prepare_data_state(&[0.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(s.amplitude(0b10).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(0b11).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn scale_violation_rejected() {
        assert!(matches!(
            prepare_data_state(&[2.0, 5.0], 0.25),
            Err(Error::ScaleViolation { .. })
        ));
    }

    #[test]
    fn register_path_matches_exact_path_on_quantized_data() {
        let codec = FixedPoint::new(8, 5, true).unwrap();
        let x = [2.0, 3.464, -1.3, 0.25];
        let c1 = 1.0 / 3.5;
        let via_reg = prepare_data_state_with_register(&x, c1, codec).unwrap();
        let xq: Vec<f64> = x.iter().map(|v| codec.quantize(*v).unwrap()).collect();
        let exact = prepare_data_state(&xq, c1).unwrap();
        assert_eq!(via_reg.n_qubits(), exact.n_qubits());
        assert_eq!(via_reg.register("flag").unwrap(), exact.register("flag").unwrap());
        assert_abs_diff_eq!(via_reg.inner_product(&exact).unwrap().re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn c2_prime_by_method() {
        let a = EncodingConstants::new(0.25, 1.0, ParamEncoding::AngleTree);
        let b = EncodingConstants::new(0.25, 1.0, ParamEncoding::QramRotation);
        assert_abs_diff_eq!(a.c2_prime(4), 2.0);
        assert_abs_diff_eq!(b.c2_prime(4), 1.0);
    }

    #[test]
    fn from_data_constants() {
        let c = EncodingConstants::from_data(&[vec![2.0, 3.464], vec![-4.0, 1.0]], &[3.0, 4.0], ParamEncoding::AngleTree)
            .unwrap();
        assert_abs_diff_eq!(c.c1, 0.25);
        assert_abs_diff_eq!(c.c2, 0.2);
        c.check_parameters(&[3.0, 4.0]).unwrap();
    }

    proptest! {
        #[test]
        fn flag_projection_is_direction_of_x(x in prop::collection::vec(-3.0f64..3.0, 1..9)) {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let c1 = 1.0 / x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let s = prepare_data_state(&x, c1).unwrap();
            let flag = s.register("flag").unwrap().start;
            let proj: Vec<f64> = (0..1usize << flag).map(|j| s.amplitude(j | 1 << flag).re).collect();
            let pnorm = proj.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (j, v) in x.iter().enumerate() {
                prop_assert!((proj[j] / pnorm - v / norm).abs() < 1e-10);
            }
        }

        #[test]
        fn method_one_restricted_to_flag_matches_method_two(w in prop::collection::vec(-3.0f64..3.0, 2..9)) {
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let one = prepare_parameter_state_qram(&w, 1.0 / norm).unwrap();
            let two = prepare_parameter_state(&AngleTree::build(&w).unwrap()).unwrap();
            let d = (1usize << index_width(w.len())) as f64;
            let flag = 1usize << index_width(w.len());
            for j in 0..flag {
                prop_assert!((one.amplitude(j | flag).re - two.amplitude(j | flag).re / d.sqrt()).abs() < 1e-10);
            }
        }
    }
}
