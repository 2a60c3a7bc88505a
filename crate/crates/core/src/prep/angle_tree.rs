use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Circuit, Gate, QubitRange, StateVector};

/// Binary tree of partial 2-norms of a parameter vector and the rotation
/// angles that load it into amplitudes.
///
/// `h[t]` holds the 2^t node values of level t; the leaves `h[L]` are the
/// (zero-padded) vector itself, every inner node is the 2-norm of its two
/// children. `angles[t - 1][j]` is atan2(h[t][2j+1], h[t][2j]), so leaf
/// signs ride on the last level of angles and inner nodes stay nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleTree {
    depth: usize,
    h: Vec<Vec<f64>>,
    angles: Vec<Vec<f64>>,
    original_len: usize,
}

impl AngleTree {
    /// Pads `w` with zeros to the next power of two (at least 2).
    pub fn build(w: &[f64]) -> Result<Self> {
        let dim = w.len().max(2).next_power_of_two();
        Self::build_padded(w, dim)
    }

    /// Pads `w` with zeros to `dim`, which must be a power of two >= len(w).
    pub fn build_padded(w: &[f64], dim: usize) -> Result<Self> {
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::NotPowerOfTwo(dim));
        }
        if w.len() > dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector);
        }
        if let Some(bad) = w.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite parameter {bad}")));
        }
        let depth = dim.trailing_zeros() as usize;
        let mut leaves = w.to_vec();
        leaves.resize(dim, 0.0);
        let mut h = vec![Vec::new(); depth + 1];
        h[depth] = leaves;
        for t in (1..=depth).rev() {
            h[t - 1] = h[t].chunks(2).map(|c| c[0].hypot(c[1])).collect();
        }
        let angles = (1..=depth)
            .map(|t| h[t].chunks(2).map(|c| c[1].atan2(c[0])).collect())
            .collect();
        Ok(AngleTree {
            depth,
            h,
            angles,
            original_len: w.len(),
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        1 << self.depth
    }

    /// True when zeros were appended to reach a power of two.
    pub fn padded(&self) -> bool {
        self.original_len != self.dim()
    }

    pub fn norm(&self) -> f64 {
        self.h[0][0]
    }

    pub fn level(&self, t: usize) -> &[f64] {
        &self.h[t]
    }

    /// Angles of level t, for t in 1..=depth.
    pub fn angles(&self, t: usize) -> &[f64] {
        &self.angles[t - 1]
    }

    pub fn leaves(&self) -> &[f64] {
        &self.h[self.depth]
    }

    /// Top-down recombination: h[t][2j] = h[t-1][j] cos, h[t][2j+1] = h[t-1][j] sin.
    pub fn recombine(&self) -> Vec<f64> {
        let mut level = vec![self.norm()];
        for t in 1..=self.depth {
            level = level
                .iter()
                .zip(self.angles(t))
                .flat_map(|(&v, &a)| [v * a.cos(), v * a.sin()])
                .collect();
        }
        level
    }

    /// U(angles_L) ... U(angles_1) on `register`. Level t rotates bit L - t
    /// with R(angle) = Ry(2 angle), selected by the t - 1 bits above it.
    pub fn circuit(&self, register: QubitRange) -> Result<Circuit> {
        if register.width != self.depth {
            return Err(Error::DimensionMismatch {
                expected: self.depth,
                got: register.width,
            });
        }
        let mut c = Circuit::new(register.end());
        let l = self.depth;
        for t in 1..=l {
            let target = register.qubit(l - t);
            let gates: Vec<Gate> = self.angles(t).iter().map(|a| Gate::Ry { theta: 2.0 * a }).collect();
            if t == 1 {
                c.gate(gates[0], &[target], &[]);
            } else {
                let select = QubitRange::new(register.qubit(l - t + 1), t - 1);
                c.multiplexed(select, target, &[], gates);
            }
        }
        Ok(c)
    }
}

/// Alias of [`AngleTree::build_padded`].
pub fn build_angle_tree(w: &[f64], dim: usize) -> Result<AngleTree> {
    AngleTree::build_padded(w, dim)
}

/// Parameter state sum_j (w^j / |w|) |j> |1>: register `j` on the low
/// qubits, `flag` above it.
pub fn prepare_parameter_state(tree: &AngleTree) -> Result<StateVector> {
    let l = tree.depth();
    let mut c = Circuit::new(l + 1);
    c.append(&tree.circuit(QubitRange::new(0, l))?);
    c.gate(Gate::X, &[l], &[]);
    c.prepare()?.with_register("j", 0, l)?.with_register("flag", l, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn two_dimensional_weight() {
        let t = AngleTree::build(&[0.866, 0.5]).unwrap();
        assert_abs_diff_eq!(t.norm(), 0.866f64.hypot(0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(t.angles(1)[0], PI / 6.0, epsilon = 1e-4);
        let s = prepare_parameter_state(&t).unwrap();
        // flag is qubit 1: |0>|1> is index 2, |1>|1> is index 3
        assert_abs_diff_eq!(s.amplitude(2).re, 0.866 / t.norm(), epsilon = 1e-10);
        assert_abs_diff_eq!(s.amplitude(3).re, 0.5 / t.norm(), epsilon = 1e-10);
    }

    #[test]
    fn pythagorean_triple() {
        let t = AngleTree::build(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(t.norm(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.angles(1)[0].cos(), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(t.angles(1)[0].sin(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn basis_aligned_vectors() {
        let t = AngleTree::build(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(t.angles(1).iter().chain(t.angles(2)).all(|a| *a == 0.0));
        let t = AngleTree::build(&[1.0, 0.0]).unwrap();
        let s = prepare_parameter_state(&t).unwrap();
        assert_abs_diff_eq!(s.amplitude(0b10).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn four_dimensional_example() {
        let w = [0.3, -1.2, 2.0, 0.7];
        let t = AngleTree::build(&w).unwrap();
        let n = t.norm();
        let s = prepare_parameter_state(&t).unwrap();
        for (j, v) in w.iter().enumerate() {
            assert_abs_diff_eq!(s.amplitude(j | 0b100).re, v / n, epsilon = 1e-10);
            assert_abs_diff_eq!(s.amplitude(j).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_vector_rejected_and_padding() {
        assert!(matches!(AngleTree::build(&[0.0, 0.0]), Err(Error::ZeroVector)));
        let t = AngleTree::build(&[1.0, 2.0, 2.0]).unwrap();
        assert_eq!(t.dim(), 4);
        assert!(t.padded());
        assert!(build_angle_tree(&[1.0, 2.0, 3.0], 3).is_err());
    }

    proptest! {
        #[test]
        fn tree_invariants(w in prop::collection::vec(-10.0f64..10.0, 1..17)) {
            prop_assume!(w.iter().any(|v| v.abs() > 1e-6));
            let t = AngleTree::build(&w).unwrap();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((t.norm() - norm).abs() < 1e-10);
            for lvl in 1..=t.depth() {
                for (j, parent) in t.level(lvl - 1).iter().enumerate() {
                    let (a, b) = (t.level(lvl)[2 * j], t.level(lvl)[2 * j + 1]);
                    prop_assert!((a * a + b * b - parent * parent).abs() < 1e-10);
                }
            }
            for (r, v) in t.recombine().iter().zip(t.leaves()) {
                prop_assert!((r - v).abs() < 1e-10);
            }
        }

        #[test]
        fn parameter_state_amplitudes(w in prop::collection::vec(-5.0f64..5.0, 2..9)) {
            prop_assume!(w.iter().any(|v| v.abs() > 1e-6));
            let t = AngleTree::build(&w).unwrap();
            let s = prepare_parameter_state(&t).unwrap();
            let flag = t.dim();
            for (j, v) in t.leaves().iter().enumerate() {
                prop_assert!((s.amplitude(j | flag).re - v / t.norm()).abs() < 1e-10);
            }
        }
    }
}
