use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNITARY_TOL: f64 = 1e-10;

/// A checked 2x2 unitary, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix2([[Complex64; 2]; 2]);

impl Matrix2 {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let m = Matrix2(entries);
        let deviation = m.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(m)
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Matrix2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn mul(&self, rhs: &Matrix2) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Matrix2(out)
    }

    /// max |(U^dagger U - I)_rc|
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut dev: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((p.0[r][c] - Complex64::new(id, 0.0)).norm());
            }
        }
        dev
    }
}

/// Single-qubit gates used by the circuits in this crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    H,
    X,
    Z,
    /// diag(1, e^{i lambda})
    Phase { lambda: f64 },
    /// Real rotation [[cos t/2, -sin t/2], [sin t/2, cos t/2]].
    Ry { theta: f64 },
    /// diag(1, e^{-2 pi i / 2^k}); the subtraction rotation of the Fourier adder.
    Rk { k: u32 },
    /// diag(1, e^{+2 pi i / 2^k}); adjoint of `Rk`.
    RkDagger { k: u32 },
    /// General single-qubit unitary
    /// [[cos(g/2), -e^{i l} sin(g/2)], [e^{i p} sin(g/2), e^{i(p+l)} cos(g/2)]].
    U { gamma: f64, phi: f64, lambda: f64 },
    Custom(Matrix2),
}

impl Gate {
    pub fn matrix(&self) -> Matrix2 {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let m = match *self {
            Gate::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
            }
            Gate::X => [[zero, one], [one, zero]],
            Gate::Z => [[one, zero], [zero, -one]],
            Gate::Phase { lambda } => [[one, zero], [zero, Complex64::from_polar(1.0, lambda)]],
            Gate::Ry { theta } => {
                let (s, co) = (theta / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            Gate::Rk { k } => [
                [one, zero],
                [zero, Complex64::from_polar(1.0, -2.0 * PI / 2f64.powi(k as i32))],
            ],
            Gate::RkDagger { k } => [
                [one, zero],
                [zero, Complex64::from_polar(1.0, 2.0 * PI / 2f64.powi(k as i32))],
            ],
            Gate::U { gamma, phi, lambda } => {
                let (s, co) = (gamma / 2.0).sin_cos();
                [
                    [c(co, 0.0), -Complex64::from_polar(s, lambda)],
                    [Complex64::from_polar(s, phi), Complex64::from_polar(co, phi + lambda)],
                ]
            }
            Gate::Custom(m) => return m,
        };
        Matrix2(m)
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::H | Gate::X | Gate::Z => *self,
            Gate::Phase { lambda } => Gate::Phase { lambda: -lambda },
            Gate::Ry { theta } => Gate::Ry { theta: -theta },
            Gate::Rk { k } => Gate::RkDagger { k },
            Gate::RkDagger { k } => Gate::Rk { k },
            Gate::U { .. } | Gate::Custom(_) => Gate::Custom(self.matrix().adjoint()),
        }
    }

    /// Ry rotation taking |0> to sqrt(1 - a^2)|0> + a|1>, for a in [-1, 1].
    pub fn amplitude_rotation(a: f64) -> Gate {
        Gate::Ry {
            theta: 2.0 * a.clamp(-1.0, 1.0).asin(),
        }
    }

    /// Ry rotation taking |0> to a|0> + sqrt(1 - a^2)|1>, for a in [-1, 1].
    pub fn cosine_rotation(a: f64) -> Gate {
        Gate::Ry {
            theta: 2.0 * a.clamp(-1.0, 1.0).acos(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_gates() -> Vec<Gate> {
        vec![
            Gate::H,
            Gate::X,
            Gate::Z,
            Gate::Phase { lambda: 0.7 },
            Gate::Ry { theta: 2.0 * PI / 3.0 },
            Gate::Rk { k: 3 },
            Gate::RkDagger { k: 5 },
            Gate::U {
                gamma: 1.1,
                phi: -0.4,
                lambda: 2.3,
            },
        ]
    }

    #[test]
    fn every_gate_is_unitary() {
        for g in all_gates() {
            assert!(g.matrix().unitarity_deviation() < 1e-12, "{g:?}");
            let prod = g.adjoint().matrix().mul(&g.matrix());
            assert!((prod.entries()[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(prod.entries()[0][1].norm() < 1e-12);
        }
    }

    #[test]
    fn custom_rejects_non_unitary() {
        let one = Complex64::new(1.0, 0.0);
        let err = Matrix2::new([[one, one], [one, one]]).unwrap_err();
        assert!(matches!(err, Error::NotUnitary { .. }));
    }

    #[test]
    fn u_gate_matches_ry_when_phases_vanish() {
        let a = Gate::U {
            gamma: 0.9,
            phi: 0.0,
            lambda: 0.0,
        }
        .matrix();
        let b = Gate::Ry { theta: 0.9 }.matrix();
        for r in 0..2 {
            for c in 0..2 {
                assert!((a.entries()[r][c] - b.entries()[r][c]).norm() < 1e-15);
            }
        }
    }
}
