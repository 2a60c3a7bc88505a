use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gate::Gate;
use super::state::{QubitRange, StateVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Gate {
        gate: Gate,
        targets: Vec<usize>,
        controls: Vec<usize>,
    },
    /// `gates[v]` acts on `target` when `select` holds v.
    Multiplexed {
        select: QubitRange,
        target: usize,
        controls: Vec<usize>,
        gates: Vec<Gate>,
    },
    Qft {
        register: QubitRange,
        inverse: bool,
    },
}

impl Op {
    fn inverse(&self) -> Op {
        match self {
            Op::Gate {
                gate,
                targets,
                controls,
            } => Op::Gate {
                gate: gate.adjoint(),
                targets: targets.clone(),
                controls: controls.clone(),
            },
            Op::Multiplexed {
                select,
                target,
                controls,
                gates,
            } => Op::Multiplexed {
                select: *select,
                target: *target,
                controls: controls.clone(),
                gates: gates.iter().map(Gate::adjoint).collect(),
            },
            Op::Qft { register, inverse } => Op::Qft {
                register: *register,
                inverse: !inverse,
            },
        }
    }

    fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            Op::Gate {
                gate,
                targets,
                controls,
            } => state.apply_gate(gate, targets, controls),
            Op::Multiplexed {
                select,
                target,
                controls,
                gates,
            } => {
                if gates.len() != select.size() {
                    return Err(Error::DimensionMismatch {
                        expected: select.size(),
                        got: gates.len(),
                    });
                }
                state.apply_multiplexed(*select, *target, controls, |v| gates[v as usize])
            }
            Op::Qft { register, inverse } => state.apply_qft(*register, *inverse),
        }
    }

    fn with_extra_control(&self, control: usize) -> Op {
        let mut op = self.clone();
        match &mut op {
            Op::Gate { controls, .. } | Op::Multiplexed { controls, .. } => controls.push(control),
            Op::Qft { .. } => unreachable!("controlled QFT is expanded before use"),
        }
        op
    }
}

/// A gate sequence on a fixed number of qubits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn push(&mut self, op: Op) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn gate(&mut self, gate: Gate, targets: &[usize], controls: &[usize]) -> &mut Self {
        self.push(Op::Gate {
            gate,
            targets: targets.to_vec(),
            controls: controls.to_vec(),
        })
    }

    pub fn multiplexed(
        &mut self,
        select: QubitRange,
        target: usize,
        controls: &[usize],
        gates: Vec<Gate>,
    ) -> &mut Self {
        self.push(Op::Multiplexed {
            select,
            target,
            controls: controls.to_vec(),
            gates,
        })
    }

    /// Appends `other` with every op additionally conditioned on `control`
    /// being |1> (or |0> when `on_zero`).
    pub fn controlled(&mut self, other: &Circuit, control: usize, on_zero: bool) -> &mut Self {
        if on_zero {
            self.gate(Gate::X, &[control], &[]);
        }
        for op in &other.ops {
            match op {
                Op::Qft { register, inverse } => {
                    for e in expand_qft(*register, *inverse) {
                        self.ops.push(e.with_extra_control(control));
                    }
                }
                _ => self.ops.push(op.with_extra_control(control)),
            }
        }
        if on_zero {
            self.gate(Gate::X, &[control], &[]);
        }
        self
    }

    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        self.ops.extend(other.ops.iter().cloned());
        self
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(Op::inverse).collect(),
        }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() < self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        self.ops.iter().try_for_each(|op| op.apply(state))
    }

    /// Runs the circuit on |0...0>.
    pub fn prepare(&self) -> Result<StateVector> {
        let mut s = StateVector::zero(self.n_qubits);
        self.apply(&mut s)?;
        Ok(s)
    }

    /// Dense matrix of the circuit, column k = circuit|k>.
    pub fn unitary(&self) -> Result<DMatrix<Complex64>> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut s = StateVector::basis(self.n_qubits, k as u64)?;
            self.apply(&mut s)?;
            for (r, a) in s.amplitudes().iter().enumerate() {
                m[(r, k)] = *a;
            }
        }
        Ok(m)
    }
}

/// Elementary-gate form of a (possibly inverse) QFT on `register`.
fn expand_qft(register: QubitRange, inverse: bool) -> Vec<Op> {
    let w = register.width;
    let mut forward = Vec::new();
    for j in (0..w).rev() {
        forward.push(Op::Gate {
            gate: Gate::H,
            targets: vec![register.qubit(j)],
            controls: vec![],
        });
        for k in (0..j).rev() {
            forward.push(Op::Gate {
                gate: Gate::Phase {
                    lambda: std::f64::consts::PI / (1u64 << (j - k)) as f64,
                },
                targets: vec![register.qubit(j)],
                controls: vec![register.qubit(k)],
            });
        }
    }
    // swap(a, b) = CX(a,b) CX(b,a) CX(a,b)
    for i in 0..w / 2 {
        let (a, b) = (register.qubit(i), register.qubit(w - 1 - i));
        for (t, c) in [(a, b), (b, a), (a, b)] {
            forward.push(Op::Gate {
                gate: Gate::X,
                targets: vec![t],
                controls: vec![c],
            });
        }
    }
    if inverse {
        forward.iter().rev().map(Op::inverse).collect()
    } else {
        forward
    }
}
