use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gate::{Gate, Matrix2};
use super::histogram::Histogram;
use crate::error::{Error, Result};

/// Tolerance used when a register must be exactly |0> before it is dropped.
pub const CLEAN_TOL: f64 = 1e-20;

/// A contiguous block of qubits. Qubit `start` holds the least significant
/// bit of the register value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitRange {
    pub start: usize,
    pub width: usize,
}

impl QubitRange {
    pub const fn new(start: usize, width: usize) -> Self {
        QubitRange { start, width }
    }

    pub const fn single(qubit: usize) -> Self {
        QubitRange {
            start: qubit,
            width: 1,
        }
    }

    pub fn end(&self) -> usize {
        self.start + self.width
    }

    pub fn qubit(&self, i: usize) -> usize {
        debug_assert!(i < self.width);
        self.start + i
    }

    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }

    pub fn size(&self) -> usize {
        1usize << self.width
    }

    /// Bit mask of the register within a basis index.
    pub fn mask(&self) -> usize {
        ((1usize << self.width) - 1) << self.start
    }

    /// Register value encoded in `index`.
    #[inline]
    pub fn extract(&self, index: usize) -> u64 {
        ((index >> self.start) & ((1usize << self.width) - 1)) as u64
    }

    /// `index` with the register bits replaced by `value`.
    #[inline]
    pub fn insert(&self, index: usize, value: u64) -> usize {
        (index & !self.mask()) | ((value as usize) << self.start)
    }

    pub fn overlaps(&self, other: &QubitRange) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub range: QubitRange,
}

/// How a basis oracle combines f(a) with the output register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// |a>|b> -> |a>|b xor f(a)>
    Xor,
    /// |a>|b> -> |a>|(b + f(a)) mod 2^q>
    AddMod,
}

/// Dense pure state over `n_qubits` qubits, little-endian (qubit 0 is the
/// least significant bit of the basis index).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
    layout: Vec<Register>,
}

impl StateVector {
    /// |0...0>
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector {
            n_qubits,
            amplitudes,
            layout: Vec::new(),
        }
    }

    pub fn basis(n_qubits: usize, index: u64) -> Result<Self> {
        if index >= (1u64 << n_qubits) {
            return Err(Error::BasisIndexOutOfRange { index, n_qubits });
        }
        let mut s = Self::zero(n_qubits);
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index as usize] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps an amplitude vector; it must already be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
            layout: Vec::new(),
        })
    }

    /// Real amplitudes, normalized on the way in.
    pub fn from_real_unnormalized(values: &[f64]) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Self::from_amplitudes(
            values
                .iter()
                .map(|v| Complex64::new(v / norm, 0.0))
                .collect(),
        )
    }

    /// Names a register. Registers may not overlap.
    pub fn with_register(mut self, name: &str, start: usize, width: usize) -> Result<Self> {
        let range = QubitRange::new(start, width);
        if range.end() > self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: range.end().saturating_sub(1),
                n_qubits: self.n_qubits,
            });
        }
        if let Some(r) = self
            .layout
            .iter()
            .find(|r| r.name == name || (width > 0 && r.range.overlaps(&range)))
        {
            return Err(Error::InvalidArgument(format!(
                "register `{name}` collides with `{}`",
                r.name
            )));
        }
        self.layout.push(Register {
            name: name.to_string(),
            range,
        });
        Ok(self)
    }

    pub fn register(&self, name: &str) -> Result<QubitRange> {
        self.layout
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.range)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn layout(&self) -> &[Register] {
        &self.layout
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(Error::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_range(&self, r: QubitRange) -> Result<()> {
        if r.end() > self.n_qubits {
            Err(Error::QubitOutOfRange {
                qubit: r.end() - 1,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Validates that the listed qubits are in range and pairwise distinct,
    /// and returns their combined mask.
    fn distinct_mask(&self, qubits: impl IntoIterator<Item = usize>) -> Result<usize> {
        let mut mask = 0usize;
        for q in qubits {
            self.check_qubit(q)?;
            if mask & (1 << q) != 0 {
                return Err(Error::OverlappingQubits(q));
            }
            mask |= 1 << q;
        }
        Ok(mask)
    }

    fn control_mask(&self, controls: &[usize], busy: usize) -> Result<usize> {
        let mut mask = 0usize;
        for &c in controls {
            self.check_qubit(c)?;
            if (busy | mask) & (1 << c) != 0 {
                return Err(Error::OverlappingQubits(c));
            }
            mask |= 1 << c;
        }
        Ok(mask)
    }

    /// Applies `gate` to every qubit in `targets`, each conditioned on all
    /// `controls` being |1>.
    pub fn apply_gate(&mut self, gate: &Gate, targets: &[usize], controls: &[usize]) -> Result<()> {
        let tmask = self.distinct_mask(targets.iter().copied())?;
        let cmask = self.control_mask(controls, tmask)?;
        let m = gate.matrix();
        for &t in targets {
            self.apply_matrix2(&m, t, cmask);
        }
        Ok(())
    }

    #[inline]
    fn apply_matrix2(&mut self, m: &Matrix2, target: usize, cmask: usize) {
        let e = m.entries();
        let bit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | bit;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = e[0][0] * a0 + e[0][1] * a1;
            self.amplitudes[j] = e[1][0] * a0 + e[1][1] * a1;
        }
    }

    /// Uniformly controlled single-qubit gate: on the branch where `select`
    /// holds value v (and all `controls` are |1>), applies `gate_for(v)` to
    /// `target`.
    pub fn apply_multiplexed<F>(
        &mut self,
        select: QubitRange,
        target: usize,
        controls: &[usize],
        gate_for: F,
    ) -> Result<()>
    where
        F: Fn(u64) -> Gate,
    {
        self.check_range(select)?;
        let smask = self.distinct_mask(select.qubits().chain(std::iter::once(target)))?;
        let cmask = self.control_mask(controls, smask)?;
        let matrices: Vec<Matrix2> = (0..select.size() as u64)
            .map(|v| gate_for(v).matrix())
            .collect();
        let bit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 || i & cmask != cmask {
                continue;
            }
            let e = matrices[select.extract(i) as usize].entries();
            let j = i | bit;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = e[0][0] * a0 + e[0][1] * a1;
            self.amplitudes[j] = e[1][0] * a0 + e[1][1] * a1;
        }
        Ok(())
    }

    /// Applies a dense unitary on a contiguous register, optionally controlled.
    /// Matrix rows and columns are indexed by the register value.
    pub fn apply_unitary(
        &mut self,
        targets: QubitRange,
        u: &DMatrix<Complex64>,
        controls: &[usize],
    ) -> Result<()> {
        self.check_range(targets)?;
        let dim = targets.size();
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: u.nrows(),
            });
        }
        let tmask = targets.mask();
        let cmask = self.control_mask(controls, tmask)?;
        let mut buf = vec![Complex64::new(0.0, 0.0); dim];
        for base in 0..self.amplitudes.len() {
            if base & tmask != 0 || base & cmask != cmask {
                continue;
            }
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = self.amplitudes[base | (k << targets.start)];
            }
            for r in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, b) in buf.iter().enumerate() {
                    acc += u[(r, c)] * b;
                }
                self.amplitudes[base | (r << targets.start)] = acc;
            }
        }
        Ok(())
    }

    /// Multiplies each basis amplitude by e^{i phase(index)}.
    pub fn apply_diagonal_phase<F>(&mut self, phase: F)
    where
        F: Fn(usize) -> f64,
    {
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            let p = phase(i);
            if p != 0.0 {
                *a *= Complex64::from_polar(1.0, p);
            }
        }
    }

    /// Quantum Fourier transform on `register`, built from H, controlled
    /// phase and swap gates:
    /// |x> -> 2^{-w/2} sum_y e^{2 pi i x y / 2^w} |y>.
    pub fn apply_qft(&mut self, register: QubitRange, inverse: bool) -> Result<()> {
        self.check_range(register)?;
        let w = register.width;
        let sign = if inverse { -1.0 } else { 1.0 };
        let swaps = |s: &mut Self| -> Result<()> {
            for i in 0..w / 2 {
                s.swap(register.qubit(i), register.qubit(w - 1 - i))?;
            }
            Ok(())
        };
        if inverse {
            swaps(self)?;
            for j in 0..w {
                for k in 0..j {
                    let lambda = sign * PI / (1u64 << (j - k)) as f64;
                    self.apply_gate(
                        &Gate::Phase { lambda },
                        &[register.qubit(j)],
                        &[register.qubit(k)],
                    )?;
                }
                self.apply_gate(&Gate::H, &[register.qubit(j)], &[])?;
            }
        } else {
            for j in (0..w).rev() {
                self.apply_gate(&Gate::H, &[register.qubit(j)], &[])?;
                for k in (0..j).rev() {
                    let lambda = sign * PI / (1u64 << (j - k)) as f64;
                    self.apply_gate(
                        &Gate::Phase { lambda },
                        &[register.qubit(j)],
                        &[register.qubit(k)],
                    )?;
                }
            }
            swaps(self)?;
        }
        Ok(())
    }

    pub fn swap(&mut self, a: usize, b: usize) -> Result<()> {
        self.distinct_mask([a, b])?;
        let (ba, bb) = (1usize << a, 1usize << b);
        for i in 0..self.amplitudes.len() {
            if i & ba != 0 && i & bb == 0 {
                self.amplitudes.swap(i, (i & !ba) | bb);
            }
        }
        Ok(())
    }

    /// Basis-function oracle |a>|b> -> |a>|b (+) f(a)>. `f` is evaluated on
    /// every input value of `input`; any output wider than `output` is
    /// rejected before the state is touched.
    pub fn apply_basis_oracle<F>(
        &mut self,
        f: F,
        input: QubitRange,
        output: QubitRange,
        mode: OracleMode,
    ) -> Result<()>
    where
        F: Fn(u64) -> u64,
    {
        self.check_range(input)?;
        self.check_range(output)?;
        if input.overlaps(&output) {
            return Err(Error::OverlappingQubits(input.start.max(output.start)));
        }
        let table: Vec<u64> = (0..input.size() as u64).map(&f).collect();
        let out_size = output.size() as u64;
        if let Some(&value) = table.iter().find(|&&v| v >= out_size) {
            return Err(Error::OracleOutputTooWide {
                value,
                width: output.width,
            });
        }
        let mut next = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let fa = table[input.extract(i) as usize];
            let b = output.extract(i);
            let nb = match mode {
                OracleMode::Xor => b ^ fa,
                OracleMode::AddMod => (b + fa) % out_size,
            };
            next[output.insert(i, nb)] = *a;
        }
        self.amplitudes = next;
        Ok(())
    }

    /// Inverse of `apply_basis_oracle` for the same `f` and `mode`.
    pub fn apply_basis_oracle_inverse<F>(
        &mut self,
        f: F,
        input: QubitRange,
        output: QubitRange,
        mode: OracleMode,
    ) -> Result<()>
    where
        F: Fn(u64) -> u64,
    {
        match mode {
            OracleMode::Xor => self.apply_basis_oracle(f, input, output, mode),
            OracleMode::AddMod => {
                let size = output.size() as u64;
                self.check_range(output)?;
                self.apply_basis_oracle(
                    |a| {
                        let v = f(a);
                        if v >= size {
                            v
                        } else {
                            (size - v) % size
                        }
                    },
                    input,
                    output,
                    mode,
                )
            }
        }
    }

    /// Exact marginal distribution of `register`.
    pub fn marginal_probabilities(&self, register: QubitRange) -> Result<Vec<f64>> {
        self.check_range(register)?;
        let mut probs = vec![0.0; register.size()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            probs[register.extract(i) as usize] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Draws `shots` i.i.d. outcomes of `register` from its marginal.
    pub fn sample_measurement(&self, register: QubitRange, shots: u64, seed: u64) -> Result<Histogram> {
        let probs = self.marginal_probabilities(register)?;
        Histogram::sample(&probs, register.width, shots, seed)
    }

    /// <self|other>
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits || self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// self (x) high: `high` occupies the qubits above `self`. Register names
    /// of `high` are kept, shifted.
    pub fn tensor(&self, high: &StateVector) -> Result<StateVector> {
        let mut amplitudes = Vec::with_capacity(self.len() * high.len());
        for h in &high.amplitudes {
            for l in &self.amplitudes {
                amplitudes.push(l * h);
            }
        }
        let mut out = StateVector {
            n_qubits: self.n_qubits + high.n_qubits,
            amplitudes,
            layout: self.layout.clone(),
        };
        for r in &high.layout {
            out = out.with_register(&r.name, r.range.start + self.n_qubits, r.range.width)?;
        }
        Ok(out)
    }

    /// Drops `register`, which must be |0> (weight outside the zero branch
    /// below `tol`). Registers above it shift down; the dropped name is removed.
    pub fn discard_zero_register(&self, register: QubitRange, tol: f64) -> Result<StateVector> {
        self.check_range(register)?;
        let residual: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| register.extract(*i) != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if residual > tol {
            let name = self
                .layout
                .iter()
                .find(|r| r.range == register)
                .map(|r| r.name.clone())
                .unwrap_or_else(|| format!("q{}..{}", register.start, register.end()));
            return Err(Error::DirtyRegister { name, residual });
        }
        let n = self.n_qubits - register.width;
        let low_mask = (1usize << register.start) - 1;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (k, slot) in amplitudes.iter_mut().enumerate() {
            let low = k & low_mask;
            let high = (k >> register.start) << register.end();
            *slot = self.amplitudes[low | high];
        }
        let mut out = StateVector {
            n_qubits: n,
            amplitudes,
            layout: Vec::new(),
        };
        for r in &self.layout {
            if r.range == register {
                continue;
            }
            let start = if r.range.start >= register.end() {
                r.range.start - register.width
            } else {
                r.range.start
            };
            out = out.with_register(&r.name, start, r.range.width)?;
        }
        Ok(out)
    }

    /// Weight of basis states where `register` is nonzero.
    pub fn register_residual(&self, register: QubitRange) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| register.extract(*i) != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Seeds an RNG the same way every sampling routine here does.
    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}

pub(crate) fn weighted_index(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights.iter().map(|w| w.max(0.0)))
        .map_err(|e| Error::InvalidArgument(format!("cannot sample distribution: {e}")))
}

pub(crate) fn sample_index(dist: &WeightedIndex<f64>, rng: &mut ChaCha8Rng) -> usize {
    dist.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        use rand::Rng;
        let mut rng = StateVector::rng(seed);
        let raw: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn basis_states() {
        assert_eq!(StateVector::basis(1, 0).unwrap().amplitudes(), &[c(1.0), c(0.0)]);
        assert_eq!(
            StateVector::basis(2, 3).unwrap().amplitudes(),
            &[c(0.0), c(0.0), c(0.0), c(1.0)]
        );
        let s = StateVector::basis(3, 5).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s.amplitude(5), c(1.0));
        assert!(matches!(
            StateVector::basis(2, 4),
            Err(Error::BasisIndexOutOfRange { index: 4, .. })
        ));
    }

    #[test]
    fn hadamard_and_rotation() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&Gate::H, &[0], &[]).unwrap();
        assert_abs_diff_eq!(s.amplitude(0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).re, FRAC_1_SQRT_2, epsilon = 1e-15);

        let mut s = StateVector::zero(1);
        s.apply_gate(&Gate::Ry { theta: 2.0 * PI / 3.0 }, &[0], &[]).unwrap();
        // cos(pi/3), sin(pi/3)
        assert_abs_diff_eq!(s.amplitude(0).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).re, 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn controlled_x() {
        // |10> in qubit order (q1 q0) means qubit 1 set: index 2.
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply_gate(&Gate::X, &[0], &[1]).unwrap();
        assert_eq!(s.amplitude(0b11), c(1.0));
        let err = s.apply_gate(&Gate::X, &[0], &[0]).unwrap_err();
        assert!(matches!(err, Error::OverlappingQubits(0)));
        assert!(s.apply_gate(&Gate::X, &[3], &[]).is_err());
    }

    #[test]
    fn qft_matches_dft_matrix() {
        for w in 1..=4 {
            let n = 1usize << w;
            for x in 0..n {
                let mut s = StateVector::basis(w, x as u64).unwrap();
                s.apply_qft(QubitRange::new(0, w), false).unwrap();
                for y in 0..n {
                    let expected =
                        Complex64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * PI * (x * y) as f64 / n as f64);
                    assert!((s.amplitude(y) - expected).norm() < 1e-12, "w={w} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn one_qubit_qft_is_hadamard() {
        let mut a = random_state(1, 3);
        let mut b = a.clone();
        a.apply_qft(QubitRange::new(0, 1), false).unwrap();
        b.apply_gate(&Gate::H, &[0], &[]).unwrap();
        assert!(max_diff(&a, &b) < 1e-15);
    }

    #[test]
    fn qft_of_zero_is_uniform_positive() {
        let mut s = StateVector::zero(4);
        s.apply_qft(QubitRange::new(0, 4), false).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.25, epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn oracle_copy_and_self_inverse() {
        let input = QubitRange::new(0, 3);
        let output = QubitRange::new(3, 3);
        for a in 0..8u64 {
            let mut s = StateVector::basis(6, a).unwrap();
            s.apply_basis_oracle(|v| v, input, output, OracleMode::Xor).unwrap();
            assert_eq!(s.amplitude((a | (a << 3)) as usize), c(1.0));
        }
        let orig = random_state(6, 11);
        let mut s = orig.clone();
        let f = |v: u64| (v * 5 + 1) % 8;
        s.apply_basis_oracle(f, input, output, OracleMode::Xor).unwrap();
        s.apply_basis_oracle(f, input, output, OracleMode::Xor).unwrap();
        assert!(max_diff(&s, &orig) < 1e-15);

        s.apply_basis_oracle(f, input, output, OracleMode::AddMod).unwrap();
        s.apply_basis_oracle_inverse(f, input, output, OracleMode::AddMod).unwrap();
        assert!(max_diff(&s, &orig) < 1e-15);
    }

    #[test]
    fn oracle_rejects_wide_output() {
        let mut s = StateVector::zero(4);
        let before = s.clone();
        let err = s
            .apply_basis_oracle(|v| v + 4, QubitRange::new(0, 2), QubitRange::new(2, 2), OracleMode::Xor)
            .unwrap_err();
        assert!(matches!(err, Error::OracleOutputTooWide { value: 4, width: 2 }));
        assert_eq!(s, before);
    }

    #[test]
    fn sampling_plus_state_within_three_sigma() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&Gate::H, &[0], &[]).unwrap();
        let h = s.sample_measurement(QubitRange::new(0, 1), 10_000, 42).unwrap();
        let sigma = (10_000.0f64 * 0.25).sqrt();
        assert_eq!(h.total(), 10_000);
        assert!((h.count(0) as f64 - 5000.0).abs() < 3.0 * sigma);
        assert!((h.count(1) as f64 - 5000.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn sampling_basis_state_is_deterministic() {
        let s = StateVector::basis(3, 5).unwrap();
        let h = s.sample_measurement(QubitRange::new(0, 3), 100, 1).unwrap();
        assert_eq!(h.count(5), 100);
        let again = s.sample_measurement(QubitRange::new(0, 3), 100, 1).unwrap();
        assert_eq!(h, again);
    }

    #[test]
    fn inner_products() {
        let zero = StateVector::basis(1, 0).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let mut plus = zero.clone();
        plus.apply_gate(&Gate::H, &[0], &[]).unwrap();
        assert_abs_diff_eq!(zero.inner_product(&one).unwrap().norm(), 0.0);
        assert_abs_diff_eq!(plus.inner_product(&zero).unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let r = random_state(3, 9);
        assert_abs_diff_eq!(r.inner_product(&r).unwrap().re, 1.0, epsilon = 1e-12);
        let labelled = r.clone().with_register("a", 0, 2).unwrap();
        assert!(matches!(r.inner_product(&labelled), Err(Error::LayoutMismatch)));
    }

    #[test]
    fn discard_requires_clean_register() {
        let s = StateVector::basis(3, 0b001)
            .unwrap()
            .with_register("low", 0, 1)
            .unwrap()
            .with_register("work", 1, 1)
            .unwrap()
            .with_register("top", 2, 1)
            .unwrap();
        let d = s.discard_zero_register(QubitRange::new(1, 1), CLEAN_TOL).unwrap();
        assert_eq!(d.n_qubits(), 2);
        assert_eq!(d.register("top").unwrap(), QubitRange::new(1, 1));
        assert!(d.register("work").is_err());
        let dirty = StateVector::basis(3, 0b010).unwrap();
        assert!(matches!(
            dirty.discard_zero_register(QubitRange::new(1, 1), CLEAN_TOL),
            Err(Error::DirtyRegister { .. })
        ));
    }

    proptest! {
        #[test]
        fn qft_round_trip_and_norm(seed in 0u64..1000, w in 1usize..5) {
            let orig = random_state(5, seed);
            let mut s = orig.clone();
            let r = QubitRange::new(5 - w, w);
            s.apply_qft(r, false).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            s.apply_qft(r, true).unwrap();
            prop_assert!(max_diff(&s, &orig) < 1e-10);
        }

        #[test]
        fn gate_then_adjoint_is_identity(seed in 0u64..1000, gamma in -3.0f64..3.0, phi in -3.0f64..3.0, lambda in -3.0f64..3.0) {
            let orig = random_state(3, seed);
            let g = Gate::U { gamma, phi, lambda };
            let mut s = orig.clone();
            s.apply_gate(&g, &[1], &[0, 2]).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            s.apply_gate(&g.adjoint(), &[1], &[0, 2]).unwrap();
            prop_assert!(max_diff(&s, &orig) < 1e-10);
        }

        #[test]
        fn sampling_is_deterministic_and_sums_to_shots(seed in 0u64..500, shots in 1u64..2000) {
            let s = random_state(3, seed);
            let a = s.sample_measurement(QubitRange::new(1, 2), shots, seed).unwrap();
            let b = s.sample_measurement(QubitRange::new(1, 2), shots, seed).unwrap();
            prop_assert_eq!(a.total(), shots);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn sampling_soundness_three_sigma() {
        let s = random_state(3, 77);
        let shots = 20_000u64;
        let probs = s.marginal_probabilities(QubitRange::new(0, 3)).unwrap();
        let h = s.sample_measurement(QubitRange::new(0, 3), shots, 5).unwrap();
        for (k, p) in probs.iter().enumerate() {
            let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
            let dev = (h.count(k as u64) as f64 - shots as f64 * p).abs();
            assert!(dev <= 3.0 * sigma + 1.0, "outcome {k}: dev {dev}, sigma {sigma}");
        }
    }
}
