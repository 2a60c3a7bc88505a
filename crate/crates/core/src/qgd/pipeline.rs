use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grover::{
    decode_theta, dot_from_sin2, sin2_theta, theta_distribution, theta_distribution_analytic, GroverOperator,
    SineReadout,
};
use super::states::{build_chi_state_with_register, build_psi_state_coherent, default_c3, swap_test, SwapReadout};
use crate::error::{Error, Result};
use crate::prep::{index_width, qpe_norm, EncodingConstants, NormMode};
use crate::qsim::Histogram;
use crate::seed::derive_seed;

const TAG_THETA: u64 = 1;
const TAG_SWAP: u64 = 2;

/// Confidence parameter of the sampling term of the error budget.
pub const SAMPLING_DELTA: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// Every step runs on the statevector: Grover operator built from
    /// gates, phase estimation, Fourier arithmetic for F, register-based
    /// encodings and the overlap test circuit.
    FullCircuit,
    /// sin^2 theta, the phase-register distribution and the overlap are
    /// evaluated in closed form.
    #[default]
    Shortcut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThetaMode {
    /// Use theta itself; no discretization.
    Exact,
    /// Phase estimation with `bits` ancillas.
    Qpe { bits: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Readout {
    /// Exact probabilities: phase-register argmax and exact overlap.
    ExactAmplitude,
    /// `shots` samples for each phase register and each overlap test.
    Sampled { shots: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QgdConfig {
    pub fidelity: Fidelity,
    pub theta: ThetaMode,
    pub readout: Readout,
    #[serde(default)]
    pub sine: SineReadout,
    #[serde(default)]
    pub norm: NormMode,
    #[serde(default)]
    pub seed: u64,
}

impl Default for QgdConfig {
    fn default() -> Self {
        QgdConfig {
            fidelity: Fidelity::Shortcut,
            theta: ThetaMode::Exact,
            readout: Readout::ExactAmplitude,
            sine: SineReadout::Exact,
            norm: NormMode::Direct,
            seed: 0,
        }
    }
}

/// Per-sample record of the inner-product stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub sin2_theta: f64,
    pub theta_tilde: Option<u64>,
    pub dot: f64,
    pub f: f64,
    /// Sampled phase register (sampled readout only).
    pub histogram: Option<Histogram>,
}

/// Propagated bounds on |g_hat^j - g^j|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Phase discretization, small-angle readout and norm estimation.
    pub theta: Vec<f64>,
    /// Fixed-point quantization (full-circuit mode).
    pub codec: Vec<f64>,
    /// Finite-shot overlap estimate, at confidence 1 - SAMPLING_DELTA.
    pub sampling: f64,
    pub total: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
    pub p: Vec<f64>,
    pub p_exact: Vec<f64>,
    pub c1: f64,
    pub c3: f64,
    pub config: QgdConfig,
    pub samples: Vec<SampleRecord>,
    pub budget: ErrorBudget,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// g^j = (1/M) sum_i (x_i.w + b - y_i) x_i^j.
pub fn classical_gradient_rows(rows: &[Vec<f64>], ys: &[f64], w: &[f64], b: f64) -> Vec<f64> {
    let m = rows.len() as f64;
    let mut g = vec![0.0; w.len()];
    for (x, y) in rows.iter().zip(ys) {
        let f = dot(x, w) + b - y;
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += f * xj / m;
        }
    }
    g
}

struct Stage1 {
    records: Vec<SampleRecord>,
    /// Per-sample bound on |F_hat - F| from the phase stage.
    f_err: Vec<f64>,
}

/// Quantum estimate of the local gradient of a linear model on (rows, ys).
pub fn local_gradient(
    rows: &[Vec<f64>],
    ys: &[f64],
    w: &[f64],
    b: f64,
    constants: &EncodingConstants,
    config: &QgdConfig,
) -> Result<GradientEstimate> {
    validate(rows, ys, w)?;
    let dim = 1usize << index_width(w.len());
    let stage = inner_products(rows, ys, w, b, constants, config, dim)?;
    let d = w.len();
    let swap_mode = match config.readout {
        Readout::ExactAmplitude => SwapReadout::Exact,
        Readout::Sampled { shots } => SwapReadout::Sampled { shots },
    };

    let (psi, f_values, c3) = match config.fidelity {
        Fidelity::Shortcut => {
            let f: Vec<f64> = stage.records.iter().map(|r| r.f).collect();
            let c3 = resolve_c3(constants.c3, &f)?;
            (None, f, c3)
        }
        Fidelity::FullCircuit => {
            let dots: Vec<f64> = stage.records.iter().map(|r| r.dot).collect();
            let (psi, f, c3) = build_psi_state_coherent(&dots, ys, b, constants.c3, constants.codec)?;
            (Some(psi), f, c3)
        }
    };
    let c1 = constants.c1;

    let outcomes: Vec<(f64, f64)> = (0..d)
        .into_par_iter()
        .map(|j| {
            let seed = derive_seed(config.seed, &[TAG_SWAP, j as u64]);
            let res = match &psi {
                None => shortcut_overlap(rows, &f_values, j, c1, c3, swap_mode, seed),
                Some(psi) => {
                    let chi = build_chi_state_with_register(j, rows, c1, constants.codec)?;
                    swap_test(psi, &chi, swap_mode, seed).map(|o| (o.p, o.p_exact))
                }
            };
            res.map_err(|e| e.in_component(j))
        })
        .collect::<Result<_>>()?;

    let p: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let p_exact: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let g = p.iter().map(|pj| (2.0 * pj - 1.0) / (c1 * c3)).collect();

    let mut samples = stage.records;
    for (r, f) in samples.iter_mut().zip(&f_values) {
        r.f = *f;
    }
    let budget = error_budget(rows, &f_values, &stage.f_err, c1, c3, constants, config);
    Ok(GradientEstimate {
        g,
        p,
        p_exact,
        c1,
        c3,
        config: *config,
        samples,
        budget,
    })
}

fn validate(rows: &[Vec<f64>], ys: &[f64], w: &[f64]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("dataset has no rows".into()));
    }
    if rows.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: ys.len(),
        });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != w.len()) {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: r.len(),
        });
    }
    Ok(())
}

fn resolve_c3(preset: Option<f64>, f: &[f64]) -> Result<f64> {
    match preset {
        Some(c3) => {
            if let Some(&value) = f.iter().find(|v| c3 * v.abs() > 1.0 + crate::prep::SCALE_TOL) {
                return Err(Error::ScaleViolation { scale: c3, value });
            }
            Ok(c3)
        }
        None => Ok(default_c3(f)),
    }
}

fn shortcut_overlap(
    rows: &[Vec<f64>],
    f: &[f64],
    j: usize,
    c1: f64,
    c3: f64,
    mode: SwapReadout,
    seed: u64,
) -> Result<(f64, f64)> {
    if let Some(&value) = rows.iter().map(|r| &r[j]).find(|v| c1 * v.abs() > 1.0 + crate::prep::SCALE_TOL) {
        return Err(Error::ScaleViolation { scale: c1, value });
    }
    let m = rows.len() as f64;
    let overlap: f64 = rows.iter().zip(f).map(|(r, fi)| c3 * fi * c1 * r[j]).sum::<f64>() / m;
    let p_exact = 0.5 + 0.5 * overlap;
    match mode {
        SwapReadout::Exact => Ok((p_exact, p_exact)),
        SwapReadout::Sampled { shots } => {
            let h = Histogram::sample(&[p_exact.clamp(0.0, 1.0), (1.0 - p_exact).clamp(0.0, 1.0)], 1, shots, seed)?;
            Ok((h.frequency(0), p_exact))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn inner_products(
    rows: &[Vec<f64>],
    ys: &[f64],
    w: &[f64],
    b: f64,
    constants: &EncodingConstants,
    config: &QgdConfig,
    dim: usize,
) -> Result<Stage1> {
    constants.check_parameters(w)?;
    let c1 = constants.c1;
    let c2p = constants.c2_prime(dim);
    let (norm_w, bound_w) = estimate_norm(w, 1.0 / w.iter().fold(0.0f64, |m, v| m.max(v.abs())), config.norm)?;
    let per_sample: Vec<(SampleRecord, f64)> = rows
        .par_iter()
        .zip(ys)
        .enumerate()
        .map(|(i, (x, y))| {
            let run = || -> Result<(SampleRecord, f64)> {
                constants.check_data(x)?;
                let (norm_x, bound_x) = estimate_norm(x, c1, config.norm)?;
                let exact_dot = dot(x, w);
                let s2 = sin2_theta(c1, c2p, norm(x), norm(w), exact_dot, dim).max(0.0);
                let norm_term = c1 * bound_x * (2.0 * norm(x) + bound_x) / (2.0 * c2p)
                    + c2p * bound_w * (2.0 * norm(w) + bound_w) / (2.0 * c1);
                let (theta_tilde, histogram, s2_read, theta_err) = match config.theta {
                    ThetaMode::Exact => {
                        let s2_used = match config.fidelity {
                            Fidelity::Shortcut => s2,
                            Fidelity::FullCircuit => GroverOperator::build(x, w, constants)?.sin2_theta(),
                        };
                        (None, None, s2_used, 0.0)
                    }
                    ThetaMode::Qpe { bits } => {
                        let probs = match config.fidelity {
                            Fidelity::Shortcut => theta_distribution_analytic(s2.sqrt().min(1.0).asin(), bits),
                            Fidelity::FullCircuit => theta_distribution(&GroverOperator::build(x, w, constants)?, bits)?,
                        };
                        let (k, h) = match config.readout {
                            Readout::ExactAmplitude => (decode_theta(&probs, bits), None),
                            Readout::Sampled { shots } => {
                                let seed = derive_seed(config.seed, &[TAG_THETA, i as u64]);
                                let h = Histogram::sample(&probs, bits, shots, seed)?;
                                let dense: Vec<f64> = h.dense().iter().map(|c| *c as f64).collect();
                                (decode_theta(&dense, bits), Some(h))
                            }
                        };
                        let read = config.sine.sin2(k, bits);
                        let exact_read = SineReadout::Exact.sin2(k, bits);
                        let eps = PI / (1u64 << bits) as f64;
                        (Some(k), h, read, eps + (read - exact_read).abs())
                    }
                };
                let dot_hat = dot_from_sin2(s2_read, constants, dim, norm_x, norm_w);
                let f_err = 2.0 * dim as f64 * theta_err / (c1 * c2p) + norm_term;
                Ok((
                    SampleRecord {
                        sample: i,
                        sin2_theta: s2,
                        theta_tilde,
                        dot: dot_hat,
                        f: dot_hat + b - y,
                        histogram,
                    },
                    f_err,
                ))
            };
            run().map_err(|e| e.in_sample(i))
        })
        .collect::<Result<_>>()?;
    let (records, f_err) = per_sample.into_iter().unzip();
    Ok(Stage1 { records, f_err })
}

fn estimate_norm(v: &[f64], scale: f64, mode: NormMode) -> Result<(f64, f64)> {
    if v.iter().all(|a| *a == 0.0) {
        return Ok((0.0, 0.0));
    }
    let e = qpe_norm(v, scale, mode)?;
    Ok((e.value, e.bound))
}

fn error_budget(
    rows: &[Vec<f64>],
    f: &[f64],
    f_err: &[f64],
    c1: f64,
    c3: f64,
    constants: &EncodingConstants,
    config: &QgdConfig,
) -> ErrorBudget {
    let m = rows.len() as f64;
    let d = rows[0].len();
    let res = constants.codec.resolution();
    let full = config.fidelity == Fidelity::FullCircuit;
    let mut theta = vec![0.0; d];
    let mut codec = vec![0.0; d];
    for j in 0..d {
        for (i, x) in rows.iter().enumerate() {
            theta[j] += f_err[i] * x[j].abs() / m;
            if full {
                codec[j] += (1.5 * res * x[j].abs() + f[i].abs() * 0.5 * res) / m;
            }
        }
    }
    let sampling = match config.readout {
        Readout::Sampled { shots } => {
            let eps_p = ((2.0 / SAMPLING_DELTA).ln() / (2.0 * shots as f64)).sqrt();
            2.0 * eps_p / (c1 * c3)
        }
        Readout::ExactAmplitude => 0.0,
    };
    let total = theta.iter().zip(&codec).map(|(a, b)| a + b + sampling).collect();
    ErrorBudget {
        theta,
        codec,
        sampling,
        total,
    }
}
