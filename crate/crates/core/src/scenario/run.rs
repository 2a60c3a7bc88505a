use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{AggregationTask, GradientTask, ParameterTask, ScenarioConfig, Task, ThetaTask, TrainingTask};
use crate::error::{Error, Result};
use crate::flr::{classical_gradient, train, update_parameters, ClientDataset, TrainStatus};
use crate::prep::{prepare_parameter_state, AngleTree, EncodingConstants};
use crate::qgd::{
    decode_theta, local_gradient, recover_inner_product, theta_distribution, theta_distribution_analytic,
    GroverOperator, SineReadout,
};
use crate::qsim::{fold_outcome, Histogram};
use crate::qsmc::{
    aggregate_residue, detection_probability, run_protocol, weights_from_counts, ProtocolTranscript,
};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    NotConverged,
    Aborted,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::NotConverged => 2,
            RunStatus::Aborted => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub status: RunStatus,
    /// Artifact file names, relative to the output directory.
    pub files: Vec<String>,
    pub summary: Value,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::from(e).in_file(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.write(name, &String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Runs `config`, writing artifacts and `report.json` into `out_dir`. `base_dir`
/// resolves relative data paths.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, base_dir: Option<&Path>) -> Result<ScenarioReport> {
    let mut out = Outputs::new(out_dir)?;
    out.json("config.json", config)?;
    let seed = config.seed;
    let (status, summary) = match &config.task {
        Task::ThetaEstimation(t) => theta(t, seed, &mut out)?,
        Task::Gradient(t) => gradient(t, seed, base_dir, &mut out)?,
        Task::ParameterState(t) => parameter_state(t, &mut out)?,
        Task::Aggregation(t) => aggregation(t, seed, &mut out)?,
        Task::Training(t) => training(t, seed, base_dir, &mut out)?,
    };
    let mut report = ScenarioReport {
        name: config.name.clone(),
        seed,
        status,
        files: out.files.clone(),
        summary,
    };
    report.files.push("report.json".into());
    out.json("report.json", &report)?;
    Ok(report)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn theta(t: &ThetaTask, seed: u64, out: &mut Outputs) -> Result<(RunStatus, Value)> {
    let op = GroverOperator::build(&t.x, &t.w, &t.encoding)?;
    let probs = theta_distribution(&op, t.bits)?;
    let analytic = theta_distribution_analytic(op.theta(), t.bits);
    let hist = t
        .shots
        .map(|shots| Histogram::sample(&probs, t.bits, shots, derive_seed(seed, &[1])))
        .transpose()?;
    let modal = probs
        .iter()
        .enumerate()
        .fold((0usize, f64::MIN), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0 as u64;
    let folded = decode_theta(&probs, t.bits);
    let dim = 1usize << crate::prep::index_width(t.x.len());
    let (nx, nw) = (norm(&t.x), norm(&t.w));
    let readout = |sine: SineReadout, k: u64| recover_inner_product(k, t.bits, &t.encoding, dim, nx, nw, sine);
    let rows: Vec<Vec<String>> = probs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            vec![
                k.to_string(),
                format!("{:0width$b}", k, width = t.bits),
                fold_outcome(k as u64, t.bits).to_string(),
                p.to_string(),
                analytic[k].to_string(),
                hist.as_ref().map(|h| h.count(k as u64).to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    out.csv(
        "theta_histogram.csv",
        &["outcome", "bits", "folded", "probability", "analytic", "count"],
        &rows,
    )?;
    let dot_readout = readout(t.sine, folded);
    let dot_exact_readout = readout(SineReadout::Exact, folded);
    let eps = PI / (1u64 << t.bits) as f64;
    let summary = json!({
        "sin2_theta": op.sin2_theta(),
        "theta": op.theta(),
        "modal_outcome": modal,
        "folded_outcome": folded,
        "sampled_mode": hist.as_ref().and_then(Histogram::mode),
        "sampled_folded": hist.as_ref().map(|h| decode_theta(&h.dense().iter().map(|&c| c as f64).collect::<Vec<_>>(), t.bits)),
        "inner_product": dot(&t.x, &t.w),
        "inner_product_readout": dot_readout,
        "inner_product_exact_sine": dot_exact_readout,
        "discretization_bound": 2.0 * dim as f64 * eps / (t.encoding.c1 * t.encoding.c2_prime(dim)),
        "f": dot(&t.x, &t.w) + t.b - t.y,
        "f_readout": dot_readout + t.b - t.y,
        "f_exact_sine": dot_exact_readout + t.b - t.y,
    });
    Ok((RunStatus::Success, summary))
}

fn aggregate_rows(transcript: &ProtocolTranscript) -> Vec<Vec<String>> {
    transcript
        .rounds
        .iter()
        .map(|r| {
            vec![
                r.round.to_string(),
                r.component.to_string(),
                r.modulus.to_string(),
                r.ghz.server.to_string(),
                r.ghz.clients.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
                r.masked.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
                r.residue.map(|v| v.to_string()).unwrap_or_default(),
                r.decoys.iter().map(|d| d.errors.to_string()).collect::<Vec<_>>().join(" "),
            ]
        })
        .collect()
}

const ROUND_HEADER: [&str; 8] = [
    "round",
    "component",
    "modulus",
    "server_outcome",
    "client_outcomes",
    "masked_shares",
    "residue",
    "decoy_errors",
];

fn gradient(t: &GradientTask, seed: u64, base: Option<&Path>, out: &mut Outputs) -> Result<(RunStatus, Value)> {
    let clients = t.data.load(base)?;
    if !t.encodings.is_empty() && t.encodings.len() != clients.len() {
        return Err(Error::DimensionMismatch {
            expected: clients.len(),
            got: t.encodings.len(),
        });
    }
    let mut estimates = Vec::new();
    for (k, c) in clients.iter().enumerate() {
        let constants = match t.encodings.get(k) {
            Some(e) => *e,
            None => EncodingConstants::from_data(&c.x, &t.w, Default::default())?,
        };
        let qgd = crate::qgd::QgdConfig {
            seed: derive_seed(seed, &[20, k as u64]),
            ..t.qgd
        };
        estimates.push(local_gradient(&c.x, &c.y, &t.w, t.b, &constants, &qgd)?);
    }
    let weights = weights_from_counts(&clients.iter().map(ClientDataset::len).collect::<Vec<_>>());
    let local: Vec<Vec<f64>> = estimates.iter().map(|e| e.g.clone()).collect();
    let classical: Vec<Vec<f64>> = clients.iter().map(|c| classical_gradient(c, &t.w, t.b)).collect();
    let transcript = run_protocol(&local, &weights, &t.protocol, derive_seed(seed, &[21]))?;
    let reference = t
        .reference
        .as_ref()
        .map(|r| run_protocol(r, &weights, &t.protocol, derive_seed(seed, &[22])))
        .transpose()?;
    let mut rows = Vec::new();
    for (k, g) in local.iter().enumerate() {
        for (j, v) in g.iter().enumerate() {
            rows.push(vec![
                k.to_string(),
                j.to_string(),
                v.to_string(),
                classical[k][j].to_string(),
                t.reference.as_ref().map(|r| r[k][j].to_string()).unwrap_or_default(),
            ]);
        }
    }
    out.csv("gradients.csv", &["client", "component", "quantum", "classical", "reference"], &rows)?;
    out.csv("rounds.csv", &ROUND_HEADER, &aggregate_rows(&transcript))?;
    out.json("transcript.json", &transcript)?;
    out.json("estimates.json", &estimates)?;
    let exact_federated: Vec<f64> = (0..t.w.len())
        .map(|j| classical.iter().zip(&weights).map(|(g, b)| b * g[j]).sum())
        .collect();
    let status = if transcript.aborted() {
        RunStatus::Aborted
    } else {
        RunStatus::Success
    };
    let summary = json!({
        "local_gradients": local,
        "f": estimates.iter().map(|e| e.samples.iter().map(|s| s.f).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "theta_tilde": estimates.iter().map(|e| e.samples.iter().map(|s| s.theta_tilde).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "error_budget": estimates.iter().map(|e| e.budget.total.clone()).collect::<Vec<_>>(),
        "classical_gradients": classical,
        "federated_gradient": transcript.gradient,
        "exact_federated_gradient": exact_federated,
        "reference_federated_gradient": reference.as_ref().and_then(|r| r.gradient.clone()),
        "abort": transcript.abort,
    });
    Ok((status, summary))
}

fn parameter_state(t: &ParameterTask, out: &mut Outputs) -> Result<(RunStatus, Value)> {
    let tree = AngleTree::build(&t.w)?;
    let state = prepare_parameter_state(&tree)?;
    let l = tree.depth();
    let mut rows = Vec::new();
    for level in 0..=l {
        for (j, h) in tree.level(level).iter().enumerate() {
            let angle = if level < l { Some(tree.angles(level + 1)[j]) } else { None };
            rows.push(vec![
                level.to_string(),
                j.to_string(),
                h.to_string(),
                angle.map(|a| a.to_string()).unwrap_or_default(),
            ]);
        }
    }
    out.csv("angle_tree.csv", &["level", "node", "norm", "angle"], &rows)?;
    let amplitudes: Vec<f64> = (0..tree.dim()).map(|j| state.amplitude(j | (1 << l)).re).collect();
    let target: Vec<f64> = tree.leaves().iter().map(|v| v / tree.norm()).collect();
    let deviation = amplitudes
        .iter()
        .zip(&target)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let amp_rows: Vec<Vec<String>> = amplitudes
        .iter()
        .zip(&target)
        .enumerate()
        .map(|(j, (a, b))| vec![j.to_string(), a.to_string(), b.to_string()])
        .collect();
    out.csv("amplitudes.csv", &["j", "amplitude", "target"], &amp_rows)?;
    let summary = json!({
        "norm": tree.norm(),
        "levels": (0..=l).map(|t| tree.level(t).to_vec()).collect::<Vec<_>>(),
        "angles": (1..=l).map(|t| tree.angles(t).to_vec()).collect::<Vec<_>>(),
        "amplitudes": amplitudes,
        "max_deviation": deviation,
    });
    Ok((RunStatus::Success, summary))
}

fn aggregation(t: &AggregationTask, seed: u64, out: &mut Outputs) -> Result<(RunStatus, Value)> {
    if t.counts.len() != t.gradients.len() {
        return Err(Error::DimensionMismatch {
            expected: t.gradients.len(),
            got: t.counts.len(),
        });
    }
    let weights = weights_from_counts(&t.counts);
    let transcript = run_protocol(&t.gradients, &weights, &t.protocol, derive_seed(seed, &[30]))?;
    let replay = match &t.recorded_round {
        Some(round) => {
            let i = t
                .protocol
                .crt
                .moduli
                .iter()
                .position(|&d| d == round.d)
                .ok_or(Error::ModulusMismatch {
                    round: round.d,
                    shares: t.protocol.crt.moduli[0],
                })?;
            let masked: Vec<u64> = transcript
                .shares
                .iter()
                .zip(&round.clients)
                .map(|(s, o)| (s[0][i] + o) % round.d)
                .collect();
            Some(json!({
                "round": round,
                "masked_shares": masked,
                "residue": aggregate_residue(&masked, round)?,
            }))
        }
        None => None,
    };
    let detection = if t.trials > 0 {
        let detected = (0..t.trials)
            .map(|n| run_protocol(&t.gradients, &weights, &t.protocol, derive_seed(seed, &[31, n as u64])))
            .filter(|r| matches!(r, Ok(tr) if tr.aborted()))
            .count();
        let d = t.protocol.crt.moduli[0];
        Some(json!({
            "trials": t.trials,
            "detected": detected,
            "rate": detected as f64 / t.trials as f64,
            "predicted": detection_probability(d, t.protocol.decoys),
        }))
    } else {
        None
    };
    out.csv("rounds.csv", &ROUND_HEADER, &aggregate_rows(&transcript))?;
    out.json("transcript.json", &transcript)?;
    let status = if transcript.aborted() {
        RunStatus::Aborted
    } else {
        RunStatus::Success
    };
    let summary = json!({
        "mu": transcript.mu,
        "shares": transcript.shares,
        "residues": transcript.residues,
        "totals": transcript.totals,
        "federated_gradient": transcript.gradient,
        "abort": transcript.abort,
        "replayed_round": replay,
        "detection": detection,
        "verified": transcript.verify()?,
    });
    Ok((status, summary))
}

fn training(t: &TrainingTask, seed: u64, base: Option<&Path>, out: &mut Outputs) -> Result<(RunStatus, Value)> {
    let clients = t.data.load(base)?;
    let cfg = crate::flr::TrainConfig { seed, ..t.train.clone() };
    let history = train(&clients, &cfg)?;
    out.write("history.csv", &history.to_csv_string()?)?;
    out.write("history.json", &(history.to_json()? + "\n"))?;
    let centralized = if t.compare_centralized {
        let all = ClientDataset::new(
            clients.iter().flat_map(|c| c.x.clone()).collect(),
            clients.iter().flat_map(|c| c.y.clone()).collect(),
        )?;
        let mut w = history.epochs.first().map(|e| e.w.clone()).unwrap_or_else(|| history.w.clone());
        for _ in 0..history.epochs.len() {
            w = update_parameters(&w, &classical_gradient(&all, &w, cfg.b), cfg.alpha);
        }
        Some(w)
    } else {
        None
    };
    let status = match history.status {
        TrainStatus::Converged => RunStatus::Success,
        TrainStatus::MaxEpochs => RunStatus::NotConverged,
        TrainStatus::Aborted => RunStatus::Aborted,
    };
    let last = history.epochs.last();
    let summary = json!({
        "status": history.status,
        "epochs": history.epochs.len(),
        "w": history.w,
        "final_loss": last.map(|e| e.loss),
        "final_grad_norm_sq": last.map(|e| e.grad_norm_sq),
        "centralized_w": centralized,
        "abort": history.abort,
    });
    Ok((status, summary))
}
