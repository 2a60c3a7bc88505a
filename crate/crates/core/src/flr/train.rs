use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{classical_gradient, converged, mse_loss, update_parameters, ClientDataset};
use crate::error::{Error, Result};
use crate::prep::{EncodingConstants, ParamEncoding};
use crate::qgd::{local_gradient, Fidelity, QgdConfig};
use crate::qsmc::{run_protocol, weights_from_counts, AbortRecord, ProtocolConfig, ProtocolTranscript};
use crate::seed::derive_seed;

pub const TAG_EPOCH: u64 = 10;
pub const TAG_LOCAL: u64 = 11;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientBackend {
    #[default]
    Classical,
    QuantumShortcut,
    QuantumFull,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Qsmc,
    PlainSum,
}

fn default_alpha() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    1e-8
}

fn default_max_epochs() -> usize {
    100
}

fn default_halvings() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// Fixed bias of the model; not trained.
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub backend: GradientBackend,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Phase, readout and norm settings for the quantum backends; the fidelity is
    /// taken from `backend`.
    #[serde(default)]
    pub qgd: QgdConfig,
    #[serde(default)]
    pub encoding: ParamEncoding,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    /// Starting parameters; defaults to (1, ..., 1)/sqrt(D), since the quantum
    /// backends cannot encode the zero vector.
    #[serde(default)]
    pub initial_w: Option<Vec<f64>>,
    /// How often gamma may be halved after an aggregate overflow within one epoch.
    #[serde(default = "default_halvings")]
    pub max_gamma_halvings: usize,
    #[serde(default)]
    pub seed: u64,
    /// Keep every protocol transcript in the history.
    #[serde(default)]
    pub verbose: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            epsilon: default_epsilon(),
            max_epochs: default_max_epochs(),
            b: 0.0,
            backend: GradientBackend::Classical,
            aggregation: Aggregation::Qsmc,
            qgd: QgdConfig::default(),
            encoding: ParamEncoding::default(),
            protocol: ProtocolConfig::default(),
            initial_w: None,
            max_gamma_halvings: default_halvings(),
            seed: 0,
            verbose: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be at least 1".into()));
        }
        if self.aggregation == Aggregation::Qsmc {
            self.protocol.crt.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    Converged,
    MaxEpochs,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Parameters the gradients were evaluated at.
    pub w: Vec<f64>,
    pub local: Vec<Vec<f64>>,
    pub gradient: Vec<f64>,
    pub grad_norm_sq: f64,
    pub loss: f64,
    /// Scale used by the aggregation (absent for the plain sum).
    pub gamma: Option<f64>,
    pub transcript: Option<ProtocolTranscript>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub status: TrainStatus,
    pub w: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
    pub abort: Option<AbortRecord>,
}

impl TrainHistory {
    /// epoch, loss, grad_norm_sq, gamma, w0.., g0..
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let dim = self.w.len();
        let mut header: Vec<String> = ["epoch", "loss", "grad_norm_sq", "gamma"].map(String::from).to_vec();
        header.extend((0..dim).map(|j| format!("w{j}")));
        header.extend((0..dim).map(|j| format!("g{j}")));
        writer.write_record(&header)?;
        for e in &self.epochs {
            let mut row = vec![
                e.epoch.to_string(),
                e.loss.to_string(),
                e.grad_norm_sq.to_string(),
                e.gamma.map(|g| g.to_string()).unwrap_or_default(),
            ];
            row.extend(e.w.iter().map(f64::to_string));
            row.extend(e.gradient.iter().map(f64::to_string));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn local_gradients(
    clients: &[ClientDataset],
    w: &[f64],
    config: &TrainConfig,
    epoch: usize,
) -> Result<Vec<Vec<f64>>> {
    clients
        .par_iter()
        .enumerate()
        .map(|(k, data)| match config.backend {
            GradientBackend::Classical => Ok(classical_gradient(data, w, config.b)),
            GradientBackend::QuantumShortcut | GradientBackend::QuantumFull => {
                let fidelity = if config.backend == GradientBackend::QuantumFull {
                    Fidelity::FullCircuit
                } else {
                    Fidelity::Shortcut
                };
                let qgd = QgdConfig {
                    fidelity,
                    seed: derive_seed(config.seed, &[TAG_LOCAL, epoch as u64, k as u64]),
                    ..config.qgd
                };
                let constants = EncodingConstants::from_data(&data.x, w, config.encoding)?;
                local_gradient(&data.x, &data.y, w, config.b, &constants, &qgd).map(|est| est.g)
            }
        })
        .collect()
}

/// Runs the federated loop: local gradients at w(n), aggregation with
/// beta_k = M_k / sum M, w(n+1) = w(n) - alpha G, stop once sum_j (G^j)^2 <= epsilon.
pub fn train(clients: &[ClientDataset], config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    let first = clients
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one client is required".into()))?;
    for c in clients {
        c.validate()?;
    }
    let dim = first.dim();
    if let Some(c) = clients.iter().find(|c| c.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: c.dim(),
        });
    }
    let mut w = match &config.initial_w {
        Some(w0) if w0.len() != dim => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w0.len(),
            })
        }
        Some(w0) => w0.clone(),
        None => vec![1.0 / (dim as f64).sqrt(); dim],
    };
    let weights = weights_from_counts(&clients.iter().map(ClientDataset::len).collect::<Vec<_>>());
    let mut protocol = config.protocol.clone();
    let mut epochs = Vec::new();

    for epoch in 0..config.max_epochs {
        let local = local_gradients(clients, &w, config, epoch)?;
        let loss = mse_loss(clients, &w, config.b);
        let (gradient, gamma, transcript) = match config.aggregation {
            Aggregation::PlainSum => {
                let g = (0..dim)
                    .map(|j| local.iter().zip(&weights).map(|(g, b)| b * g[j]).sum())
                    .collect();
                (g, None, None)
            }
            Aggregation::Qsmc => {
                let seed = derive_seed(config.seed, &[TAG_EPOCH, epoch as u64]);
                let mut halvings = 0;
                let transcript = loop {
                    match run_protocol(&local, &weights, &protocol, seed) {
                        Err(Error::AggregateOverflow { .. }) if halvings < config.max_gamma_halvings => {
                            protocol.crt.gamma /= 2.0;
                            halvings += 1;
                        }
                        other => break other?,
                    }
                };
                if let Some(abort) = transcript.abort.clone() {
                    epochs.push(EpochRecord {
                        epoch,
                        w: w.clone(),
                        local,
                        gradient: Vec::new(),
                        grad_norm_sq: f64::NAN,
                        loss,
                        gamma: Some(protocol.crt.gamma),
                        transcript: Some(transcript),
                    });
                    return Ok(TrainHistory {
                        status: TrainStatus::Aborted,
                        w,
                        epochs,
                        abort: Some(abort),
                    });
                }
                let g = transcript.gradient.clone().expect("completed run has a gradient");
                (g, Some(protocol.crt.gamma), config.verbose.then_some(transcript))
            }
        };
        let grad_norm_sq = gradient.iter().map(|v| v * v).sum();
        let next = update_parameters(&w, &gradient, config.alpha);
        let done = converged(&gradient, config.epsilon);
        epochs.push(EpochRecord {
            epoch,
            w: std::mem::replace(&mut w, next),
            local,
            gradient,
            grad_norm_sq,
            loss,
            gamma,
            transcript,
        });
        if done {
            return Ok(TrainHistory {
                status: TrainStatus::Converged,
                w,
                epochs,
                abort: None,
            });
        }
    }
    Ok(TrainHistory {
        status: TrainStatus::MaxEpochs,
        w,
        epochs,
        abort: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flr::SyntheticSpec;
    use crate::qsmc::{Attacker, CrtConfig};

    fn synthetic(sizes: Vec<usize>) -> Vec<ClientDataset> {
        SyntheticSpec {
            sizes,
            w_star: vec![1.0, -2.0, 0.5, 3.0],
            b: 0.0,
            noise: 0.0,
            seed: 21,
        }
        .generate()
        .unwrap()
    }

    fn centralized(clients: &[ClientDataset], w0: &[f64], alpha: f64, epochs: usize) -> Vec<f64> {
        let all = ClientDataset::new(
            clients.iter().flat_map(|c| c.x.clone()).collect(),
            clients.iter().flat_map(|c| c.y.clone()).collect(),
        )
        .unwrap();
        let mut w = w0.to_vec();
        for _ in 0..epochs {
            w = update_parameters(&w, &classical_gradient(&all, &w, 0.0), alpha);
        }
        w
    }

    #[test]
    fn two_client_first_epoch() {
        let clients = vec![
            ClientDataset::new(vec![vec![2.0, 3.46]], vec![0.0]).unwrap(),
            ClientDataset::new(vec![vec![5.0, 8.66]], vec![0.0]).unwrap(),
        ];
        // with w = (1, 0) and y = 0 the local gradients equal x_0 * x
        let cfg = TrainConfig {
            max_epochs: 1,
            initial_w: Some(vec![1.0, 0.0]),
            protocol: ProtocolConfig::new(CrtConfig::new(vec![23, 29, 31, 37], 100.0, true).unwrap()),
            ..TrainConfig::default()
        };
        let h = train(&clients, &cfg).unwrap();
        let g = &h.epochs[0].gradient;
        let want = [0.5 * (4.0 + 25.0), 0.5 * (2.0 * 3.46 + 5.0 * 8.66)];
        assert!((g[0] - want[0]).abs() <= 0.01 && (g[1] - want[1]).abs() <= 0.01, "{g:?}");
        assert_eq!(h.status, TrainStatus::MaxEpochs);
    }

    #[test]
    fn single_client_plain_sum_is_gradient_descent() {
        let clients = synthetic(vec![12]);
        let cfg = TrainConfig {
            aggregation: Aggregation::PlainSum,
            max_epochs: 30,
            epsilon: 1e-30,
            alpha: 0.2,
            ..TrainConfig::default()
        };
        let h = train(&clients, &cfg).unwrap();
        let mut w = vec![0.5; 4];
        for e in &h.epochs {
            assert_eq!(e.w, w);
            w = update_parameters(&w, &classical_gradient(&clients[0], &w, 0.0), 0.2);
        }
        assert_eq!(h.w, w);
    }

    #[test]
    fn qsmc_matches_centralized_descent() {
        let clients = synthetic(vec![5, 11, 16]);
        let cfg = TrainConfig {
            max_epochs: 60,
            epsilon: 1e-30,
            alpha: 0.3,
            ..TrainConfig::default()
        };
        let h = train(&clients, &cfg).unwrap();
        let w = centralized(&clients, &[0.5; 4], 0.3, 60);
        for j in 0..4 {
            assert!((h.w[j] - w[j]).abs() < 1e-3, "{:?} vs {w:?}", h.w);
        }
        // loss never increases at this step size
        assert!(h.epochs.windows(2).all(|p| p[1].loss <= p[0].loss + 1e-12));
    }

    #[test]
    fn stops_on_convergence() {
        let clients = synthetic(vec![8, 8]);
        let cfg = TrainConfig {
            max_epochs: 2000,
            epsilon: 1e-6,
            alpha: 0.5,
            aggregation: Aggregation::PlainSum,
            ..TrainConfig::default()
        };
        let h = train(&clients, &cfg).unwrap();
        assert_eq!(h.status, TrainStatus::Converged);
        assert!(h.epochs.last().unwrap().grad_norm_sq <= 1e-6);
        assert!(h.epochs.len() < 2000);
    }

    #[test]
    fn overflow_halves_gamma() {
        let clients = synthetic(vec![4, 4]);
        let cfg = TrainConfig {
            max_epochs: 1,
            max_gamma_halvings: 40,
            protocol: ProtocolConfig::new(CrtConfig::new(vec![23, 29], 1e6, true).unwrap()),
            ..TrainConfig::default()
        };
        let h = train(&clients, &cfg).unwrap();
        let gamma = h.epochs[0].gamma.unwrap();
        assert!(gamma < 1e6);
        let plain = train(&clients, &TrainConfig { aggregation: Aggregation::PlainSum, ..cfg.clone() }).unwrap();
        for (a, b) in h.epochs[0].gradient.iter().zip(&plain.epochs[0].gradient) {
            assert!((a - b).abs() <= 1.0 / gamma);
        }
    }

    #[test]
    fn attack_aborts_training() {
        let clients = synthetic(vec![4, 4]);
        let mut cfg = TrainConfig {
            max_epochs: 5,
            ..TrainConfig::default()
        };
        cfg.protocol.attacker = Attacker::InterceptResend { client: 1, round: 0 };
        let h = train(&clients, &cfg).unwrap();
        assert_eq!(h.status, TrainStatus::Aborted);
        assert_eq!(h.epochs.len(), 1);
        assert!(h.abort.is_some());
    }

    #[test]
    fn quantum_shortcut_tracks_classical() {
        let clients = synthetic(vec![3, 5]);
        let base = TrainConfig {
            max_epochs: 10,
            epsilon: 1e-30,
            alpha: 0.2,
            aggregation: Aggregation::PlainSum,
            ..TrainConfig::default()
        };
        let classical = train(&clients, &base).unwrap();
        let quantum = train(&clients, &TrainConfig { backend: GradientBackend::QuantumShortcut, ..base }).unwrap();
        for (a, b) in classical.w.iter().zip(&quantum.w) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn history_serializes() {
        let clients = synthetic(vec![3, 3]);
        let cfg = TrainConfig {
            max_epochs: 3,
            verbose: true,
            ..TrainConfig::default()
        };
        let h = train(&clients, &cfg).unwrap();
        let csv = h.to_csv_string().unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("epoch,loss,grad_norm_sq,gamma,w0,w1,w2,w3,g0,g1,g2,g3"));
        assert!(h.epochs.iter().all(|e| e.transcript.is_some()));
        let back: TrainHistory = serde_json::from_str(&h.to_json().unwrap()).unwrap();
        assert_eq!(back.w, h.w);
    }

    #[test]
    fn rejects_bad_config() {
        let clients = synthetic(vec![3]);
        for cfg in [
            TrainConfig { alpha: 0.0, ..TrainConfig::default() },
            TrainConfig { epsilon: 0.0, ..TrainConfig::default() },
            TrainConfig { max_epochs: 0, ..TrainConfig::default() },
            TrainConfig { initial_w: Some(vec![1.0]), ..TrainConfig::default() },
        ] {
            assert!(train(&clients, &cfg).is_err());
        }
        assert!(train(&[], &TrainConfig::default()).is_err());
    }
}
