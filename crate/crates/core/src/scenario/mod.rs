//! Reproducible experiment runner: a serializable [`ScenarioConfig`] plus a seed
//! fully determine every artifact written by [`run_scenario`].

mod builtin;
mod run;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flr::{ClientDataset, SyntheticSpec, TrainConfig};
use crate::prep::EncodingConstants;
use crate::qgd::{QgdConfig, SineReadout};
use crate::qsmc::{GhzRound, ProtocolConfig};

pub use builtin::{builtin, BUILTINS};
pub use run::{run_scenario, RunStatus, ScenarioReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Base seed for every random stream except synthetic data generation.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Phase estimation of the overlap angle for one sample.
    ThetaEstimation(ThetaTask),
    /// Local gradients of every client followed by secure aggregation.
    Gradient(GradientTask),
    /// Angle-tree preparation of a parameter vector.
    ParameterState(ParameterTask),
    /// Secure aggregation of given local gradients.
    Aggregation(AggregationTask),
    /// Full federated training loop.
    Training(TrainingTask),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaTask {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    #[serde(default)]
    pub y: f64,
    #[serde(default)]
    pub b: f64,
    pub encoding: EncodingConstants,
    pub bits: usize,
    /// Sample the phase register; exact probabilities only when absent.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub sine: SineReadout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientTask {
    pub data: DataSource,
    pub w: Vec<f64>,
    #[serde(default)]
    pub b: f64,
    /// One per client; derived from the data when empty.
    #[serde(default)]
    pub encodings: Vec<EncodingConstants>,
    #[serde(default)]
    pub qgd: QgdConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    /// Externally reported local gradients, aggregated alongside for comparison.
    #[serde(default)]
    pub reference: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterTask {
    pub w: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationTask {
    pub gradients: Vec<Vec<f64>>,
    /// Sample count per client; the weights are M_k / sum M.
    pub counts: Vec<usize>,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    /// Replays the masking of component 0 under the first modulus with these outcomes.
    #[serde(default)]
    pub recorded_round: Option<GhzRound>,
    /// Extra independent runs used to estimate the detection rate.
    #[serde(default)]
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingTask {
    pub data: DataSource,
    #[serde(default)]
    pub train: TrainConfig,
    /// Also run plain centralized gradient descent from the same start for comparison.
    #[serde(default)]
    pub compare_centralized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Inline { clients: Vec<ClientDataset> },
    /// One CSV per client (header row, last column is y); relative paths resolve
    /// against the config file's directory.
    Csv { paths: Vec<PathBuf> },
    Synthetic(SyntheticSpec),
}

impl DataSource {
    pub fn load(&self, base: Option<&Path>) -> Result<Vec<ClientDataset>> {
        let clients = match self {
            DataSource::Inline { clients } => {
                for c in clients {
                    c.validate()?;
                }
                clients.clone()
            }
            DataSource::Csv { paths } => paths
                .iter()
                .map(|p| match base {
                    Some(b) if p.is_relative() => ClientDataset::from_csv(b.join(p)),
                    _ => ClientDataset::from_csv(p),
                })
                .collect::<Result<_>>()?,
            DataSource::Synthetic(spec) => spec.generate()?,
        };
        if clients.is_empty() {
            return Err(Error::InvalidArgument("the data source has no clients".into()));
        }
        Ok(clients)
    }
}

impl ScenarioConfig {
    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
