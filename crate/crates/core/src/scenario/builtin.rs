use super::{
    AggregationTask, DataSource, GradientTask, ParameterTask, ScenarioConfig, Task, ThetaTask, TrainingTask,
};
use crate::flr::{Aggregation, ClientDataset, GradientBackend, SyntheticSpec, TrainConfig};
use crate::prep::{EncodingConstants, ParamEncoding};
use crate::qgd::{Fidelity, QgdConfig, Readout, SineReadout, ThetaMode};
use crate::qsmc::{Attacker, CrtConfig, GhzRound, ProtocolConfig};

/// Built-in scenario names with one-line descriptions.
pub const BUILTINS: [(&str, &str); 6] = [
    ("paper-5.2-qpe", "phase-register histogram for the two-feature worked example (l = 4)"),
    ("paper-5.2-gradient", "both clients' quantum gradients and their secure aggregate"),
    ("paper-appendix-b", "angle-tree preparation of a four-dimensional parameter vector"),
    ("paper-appendix-c", "secure aggregation with moduli 23 and 29, every share recorded"),
    ("attack-demo", "intercept-resend attacker against 20 decoys at d = 23"),
    ("synthetic-train", "federated training on synthetic data split over three clients"),
];

fn client(x: Vec<f64>, y: f64) -> ClientDataset {
    ClientDataset { x: vec![x], y: vec![y] }
}

fn example_clients() -> Vec<ClientDataset> {
    vec![client(vec![2.0, 3.464], 2.464), client(vec![2.5, 4.33], 2.33)]
}

fn example_w() -> Vec<f64> {
    vec![0.866, 0.5]
}

fn two_moduli(signed: bool) -> CrtConfig {
    CrtConfig {
        moduli: vec![23, 29],
        gamma: 100.0,
        signed,
    }
}

pub fn builtin(name: &str, seed: u64) -> Option<ScenarioConfig> {
    let task = match name {
        "paper-5.2-qpe" => Task::ThetaEstimation(ThetaTask {
            x: vec![2.0, 3.464],
            w: example_w(),
            y: 2.464,
            b: 0.0,
            encoding: EncodingConstants::new(0.25, 1.0, ParamEncoding::QramRotation),
            bits: 4,
            shots: Some(1024),
            sine: SineReadout::SmallAngle,
        }),
        "paper-5.2-gradient" => Task::Gradient(GradientTask {
            data: DataSource::Inline {
                clients: example_clients(),
            },
            w: example_w(),
            b: 0.0,
            encodings: vec![
                EncodingConstants::new(0.25, 1.0, ParamEncoding::QramRotation),
                EncodingConstants::new(0.2, 1.0, ParamEncoding::QramRotation),
            ],
            qgd: QgdConfig {
                fidelity: Fidelity::Shortcut,
                theta: ThetaMode::Qpe { bits: 4 },
                readout: Readout::ExactAmplitude,
                sine: SineReadout::SmallAngle,
                ..QgdConfig::default()
            },
            protocol: ProtocolConfig::new(CrtConfig {
                gamma: 100.0,
                ..CrtConfig::default()
            }),
            reference: Some(vec![vec![1.846, 3.197], vec![2.115 * 2.5, 2.115 * 4.33]]),
        }),
        "paper-appendix-b" => Task::ParameterState(ParameterTask {
            w: vec![1.0, 2.0, 2.0, 4.0],
        }),
        "paper-appendix-c" => Task::Aggregation(AggregationTask {
            gradients: vec![vec![2.0, 3.46], vec![5.0, 8.66]],
            counts: vec![1, 1],
            protocol: ProtocolConfig {
                decoys: 0,
                ..ProtocolConfig::new(two_moduli(false))
            },
            recorded_round: Some(GhzRound {
                d: 23,
                server: 7,
                clients: vec![6, 10],
            }),
            trials: 0,
        }),
        "attack-demo" => Task::Aggregation(AggregationTask {
            gradients: vec![vec![2.0, 3.46], vec![5.0, 8.66]],
            counts: vec![1, 1],
            protocol: ProtocolConfig {
                decoys: 20,
                attacker: Attacker::InterceptResend { client: 0, round: 0 },
                ..ProtocolConfig::new(two_moduli(false))
            },
            recorded_round: None,
            trials: 10_000,
        }),
        "synthetic-train" => Task::Training(TrainingTask {
            data: DataSource::Synthetic(SyntheticSpec {
                sizes: vec![5, 11, 16],
                w_star: vec![1.0, -2.0, 0.5, 3.0],
                b: 0.0,
                noise: 0.0,
                seed: 7,
            }),
            train: TrainConfig {
                alpha: 0.3,
                epsilon: 1e-10,
                max_epochs: 2000,
                backend: GradientBackend::Classical,
                aggregation: Aggregation::Qsmc,
                ..TrainConfig::default()
            },
            compare_centralized: true,
        }),
        _ => return None,
    };
    Some(ScenarioConfig {
        name: name.to_string(),
        seed,
        output_dir: None,
        task,
    })
}
