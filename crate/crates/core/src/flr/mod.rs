//! Federated linear regression: local gradients, secure aggregation, update and
//! convergence test, repeated until sum_j (G^j)^2 <= epsilon.

mod dataset;
mod train;

pub use dataset::{classical_gradient, converged, mse_loss, update_parameters, ClientDataset, SyntheticSpec};
pub use train::{
    train, Aggregation, EpochRecord, GradientBackend, TrainConfig, TrainHistory, TrainStatus, TAG_EPOCH, TAG_LOCAL,
};
