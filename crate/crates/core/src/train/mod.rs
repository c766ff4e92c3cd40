//! Hand-written reverse-mode training: losses, gradients, optimizers, the
//! deterministic training loop, and node-sensitivity measurement.

mod backward;
mod loss;
mod optim;
mod run;
mod sensitivity;

pub use backward::{backward, input_vjp, GradientBundle, LayerGrads, SsmPairGrads};
pub(crate) use backward::hidden_vjp;
pub use loss::{
    accuracy, cross_entropy_loss, log10_mse, mse_loss, LossKind, MetricKind, LOG10_MSE_FLOOR,
};
pub use optim::{AdamState, OptimizerKind};
pub use run::{train_loop, EpochRecord, TrainHistory};
pub use sensitivity::{node_sensitivity, Sensitivity};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Training protocol configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub loss: LossKind,
    pub metric: MetricKind,
    /// Graphs per mini-batch for multi-graph tasks; 0 runs full-batch.
    /// Batch partitions are fixed (dataset index order), so runs are
    /// bit-reproducible.
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            learning_rate: 3e-3,
            weight_decay: 1e-6,
            max_epochs: 400,
            patience: 100,
            seed: 0,
            loss: LossKind::CrossEntropy,
            metric: MetricKind::Accuracy,
            batch_size: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 {
            return Err(Error::Config("learning rate must be >= 0".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight decay must be >= 0".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}
