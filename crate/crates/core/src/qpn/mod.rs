//! Feedforward regression network trained with per-weight Quickprop.

mod checkpoint;
mod network;
mod optimizer;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use network::{
    batch_error, gradient, gradient_with_error, init_network, logistic, objective, BatchError, Gradients, LayerSizes,
    Matrix, QpnNetwork, Sample, TrainingSample,
};
pub use optimizer::{
    gradient_descent_step, quickprop_step, quickprop_update, LayerState, Optimizer, StepStats, TrainConfig, WeightState,
};
pub use train::{train, EpochRecord, StopReason, TrainReport, PATIENCE, TRACE_HEADER};

/// Default hidden-layer width.
pub const DEFAULT_HIDDEN: usize = 141;
