//! Transformer-encoder regressor, its loss, optimizer and training loop.

mod adam;
mod block;
mod checkpoint;
mod config;
mod loss;
mod regressor;
mod train;

pub use adam::{adam_step, Adam, AdamConfig, AdamMoments};
pub use block::{encoder_block_forward, AttentionHead, EncoderBlockParams};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint,
};
pub use config::{ModelConfig, TrainConfig};
pub use loss::mse_loss;
pub use regressor::TransformerRegressor;
pub use train::{train, LossHistory, TrainOutcome};

use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("input has shape {got:?}, model expects {expected}")]
    InputShape { got: Vec<usize>, expected: String },
    #[error("{what}: {left} vs {right} elements")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("loss became non-finite ({value}) in epoch {epoch}")]
    NonFiniteLoss { epoch: usize, value: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;
