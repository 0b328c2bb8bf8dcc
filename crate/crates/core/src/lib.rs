//! Transformer-encoder forecasting of daily crypto closing prices.
pub mod eval;
pub mod gradcheck;
pub mod market;
pub mod model;
pub mod rng;
pub mod sentiment;
pub mod synth;
pub mod tensor;

pub use market::{DataError, FeatureConfig, WindowedDataset};
pub use model::{ModelConfig, ModelError, TrainConfig, TransformerRegressor};
pub use rng::Rng;
pub use sentiment::SentimentError;
pub use tensor::{backward, Mode, Tensor, TensorError};
