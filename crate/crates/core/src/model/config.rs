use serde::{Deserialize, Serialize};

use super::{AdamConfig, ModelError, Result};

/// Encoder depth and widths. Every extent must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub num_blocks: usize,
    pub model_dim: usize,
    pub num_heads: usize,
    pub head_dim: usize,
    pub ff_channels: usize,
    pub dropout: f64,
    pub window_len: usize,
    pub num_features: usize,
    pub layer_norm_eps: f64,
    /// Add sinusoidal position codes after the input projection.
    pub positional_encoding: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_blocks: 4,
            model_dim: 64,
            num_heads: 4,
            head_dim: 16,
            ff_channels: 128,
            dropout: 0.1,
            window_len: 14,
            num_features: 1,
            layer_norm_eps: 1e-6,
            positional_encoding: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let extents = [
            ("num_blocks", self.num_blocks),
            ("model_dim", self.model_dim),
            ("num_heads", self.num_heads),
            ("head_dim", self.head_dim),
            ("ff_channels", self.ff_channels),
            ("window_len", self.window_len),
            ("num_features", self.num_features),
        ];
        if let Some((name, _)) = extents.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.layer_norm_eps > 0.0) {
            return Err(ModelError::Config("layer_norm_eps must be positive".into()));
        }
        Ok(())
    }

    /// Total width of the concatenated attention heads.
    pub fn attention_width(&self) -> usize {
        self.num_heads * self.head_dim
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Trailing share of the training samples held out for early stopping.
    /// Zero disables the holdout and early stopping.
    pub validation_fraction: f64,
    /// Optional cap on optimizer steps across all epochs.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 32,
            max_epochs: 200,
            seed: 42,
            patience: 20,
            validation_fraction: 0.1,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(ModelError::Config(
                "batch_size and max_epochs must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(ModelError::Config(
                "validation_fraction must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}
