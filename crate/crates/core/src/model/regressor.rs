use super::block::{fan_in_uniform, EncoderBlockParams};
use super::{encoder_block_forward, ModelConfig, ModelError, Result};
use crate::rng::{streams, Rng};
use crate::tensor::{add, conv1d, global_average_pool, matmul, reshape, Mode, Tensor};

/// Pointwise input projection, stacked encoder blocks, average pooling over
/// time and a dense scalar head.
#[derive(Debug, Clone)]
pub struct TransformerRegressor {
    config: ModelConfig,
    /// `[1, num_features, model_dim]`
    input_kernel: Tensor,
    input_bias: Tensor,
    blocks: Vec<EncoderBlockParams>,
    /// `[model_dim, 1]`
    head_weight: Tensor,
    head_bias: Tensor,
    positions: Option<Tensor>,
}

/// `[window, dim]` sinusoidal position codes.
fn sinusoidal_positions(window: usize, dim: usize) -> Tensor {
    let mut data = vec![0.0; window * dim];
    for t in 0..window {
        for c in 0..dim {
            let rate = 10_000f64.powf((2 * (c / 2)) as f64 / dim as f64);
            let angle = t as f64 / rate;
            data[t * dim + c] = if c % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Tensor::new(data, &[window, dim]).expect("positive extents")
}

impl TransformerRegressor {
    /// Fan-in uniform initialization from the `INIT` stream of `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::with_stream(seed, streams::INIT);
        let (f, d) = (config.num_features, config.model_dim);
        let input_kernel = fan_in_uniform(&[1, f, d], f, &mut rng);
        let input_bias = Tensor::parameter(vec![0.0; d], &[d])?;
        let blocks = (0..config.num_blocks)
            .map(|_| EncoderBlockParams::init(&config, &mut rng))
            .collect();
        let head_weight = fan_in_uniform(&[d, 1], d, &mut rng);
        let head_bias = Tensor::parameter(vec![0.0], &[1])?;
        let positions = config
            .positional_encoding
            .then(|| sinusoidal_positions(config.window_len, d));
        Ok(Self {
            config,
            input_kernel,
            input_bias,
            blocks,
            head_weight,
            head_bias,
            positions,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn blocks(&self) -> &[EncoderBlockParams] {
        &self.blocks
    }

    /// Every trainable tensor with a stable dotted name, in a fixed order.
    pub fn named_parameters(&self) -> Vec<(String, Tensor)> {
        let mut out = vec![
            ("input.kernel".to_string(), self.input_kernel.clone()),
            ("input.bias".to_string(), self.input_bias.clone()),
        ];
        for (i, block) in self.blocks.iter().enumerate() {
            out.extend(block.named_parameters(&format!("block{i}")));
        }
        out.push(("head.weight".to_string(), self.head_weight.clone()));
        out.push(("head.bias".to_string(), self.head_bias.clone()));
        out
    }

    pub fn parameters(&self) -> Vec<Tensor> {
        self.named_parameters()
            .into_iter()
            .map(|(_, t)| t)
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(Tensor::numel).sum()
    }

    /// Flat copy of all parameter values, in [`Self::parameters`] order.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.parameters().iter().map(Tensor::to_vec).collect()
    }

    pub fn restore(&self, values: &[Vec<f64>]) -> Result<()> {
        let params = self.parameters();
        if params.len() != values.len() {
            return Err(ModelError::LengthMismatch {
                what: "parameter tensors",
                left: params.len(),
                right: values.len(),
            });
        }
        for (p, v) in params.iter().zip(values) {
            if p.numel() != v.len() {
                return Err(ModelError::LengthMismatch {
                    what: "parameter values",
                    left: p.numel(),
                    right: v.len(),
                });
            }
            p.data_mut().copy_from_slice(v);
        }
        Ok(())
    }

    /// `[batch, window, num_features] -> [batch]`.
    pub fn forward(&self, windows: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let cfg = &self.config;
        if windows.rank() != 3 || windows.shape()[2] != cfg.num_features {
            return Err(ModelError::InputShape {
                got: windows.shape().to_vec(),
                expected: format!("[batch, time, {}]", cfg.num_features),
            });
        }
        if self.positions.is_some() && windows.shape()[1] != cfg.window_len {
            return Err(ModelError::InputShape {
                got: windows.shape().to_vec(),
                expected: format!("[batch, {}, {}]", cfg.window_len, cfg.num_features),
            });
        }
        let batch = windows.shape()[0];
        let mut x = conv1d(windows, &self.input_kernel, &self.input_bias)?;
        if let Some(pos) = &self.positions {
            x = add(&x, pos)?;
        }
        for block in &self.blocks {
            x = encoder_block_forward(&x, block, cfg, mode, rng)?;
        }
        let pooled = global_average_pool(&x)?;
        let out = add(&matmul(&pooled, &self.head_weight)?, &self.head_bias)?;
        Ok(reshape(&out, &[batch])?)
    }

    /// Evaluation-mode predictions, processed in chunks of `chunk` windows.
    pub fn predict(&self, windows: &Tensor, chunk: usize) -> Result<Vec<f64>> {
        let shape = windows.shape();
        if windows.rank() != 3 {
            return Err(ModelError::InputShape {
                got: shape.to_vec(),
                expected: "[batch, time, features]".into(),
            });
        }
        let (n, per) = (shape[0], shape[1] * shape[2]);
        let data = windows.data();
        let mut rng = Rng::new(0); // unused in eval mode
        let mut out = Vec::with_capacity(n);
        for start in (0..n).step_by(chunk.max(1)) {
            let end = (start + chunk.max(1)).min(n);
            let part = Tensor::new(
                data[start * per..end * per].to_vec(),
                &[end - start, shape[1], shape[2]],
            )?;
            out.extend(self.forward(&part, Mode::Eval, &mut rng)?.to_vec());
        }
        Ok(out)
    }
}
