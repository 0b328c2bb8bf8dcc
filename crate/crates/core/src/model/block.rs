use super::{ModelConfig, ModelError, Result};
use crate::rng::Rng;
use crate::tensor::{
    add, conv1d, dropout, layer_norm, matmul, relu, scale, softmax, transpose, Mode, Tensor,
};

/// Projection matrices of one attention head.
#[derive(Debug, Clone)]
pub struct AttentionHead {
    /// `[model_dim, head_dim]`
    pub query: Tensor,
    pub key: Tensor,
    pub value: Tensor,
    /// `[head_dim, model_dim]`
    pub output: Tensor,
}

/// Weights of one pre-norm encoder block.
#[derive(Debug, Clone)]
pub struct EncoderBlockParams {
    pub attn_norm_gain: Tensor,
    pub attn_norm_bias: Tensor,
    pub heads: Vec<AttentionHead>,
    pub ff_norm_gain: Tensor,
    pub ff_norm_bias: Tensor,
    /// `[1, model_dim, ff_channels]`
    pub ff_in_kernel: Tensor,
    pub ff_in_bias: Tensor,
    /// `[1, ff_channels, model_dim]`
    pub ff_out_kernel: Tensor,
    pub ff_out_bias: Tensor,
}

/// Uniform in ±1/√fan_in.
pub(crate) fn fan_in_uniform(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform_in(-bound, bound)).collect();
    Tensor::parameter(data, shape).expect("positive extents")
}

fn filled(shape: &[usize], value: f64) -> Tensor {
    Tensor::parameter(vec![value; shape.iter().product()], shape).expect("positive extents")
}

impl EncoderBlockParams {
    /// Random initialization; draws happen in declaration order.
    pub fn init(cfg: &ModelConfig, rng: &mut Rng) -> Self {
        let (d, h, ff) = (cfg.model_dim, cfg.head_dim, cfg.ff_channels);
        let heads = (0..cfg.num_heads)
            .map(|_| AttentionHead {
                query: fan_in_uniform(&[d, h], d, rng),
                key: fan_in_uniform(&[d, h], d, rng),
                value: fan_in_uniform(&[d, h], d, rng),
                output: fan_in_uniform(&[h, d], cfg.attention_width(), rng),
            })
            .collect();
        Self {
            attn_norm_gain: filled(&[d], 1.0),
            attn_norm_bias: filled(&[d], 0.0),
            heads,
            ff_norm_gain: filled(&[d], 1.0),
            ff_norm_bias: filled(&[d], 0.0),
            ff_in_kernel: fan_in_uniform(&[1, d, ff], d, rng),
            ff_in_bias: filled(&[ff], 0.0),
            ff_out_kernel: fan_in_uniform(&[1, ff, d], ff, rng),
            ff_out_bias: filled(&[d], 0.0),
        }
    }

    /// Unit gains, everything else zero.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let (d, h, ff) = (cfg.model_dim, cfg.head_dim, cfg.ff_channels);
        Self {
            attn_norm_gain: filled(&[d], 1.0),
            attn_norm_bias: filled(&[d], 0.0),
            heads: (0..cfg.num_heads)
                .map(|_| AttentionHead {
                    query: filled(&[d, h], 0.0),
                    key: filled(&[d, h], 0.0),
                    value: filled(&[d, h], 0.0),
                    output: filled(&[h, d], 0.0),
                })
                .collect(),
            ff_norm_gain: filled(&[d], 1.0),
            ff_norm_bias: filled(&[d], 0.0),
            ff_in_kernel: filled(&[1, d, ff], 0.0),
            ff_in_bias: filled(&[ff], 0.0),
            ff_out_kernel: filled(&[1, ff, d], 0.0),
            ff_out_bias: filled(&[d], 0.0),
        }
    }

    pub fn named_parameters(&self, prefix: &str) -> Vec<(String, Tensor)> {
        let mut out = vec![
            (
                format!("{prefix}.attn_norm.gain"),
                self.attn_norm_gain.clone(),
            ),
            (
                format!("{prefix}.attn_norm.bias"),
                self.attn_norm_bias.clone(),
            ),
        ];
        for (i, head) in self.heads.iter().enumerate() {
            out.push((format!("{prefix}.head{i}.query"), head.query.clone()));
            out.push((format!("{prefix}.head{i}.key"), head.key.clone()));
            out.push((format!("{prefix}.head{i}.value"), head.value.clone()));
            out.push((format!("{prefix}.head{i}.output"), head.output.clone()));
        }
        out.extend([
            (format!("{prefix}.ff_norm.gain"), self.ff_norm_gain.clone()),
            (format!("{prefix}.ff_norm.bias"), self.ff_norm_bias.clone()),
            (format!("{prefix}.ff_in.kernel"), self.ff_in_kernel.clone()),
            (format!("{prefix}.ff_in.bias"), self.ff_in_bias.clone()),
            (
                format!("{prefix}.ff_out.kernel"),
                self.ff_out_kernel.clone(),
            ),
            (format!("{prefix}.ff_out.bias"), self.ff_out_bias.clone()),
        ]);
        out
    }
}

/// Scaled dot-product attention summed over heads, each head projected back
/// to the block width by its own output matrix.
fn multi_head_attention(x: &Tensor, heads: &[AttentionHead], head_dim: usize) -> Result<Tensor> {
    let temperature = 1.0 / (head_dim as f64).sqrt();
    let mut total: Option<Tensor> = None;
    for head in heads {
        let q = matmul(x, &head.query)?;
        let k = matmul(x, &head.key)?;
        let v = matmul(x, &head.value)?;
        let scores = scale(&matmul(&q, &transpose(&k)?)?, temperature);
        let weights = softmax(&scores, scores.rank() - 1)?;
        let projected = matmul(&matmul(&weights, &v)?, &head.output)?;
        total = Some(match total {
            Some(acc) => add(&acc, &projected)?,
            None => projected,
        });
    }
    total.ok_or(ModelError::Config(
        "attention needs at least one head".into(),
    ))
}

/// LayerNorm → multi-head attention → dropout → residual, then
/// LayerNorm → pointwise conv → ReLU → dropout → pointwise conv → residual.
///
/// `x` is `[batch, time, model_dim]`; the output has the same shape.
pub fn encoder_block_forward(
    x: &Tensor,
    params: &EncoderBlockParams,
    cfg: &ModelConfig,
    mode: Mode,
    rng: &mut Rng,
) -> Result<Tensor> {
    if x.rank() != 3 || x.shape()[2] != cfg.model_dim {
        return Err(ModelError::InputShape {
            got: x.shape().to_vec(),
            expected: format!("[batch, time, {}]", cfg.model_dim),
        });
    }
    let eps = cfg.layer_norm_eps;
    let normed = layer_norm(x, &params.attn_norm_gain, &params.attn_norm_bias, eps)?;
    let attended = multi_head_attention(&normed, &params.heads, cfg.head_dim)?;
    let attended = dropout(&attended, cfg.dropout, mode, rng)?;
    let x = add(x, &attended)?;

    let normed = layer_norm(&x, &params.ff_norm_gain, &params.ff_norm_bias, eps)?;
    let hidden = relu(&conv1d(&normed, &params.ff_in_kernel, &params.ff_in_bias)?);
    let hidden = dropout(&hidden, cfg.dropout, mode, rng)?;
    let refined = conv1d(&hidden, &params.ff_out_kernel, &params.ff_out_bias)?;
    Ok(add(&x, &refined)?)
}
