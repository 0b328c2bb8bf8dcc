use super::{ModelError, Result};
use crate::tensor::{mean, mul, sub, Tensor};

/// Mean of squared differences over two equal-length vectors.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<Tensor> {
    if pred.numel() != target.numel() {
        return Err(ModelError::LengthMismatch {
            what: "mse_loss",
            left: pred.numel(),
            right: target.numel(),
        });
    }
    if pred.shape() != target.shape() {
        return Err(ModelError::InputShape {
            got: target.shape().to_vec(),
            expected: format!("{:?}", pred.shape()),
        });
    }
    let diff = sub(pred, target)?;
    Ok(mean(&mul(&diff, &diff)?))
}
