//! Central finite-difference gradient checking.
//!
//! The numeric side only ever calls the forward closure, so it stays
//! independent of every backward rule it is used to verify.

use crate::tensor::{backward, Result, Tensor};

/// Per-input comparison between analytic and numeric gradients.
#[derive(Debug, Clone)]
pub struct GradientComparison {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub relative_error: f64,
}

/// `‖a − n‖ / (‖a‖ + ‖n‖)`, or 0 when both gradients vanish (below 1e-12).
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, b)| a - b));
    let scale = norm(&mut analytic.iter().copied()) + norm(&mut numeric.iter().copied());
    if scale < 1e-12 {
        0.0
    } else {
        diff / scale
    }
}

/// Numeric gradient of the scalar `loss` with respect to every element of
/// `input`, by central differences with the given step.
pub fn numeric_gradient(
    input: &Tensor,
    step: f64,
    loss: &dyn Fn() -> Result<Tensor>,
) -> Result<Vec<f64>> {
    let mut grad = Vec::with_capacity(input.numel());
    for i in 0..input.numel() {
        let original = input.data()[i];
        input.data_mut()[i] = original + step;
        let plus = loss()?.item();
        input.data_mut()[i] = original - step;
        let minus = loss()?.item();
        input.data_mut()[i] = original;
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(grad)
}

/// Runs `loss` once with backward, then numerically differentiates it with
/// respect to each of `inputs`. The closure must be deterministic.
pub fn check_gradients(
    inputs: &[Tensor],
    step: f64,
    loss: &dyn Fn() -> Result<Tensor>,
) -> Result<Vec<GradientComparison>> {
    inputs.iter().for_each(Tensor::zero_grad);
    let value = loss()?;
    backward(&value)?;
    drop(value);
    inputs
        .iter()
        .map(|input| {
            let analytic = input.grad().unwrap_or_else(|| vec![0.0; input.numel()]);
            let numeric = numeric_gradient(input, step, loss)?;
            let relative_error = relative_error(&analytic, &numeric);
            Ok(GradientComparison {
                analytic,
                numeric,
                relative_error,
            })
        })
        .collect()
}
