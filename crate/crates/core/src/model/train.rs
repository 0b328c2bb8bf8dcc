use log::{debug, info};

use super::{mse_loss, Adam, ModelConfig, ModelError, Result, TrainConfig, TransformerRegressor};
use crate::market::WindowedDataset;
use crate::rng::{streams, Rng};
use crate::tensor::{backward, Mode};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    /// Mean minibatch loss per epoch, dropout active.
    pub train: Vec<f64>,
    /// Held-out loss per epoch in evaluation mode; empty without a holdout.
    pub validation: Vec<f64>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch (or the last epoch when no
    /// holdout is configured).
    pub model: TransformerRegressor,
    pub history: LossHistory,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub steps: usize,
}

fn holdout_len(train_len: usize, fraction: f64) -> usize {
    (train_len as f64 * fraction).round() as usize
}

/// Evaluation-mode MSE over the given samples.
fn evaluate(
    model: &TransformerRegressor,
    dataset: &WindowedDataset,
    samples: &[usize],
) -> Result<f64> {
    let mut total = 0.0;
    let mut rng = Rng::new(0);
    for chunk in samples.chunks(256) {
        let (x, y) = dataset.batch(chunk);
        let pred = model.forward(&x, Mode::Eval, &mut rng)?;
        total += mse_loss(&pred, &y)?.item() * chunk.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

/// Minibatch Adam on the training split with MSE loss.
///
/// The trailing `validation_fraction` of training samples is held out for
/// early stopping. Shuffling and dropout draw from separate seeded streams,
/// so a fixed seed reproduces the run exactly.
pub fn train(
    dataset: &WindowedDataset,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
) -> Result<TrainOutcome> {
    mcfg.validate()?;
    tcfg.validate()?;
    if dataset.num_features() != mcfg.num_features || dataset.window != mcfg.window_len {
        return Err(ModelError::InputShape {
            got: vec![dataset.window, dataset.num_features()],
            expected: format!("[{}, {}]", mcfg.window_len, mcfg.num_features),
        });
    }
    let train_len = dataset.train_len();
    if train_len == 0 {
        return Err(ModelError::Empty("training split"));
    }
    let holdout = holdout_len(train_len, tcfg.validation_fraction);
    let fit: Vec<usize> = (0..train_len - holdout).collect();
    let validation: Vec<usize> = (train_len - holdout..train_len).collect();
    if fit.is_empty() {
        return Err(ModelError::Empty("training split after validation holdout"));
    }

    let model = TransformerRegressor::new(mcfg.clone(), tcfg.seed)?;
    let params = model.parameters();
    let mut adam = Adam::new(&params, tcfg.adam())?;
    let mut shuffle_rng = Rng::with_stream(tcfg.seed, streams::SHUFFLE);
    let mut dropout_rng = Rng::with_stream(tcfg.seed, streams::DROPOUT);
    info!(
        "training {} parameters on {} samples ({} held out)",
        model.parameter_count(),
        fit.len(),
        validation.len()
    );

    let mut history = LossHistory::default();
    let mut best: Option<(f64, usize, Vec<Vec<f64>>)> = None;
    let mut steps = 0usize;
    let mut best_epoch = 0;
    'epochs: for epoch in 1..=tcfg.max_epochs {
        let mut order = fit.clone();
        shuffle_rng.shuffle(&mut order);
        let (mut total, mut seen) = (0.0, 0usize);
        let mut out_of_steps = false;
        for chunk in order.chunks(tcfg.batch_size) {
            let (x, y) = dataset.batch(chunk);
            let pred = model.forward(&x, Mode::Train, &mut dropout_rng)?;
            let loss = mse_loss(&pred, &y)?;
            let value = loss.item();
            if !value.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch, value });
            }
            backward(&loss)?;
            adam.step(&params)?;
            total += value * chunk.len() as f64;
            seen += chunk.len();
            steps += 1;
            if tcfg.max_steps.is_some_and(|cap| steps >= cap) {
                out_of_steps = true;
                break;
            }
        }
        let train_loss = total / seen as f64;
        history.train.push(train_loss);
        best_epoch = epoch;

        if !validation.is_empty() {
            let val_loss = evaluate(&model, dataset, &validation)?;
            if !val_loss.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    value: val_loss,
                });
            }
            history.validation.push(val_loss);
            debug!("epoch {epoch}: train {train_loss:.6e} validation {val_loss:.6e}");
            match &best {
                Some((b, _, _)) if val_loss >= *b => {}
                _ => best = Some((val_loss, epoch, model.snapshot())),
            }
            let since_best = epoch - best.as_ref().map_or(epoch, |b| b.1);
            if since_best >= tcfg.patience.max(1) {
                info!("early stop at epoch {epoch}");
                break 'epochs;
            }
        } else {
            debug!("epoch {epoch}: train {train_loss:.6e}");
        }
        if out_of_steps {
            break;
        }
    }
    if let Some((_, epoch, values)) = best {
        model.restore(&values)?;
        best_epoch = epoch;
    }
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        steps,
    })
}
