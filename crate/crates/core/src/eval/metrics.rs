use serde::{Deserialize, Serialize};

use super::EvalError;

fn check(actual: &[f64], predicted: &[f64]) -> Result<(), EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    check(actual, predicted)?;
    let total: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok(total / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    mse(actual, predicted).map(f64::sqrt)
}

/// Mean absolute percentage error, in percent. Points with a zero actual
/// value are left out and counted in `excluded`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    pub percent: f64,
    pub excluded: usize,
}

pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<Mape, EvalError> {
    check(actual, predicted)?;
    let (mut total, mut used) = (0.0, 0usize);
    for (a, p) in actual.iter().zip(predicted) {
        if *a == 0.0 {
            continue;
        }
        total += ((a - p) / a).abs();
        used += 1;
    }
    if used == 0 {
        return Err(EvalError::AllZeroActuals);
    }
    Ok(Mape {
        percent: 100.0 * total / used as f64,
        excluded: actual.len() - used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mse: f64,
    pub mape_percent: f64,
    pub mape_excluded: usize,
}

pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<Metrics, EvalError> {
    let mse = mse(actual, predicted)?;
    let mape = mape(actual, predicted)?;
    Ok(Metrics {
        rmse: mse.sqrt(),
        mse,
        mape_percent: mape.percent,
        mape_excluded: mape.excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast() {
        let a = [1.0, 2.0, 3.0];
        let m = compute_metrics(&a, &a).unwrap();
        assert_eq!((m.rmse, m.mse, m.mape_percent), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_case() {
        let m = compute_metrics(&[1.0, 2.0], &[1.1, 1.8]).unwrap();
        assert!((m.mse - 0.025).abs() < 1e-15);
        assert!((m.rmse - 0.025f64.sqrt()).abs() < 1e-15);
        assert!((m.rmse - 0.1581).abs() < 1e-4);
        assert!((m.mape_percent - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_actuals_excluded() {
        let m = mape(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(m.excluded, 1);
        assert!((m.percent - 50.0).abs() < 1e-12);
        assert!(matches!(
            mape(&[0.0], &[1.0]),
            Err(EvalError::AllZeroActuals)
        ));
    }

    #[test]
    fn length_errors() {
        assert!(matches!(
            mse(&[1.0], &[1.0, 2.0]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(rmse(&[], &[]), Err(EvalError::Empty)));
    }
}
