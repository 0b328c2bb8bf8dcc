use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::FeatureConfig;
use super::DataError;
use crate::tensor::Tensor;

/// How a stored feature column was derived from raw values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureScaling {
    /// `raw / scale`
    PriceScale {
        scale: f64,
    },
    /// `(raw - min) / (max - min)`
    MinMax {
        min: f64,
        max: f64,
    },
    /// Degenerate min-max input replaced by a constant.
    Constant {
        value: f64,
    },
    Identity,
}

impl FeatureScaling {
    /// Maps a stored value back to raw units. Returns `None` for columns
    /// whose scaling discards information.
    pub fn denormalize(&self, value: f64) -> Option<f64> {
        match *self {
            FeatureScaling::PriceScale { scale } => Some(value * scale),
            FeatureScaling::MinMax { min, max } => Some(value * (max - min) + min),
            FeatureScaling::Constant { .. } => None,
            FeatureScaling::Identity => Some(value),
        }
    }
}

/// Daily feature table cut into lookback windows with one-step-ahead targets.
///
/// Sample `i` reads rows `i .. i + window` and predicts the target column of
/// row `i + window`. Samples `0 .. split_index` form the training split, the
/// rest the test split; the row table is stored once, so a window is a
/// contiguous `[window, F]` slice of it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub configuration: Option<FeatureConfig>,
    pub feature_names: Vec<String>,
    pub window: usize,
    pub dates: Vec<NaiveDate>,
    /// Row-major `[rows, F]`.
    pub features: Vec<f64>,
    pub target_feature: usize,
    pub split_index: usize,
    pub scaling: Vec<FeatureScaling>,
}

impl WindowedDataset {
    pub fn new(
        feature_names: Vec<String>,
        window: usize,
        dates: Vec<NaiveDate>,
        features: Vec<f64>,
        split_index: usize,
    ) -> Result<Self, DataError> {
        let scaling = vec![FeatureScaling::Identity; feature_names.len()];
        let ds = Self {
            configuration: None,
            feature_names,
            window,
            dates,
            features,
            target_feature: 0,
            split_index,
            scaling,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::InvalidDataset(msg));
        let f = self.feature_names.len();
        if f == 0 || self.window == 0 {
            return bad("need at least one feature and a positive window".into());
        }
        if self.features.len() != self.dates.len() * f {
            return bad(format!(
                "{} values for {} rows of {} features",
                self.features.len(),
                self.dates.len(),
                f
            ));
        }
        if self.scaling.len() != f || self.target_feature >= f {
            return bad("scaling/target column inconsistent with features".into());
        }
        if self.dates.len() <= self.window {
            return bad(format!(
                "{} rows cannot fill a window of {} plus a target",
                self.dates.len(),
                self.window
            ));
        }
        if self.dates.windows(2).any(|w| w[0] >= w[1]) {
            return bad("dates must be strictly increasing".into());
        }
        if self.split_index > self.len() {
            return bad(format!(
                "split {} beyond {} samples",
                self.split_index,
                self.len()
            ));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return bad("non-finite feature value".into());
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.dates.len()
    }

    /// Number of samples (target days).
    pub fn len(&self) -> usize {
        self.dates.len().saturating_sub(self.window)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn train_len(&self) -> usize {
        self.split_index
    }

    pub fn test_len(&self) -> usize {
        self.len() - self.split_index
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let f = self.num_features();
        &self.features[r * f..(r + 1) * f]
    }

    /// `[window, F]` inputs of sample `i`.
    pub fn window_values(&self, i: usize) -> &[f64] {
        let f = self.num_features();
        &self.features[i * f..(i + self.window) * f]
    }

    pub fn window_dates(&self, i: usize) -> &[NaiveDate] {
        &self.dates[i..i + self.window]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.row(i + self.window)[self.target_feature]
    }

    pub fn target_date(&self, i: usize) -> NaiveDate {
        self.dates[i + self.window]
    }

    pub fn targets(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.target(i)).collect()
    }

    pub fn target_dates(&self) -> Vec<NaiveDate> {
        (0..self.len()).map(|i| self.target_date(i)).collect()
    }

    pub fn target_scaling(&self) -> FeatureScaling {
        self.scaling[self.target_feature]
    }

    /// Stacks the given samples into `([n, window, F], [n])` tensors.
    pub fn batch(&self, samples: &[usize]) -> (Tensor, Tensor) {
        let f = self.num_features();
        let mut x = Vec::with_capacity(samples.len() * self.window * f);
        let mut y = Vec::with_capacity(samples.len());
        for &i in samples {
            x.extend_from_slice(self.window_values(i));
            y.push(self.target(i));
        }
        let n = samples.len();
        (
            Tensor::new(x, &[n, self.window, f]).expect("batch shape"),
            Tensor::new(y, &[n]).expect("target shape"),
        )
    }
}
