use std::fmt::Write as _;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalError, Metrics};
use crate::market::{FeatureConfig, WindowedDataset};

pub const PREDICTIONS_HEADER: &str = "date,actual,predicted,actual_denorm,predicted_denorm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricScale {
    Normalized,
    Denormalized,
}

/// One line of the comparison table. Literature rows may lack values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub label: String,
    pub rmse: Option<f64>,
    pub mse: Option<f64>,
    pub mape_percent: Option<f64>,
    pub scale: MetricScale,
    /// `transcribed` for literature values, `seed=… data=…` for local runs.
    pub provenance: String,
    pub transcribed: bool,
}

/// Published baseline figures, copied verbatim.
pub fn literature_baselines() -> Vec<MetricsRow> {
    let row = |label: &str, rmse, mse, mape| MetricsRow {
        label: label.to_string(),
        rmse: Some(rmse),
        mse,
        mape_percent: Some(mape),
        scale: MetricScale::Normalized,
        provenance: "transcribed".to_string(),
        transcribed: true,
    };
    vec![
        row("ANN (Kim et. al, 2021)", 0.068, None, 0.048),
        row("MLP (Kumar et. al, 2020)", 0.114, Some(0.021), 32.29),
        row("LSTM (Kumar et. al, 2020)", 0.013, Some(0.018), 3.67),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPoint {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
    pub actual_denorm: f64,
    pub predicted_denorm: f64,
}

/// Everything the report needs from one trained configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub configuration: FeatureConfig,
    pub seed: u64,
    /// Short content hash of the dataset snapshot the run trained on.
    pub data_hash: String,
    pub best_epoch: usize,
    pub normalized: Metrics,
    pub denormalized: Metrics,
    pub test_len: usize,
}

/// Pairs test-split targets with predictions and scores them on both scales.
pub fn evaluate_predictions(
    dataset: &WindowedDataset,
    predicted: &[f64],
) -> Result<(Vec<PredictionPoint>, Metrics, Metrics), EvalError> {
    let test: Vec<usize> = (dataset.split_index..dataset.len()).collect();
    if predicted.len() != test.len() {
        return Err(EvalError::LengthMismatch {
            actual: test.len(),
            predicted: predicted.len(),
        });
    }
    let scaling = dataset.target_scaling();
    let denorm = |v: f64| scaling.denormalize(v).unwrap_or(f64::NAN);
    let points: Vec<PredictionPoint> = test
        .iter()
        .zip(predicted)
        .map(|(&i, &p)| PredictionPoint {
            date: dataset.target_date(i),
            actual: dataset.target(i),
            predicted: p,
            actual_denorm: denorm(dataset.target(i)),
            predicted_denorm: denorm(p),
        })
        .collect();
    let actual: Vec<f64> = points.iter().map(|p| p.actual).collect();
    let pred: Vec<f64> = points.iter().map(|p| p.predicted).collect();
    let actual_d: Vec<f64> = points.iter().map(|p| p.actual_denorm).collect();
    let pred_d: Vec<f64> = points.iter().map(|p| p.predicted_denorm).collect();
    let normalized = compute_metrics(&actual, &pred)?;
    let denormalized = compute_metrics(&actual_d, &pred_d)?;
    Ok((points, normalized, denormalized))
}

pub fn write_predictions_csv<W: Write>(
    points: &[PredictionPoint],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{PREDICTIONS_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.date, p.actual, p.predicted, p.actual_denorm, p.predicted_denorm
        )?;
    }
    Ok(())
}

pub fn read_predictions_csv<R: BufRead>(input: R) -> Result<Vec<PredictionPoint>, EvalError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let bad = |reason: String| EvalError::Malformed {
            line: lineno,
            reason,
        };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if lineno == 1 {
            if line != PREDICTIONS_HEADER {
                return Err(bad(format!("expected header {PREDICTIONS_HEADER}")));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("bad number {s:?}")))
        };
        out.push(PredictionPoint {
            date: NaiveDate::parse_from_str(f[0], "%Y-%m-%d").map_err(|e| bad(e.to_string()))?,
            actual: num(f[1])?,
            predicted: num(f[2])?,
            actual_denorm: num(f[3])?,
            predicted_denorm: num(f[4])?,
        });
    }
    Ok(out)
}

/// Comparison table plus the echo of what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Literature rows followed by local runs, on the normalized scale.
    pub rows: Vec<MetricsRow>,
    /// Local runs on the price scale.
    pub denormalized_rows: Vec<MetricsRow>,
    pub runs: Vec<RunRecord>,
    pub seed: u64,
    pub config_echo: String,
}

fn local_row(run: &RunRecord, metrics: &Metrics, scale: MetricScale) -> MetricsRow {
    MetricsRow {
        label: run.configuration.label().to_string(),
        rmse: Some(metrics.rmse),
        mse: Some(metrics.mse),
        mape_percent: Some(metrics.mape_percent),
        scale,
        provenance: format!("seed={} data={}", run.seed, run.data_hash),
        transcribed: false,
    }
}

/// Assembles the table from trained runs (sorted by configuration).
pub fn build_report(
    runs: &[RunRecord],
    seed: u64,
    config_echo: &str,
) -> Result<ExperimentReport, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::NoRuns);
    }
    let mut runs = runs.to_vec();
    runs.sort_by_key(|r| r.configuration);
    let mut rows = literature_baselines();
    rows.extend(
        runs.iter()
            .map(|r| local_row(r, &r.normalized, MetricScale::Normalized)),
    );
    let denormalized_rows = runs
        .iter()
        .map(|r| local_row(r, &r.denormalized, MetricScale::Denormalized))
        .collect();
    Ok(ExperimentReport {
        rows,
        denormalized_rows,
        runs,
        seed,
        config_echo: config_echo.to_string(),
    })
}

fn cell(value: Option<f64>, transcribed: bool, decimals: usize) -> String {
    match value {
        None => "n/a".to_string(),
        // transcribed constants keep their published digits
        Some(v) if transcribed => format!("{v}"),
        Some(v) => format!("{v:.decimals$}"),
    }
}

fn render_rows(out: &mut String, rows: &[MetricsRow], decimals: usize) {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let _ = writeln!(
        out,
        "{:<width$}  {:>12}  {:>12}  {:>10}  Source",
        "Model", "RMSE", "MSE", "MAPE (%)"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>12}  {:>10}  {}",
            r.label,
            cell(r.rmse, r.transcribed, decimals),
            cell(r.mse, r.transcribed, decimals),
            cell(r.mape_percent, r.transcribed, 2),
            r.provenance
        );
    }
}

impl ExperimentReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("Model and errors (normalized close)\n\n");
        render_rows(&mut out, &self.rows, 6);
        out.push_str("\nLocal runs on the price scale (USD)\n\n");
        render_rows(&mut out, &self.denormalized_rows, 4);
        out.push_str(
            "\nTranscribed rows reproduce published figures verbatim; their MAPE\n\
             columns do not share one scale and are not comparable to local runs.\n",
        );
        let _ = writeln!(out, "Seed: {}", self.seed);
        out
    }

    /// Machine-readable form: one line per row on both scales.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,scale,rmse,mse,mape_percent,provenance\n");
        for r in self.rows.iter().chain(&self.denormalized_rows) {
            let num = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v}"));
            let scale = match r.scale {
                MetricScale::Normalized => "normalized",
                MetricScale::Denormalized => "denormalized",
            };
            let _ = writeln!(
                out,
                "\"{}\",{},{},{},{},{}",
                r.label,
                scale,
                num(r.rmse),
                num(r.mse),
                num(r.mape_percent),
                r.provenance
            );
        }
        out
    }
}
