use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use log::info;
use serde::{Deserialize, Serialize};

use super::normalize::{digit_count, normalize_volumes};
use super::{CoinSeries, DataError, FeatureScaling, WindowedDataset};
use crate::sentiment::{align_daily, DailySentiment};

/// Which columns feed the model.
///
/// * `A`: `[eth_close]`
/// * `B`: `[eth_close, eth_volume, eth_sentiment]`
/// * `C`: `[eth_close, eth_volume, eth_sentiment, ada_close, dot_close]`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureConfig {
    A,
    B,
    C,
}

impl FeatureConfig {
    pub const ALL: [FeatureConfig; 3] = [FeatureConfig::A, FeatureConfig::B, FeatureConfig::C];

    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            FeatureConfig::A => &["eth_close"],
            FeatureConfig::B => &["eth_close", "eth_volume", "eth_sentiment"],
            FeatureConfig::C => &[
                "eth_close",
                "eth_volume",
                "eth_sentiment",
                "ada_close",
                "dot_close",
            ],
        }
    }

    pub fn num_features(self) -> usize {
        self.feature_names().len()
    }

    /// Row label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            FeatureConfig::A => "Transformer + ETH data",
            FeatureConfig::B => "Transformer + ETH data + Sentiments",
            FeatureConfig::C => "Transformer + ETH data + Cross-correlation data + Sentiments",
        }
    }

    pub fn needs_sentiment(self) -> bool {
        self != FeatureConfig::A
    }

    pub fn needs_cross_assets(self) -> bool {
        self == FeatureConfig::C
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureConfig::A => "A",
            FeatureConfig::B => "B",
            FeatureConfig::C => "C",
        })
    }
}

impl FromStr for FeatureConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(FeatureConfig::A),
            "B" => Ok(FeatureConfig::B),
            "C" => Ok(FeatureConfig::C),
            other => Err(format!(
                "unknown configuration {other:?}, expected A, B or C"
            )),
        }
    }
}

/// Rows whose values set the normalization statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationScope {
    /// Rows up to and including the last training target.
    TrainOnly,
    /// Every aligned row.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureOptions {
    pub window: usize,
    /// Calendar days a sentiment score may be carried forward.
    pub max_fill_days: i64,
    pub normalization: NormalizationScope,
    /// Replace constant volume by 0.5 instead of failing.
    pub constant_volume_fallback: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            window: 14,
            max_fill_days: 3,
            normalization: NormalizationScope::TrainOnly,
            constant_volume_fallback: false,
        }
    }
}

pub struct MarketInputs<'a> {
    pub eth: &'a CoinSeries,
    pub ada: Option<&'a CoinSeries>,
    pub dot: Option<&'a CoinSeries>,
}

/// Counts from one assembly run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssemblyReport {
    pub configuration: String,
    pub common_days: usize,
    pub sentiment_filled_days: usize,
    pub sentiment_dropped_days: usize,
    pub rows: usize,
    pub train_targets: usize,
    pub test_targets: usize,
}

/// Number of training targets out of `targets`: 579 of every 720, rounded,
/// keeping at least one target on each side.
pub fn split_point(targets: usize) -> usize {
    let n = (targets * 579 + 360) / 720;
    n.clamp(1, targets.saturating_sub(1).max(1))
}

/// Dates present in every series, ascending.
pub fn common_dates(series: &[&CoinSeries]) -> Vec<NaiveDate> {
    let Some((first, rest)) = series.split_first() else {
        return Vec::new();
    };
    first
        .dates()
        .into_iter()
        .filter(|d| {
            rest.iter()
                .all(|s| s.rows.binary_search_by_key(d, |r| r.date).is_ok())
        })
        .collect()
}

fn digit_scale(values: &[f64], symbol: &str) -> Result<f64, DataError> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(DataError::NonPositivePrice {
            symbol: symbol.to_string(),
            max,
        });
    }
    Ok(10f64.powi(digit_count(max) as i32))
}

/// Aligns the inputs on shared dates, normalizes each column and windows the
/// result with next-day ETH close targets split chronologically.
pub fn assemble_features(
    market: &MarketInputs<'_>,
    sentiment: Option<&[DailySentiment]>,
    config: FeatureConfig,
    opts: &FeatureOptions,
) -> Result<(WindowedDataset, AssemblyReport), DataError> {
    let window = opts.window;
    if window == 0 {
        return Err(DataError::InvalidDataset("window must be positive".into()));
    }
    let mut coins = vec![market.eth];
    if config.needs_cross_assets() {
        coins.push(market.ada.ok_or_else(|| {
            DataError::MissingInput(format!("configuration {config} requires the ADA series"))
        })?);
        coins.push(market.dot.ok_or_else(|| {
            DataError::MissingInput(format!("configuration {config} requires the DOT series"))
        })?);
    }
    let daily = match (config.needs_sentiment(), sentiment) {
        (true, None) => {
            return Err(DataError::MissingInput(format!(
                "configuration {config} requires sentiment data"
            )))
        }
        (true, Some(d)) => Some(d),
        (false, _) => None,
    };

    let mut dates = common_dates(&coins);
    let mut report = AssemblyReport {
        configuration: config.to_string(),
        common_days: dates.len(),
        ..AssemblyReport::default()
    };

    let mut scores = Vec::new();
    if let Some(daily) = daily {
        let aligned = align_daily(daily, &dates, opts.max_fill_days);
        report.sentiment_filled_days = aligned.filled_count();
        report.sentiment_dropped_days = aligned.missing_count();
        let kept: Vec<(NaiveDate, f64)> = dates
            .iter()
            .zip(&aligned.scores)
            .filter_map(|(d, s)| s.map(|s| (*d, s)))
            .collect();
        dates = kept.iter().map(|(d, _)| *d).collect();
        scores = kept.into_iter().map(|(_, s)| s).collect();
    }

    let rows = dates.len();
    if rows < window + 2 {
        return Err(DataError::TooFewDays {
            have: rows,
            need: window + 2,
        });
    }
    let targets = rows - window;
    let split = split_point(targets);
    let stats_rows = match opts.normalization {
        NormalizationScope::TrainOnly => window + split,
        NormalizationScope::Global => rows,
    };

    let rows_of = |s: &CoinSeries| s.on_dates(&dates);
    let eth = rows_of(market.eth);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut scaling = Vec::new();

    let close: Vec<f64> = eth.iter().map(|r| r.close).collect();
    let scale = digit_scale(&close[..stats_rows], &market.eth.symbol)?;
    columns.push(close.iter().map(|c| c / scale).collect());
    scaling.push(FeatureScaling::PriceScale { scale });

    if config.needs_sentiment() {
        let volume: Vec<f64> = eth.iter().map(|r| r.volume).collect();
        match normalize_volumes(&market.eth.symbol, &volume[..stats_rows]) {
            Ok(n) => {
                columns.push(
                    volume
                        .iter()
                        .map(|v| (v - n.min) / (n.max - n.min))
                        .collect(),
                );
                scaling.push(FeatureScaling::MinMax {
                    min: n.min,
                    max: n.max,
                });
            }
            Err(DataError::DegenerateVolume(_)) if opts.constant_volume_fallback => {
                columns.push(vec![0.5; rows]);
                scaling.push(FeatureScaling::Constant { value: 0.5 });
            }
            Err(e) => return Err(e),
        }
        columns.push(scores);
        scaling.push(FeatureScaling::Identity);
    }
    if config.needs_cross_assets() {
        for coin in &coins[1..] {
            let close: Vec<f64> = rows_of(coin).iter().map(|r| r.close).collect();
            let scale = digit_scale(&close[..stats_rows], &coin.symbol)?;
            columns.push(close.iter().map(|c| c / scale).collect());
            scaling.push(FeatureScaling::PriceScale { scale });
        }
    }

    let features = (0..rows)
        .flat_map(|r| columns.iter().map(move |c| c[r]))
        .collect();
    let dataset = WindowedDataset {
        configuration: Some(config),
        feature_names: config
            .feature_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        window,
        dates,
        features,
        target_feature: 0,
        split_index: split,
        scaling,
    };
    dataset.validate()?;
    report.rows = rows;
    report.train_targets = split;
    report.test_targets = targets - split;
    info!(
        "configuration {config}: {} common days, {} rows, {} train / {} test targets",
        report.common_days, rows, report.train_targets, report.test_targets
    );
    Ok((dataset, report))
}
