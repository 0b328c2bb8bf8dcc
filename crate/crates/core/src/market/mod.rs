//! OHLCV ingestion, per-coin normalization, cross-coin correlation and
//! windowed dataset assembly.

mod correlation;
mod dataset;
mod features;
mod normalize;
mod series;
mod snapshot;

pub use correlation::{pearson, pearson_matrix, CorrelationMatrix, PriceField};
pub use dataset::{FeatureScaling, WindowedDataset};
pub use features::{
    assemble_features, common_dates, split_point, AssemblyReport, FeatureConfig, FeatureOptions,
    MarketInputs, NormalizationScope,
};
pub use normalize::{
    denormalize_prices, digit_count, normalize_price, normalize_prices, normalize_volume,
    normalize_volumes, price_scale, PriceNormalization, VolumeNormalization,
};
pub use series::{
    ingest_csv, parse_csv, write_csv, CoinSeries, LoadReport, OhlcvRow, OHLCV_HEADER,
};
pub use snapshot::{read_snapshot, write_snapshot};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("no usable rows in {0}")]
    Empty(String),
    #[error("{symbol}: maximum close {max} is not positive")]
    NonPositivePrice { symbol: String, max: f64 },
    #[error("{0}: volume is constant, min-max scaling is undefined")]
    DegenerateVolume(String),
    #[error("{a} and {b} share {count} dates, need at least 2")]
    InsufficientOverlap { a: String, b: String, count: usize },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("{have} aligned days, need at least {need}")]
    TooFewDays { have: usize, need: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}
