//! Per-post sentiment triplets, daily aggregation and market-date alignment.
//!
//! # Triplet file format
//!
//! Newline-delimited JSON, one post per line:
//!
//! ```text
//! {"date":"2022-05-01","source":"twitter","positive":0.7,"neutral":0.2,"negative":0.1,"text":"..."}
//! ```
//!
//! `date` is `YYYY-MM-DD`; `source` is one of `twitter`, `reddit`, `news`;
//! the three probabilities lie in `[0, 1]` and sum to 1 within
//! [`TRIPLET_SUM_TOLERANCE`]. `text` is optional and ignored. Blank lines are
//! skipped. Unknown fields are ignored.

mod align;
mod daily;
mod triplets;

pub use align::{align_daily, AlignedSentiment};
pub use daily::{
    aggregate_daily, daily_score, sentiment_score, write_daily_csv, DailySentiment, SourceWeights,
};
pub use triplets::{
    ingest_triplets, parse_triplet_line, parse_triplets, write_triplets, Rejection,
    SentimentRecord, Source, TripletFile, TRIPLET_SUM_TOLERANCE,
};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SentimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: triplet out of range: {reason}")]
    OutOfRange { line: usize, reason: String },
    #[error("no records to aggregate")]
    NoRecords,
    #[error("records span several dates ({first} and {other})")]
    MixedDates {
        first: chrono::NaiveDate,
        other: chrono::NaiveDate,
    },
    #[error("sentiment components sum to zero")]
    ZeroMass,
}
