use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use super::SentimentError;

/// Allowed deviation of `positive + neutral + negative` from 1.
pub const TRIPLET_SUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Twitter,
    Reddit,
    News,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Twitter => "twitter",
            Source::Reddit => "reddit",
            Source::News => "news",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentRecord {
    pub date: NaiveDate,
    pub source: Source,
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
}

impl SentimentRecord {
    pub fn validate(&self) -> Result<(), String> {
        let parts = [
            ("positive", self.positive),
            ("neutral", self.neutral),
            ("negative", self.negative),
        ];
        if let Some((name, v)) = parts.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(format!("{name} = {v} outside [0, 1]"));
        }
        let total = self.positive + self.neutral + self.negative;
        if (total - 1.0).abs() > TRIPLET_SUM_TOLERANCE {
            return Err(format!("components sum to {total}"));
        }
        Ok(())
    }
}

/// A line that parsed but failed validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripletFile {
    pub records: Vec<SentimentRecord>,
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<String>,
}

/// Parses and validates one line (1-based `line` is used in errors).
pub fn parse_triplet_line(text: &str, line: usize) -> Result<SentimentRecord, SentimentError> {
    let record: SentimentRecord =
        serde_json::from_str(text).map_err(|e| SentimentError::Malformed {
            line,
            reason: e.to_string(),
        })?;
    record
        .validate()
        .map_err(|reason| SentimentError::OutOfRange { line, reason })?;
    Ok(record)
}

/// Reads a whole triplet stream. Malformed lines abort; well-formed lines
/// with out-of-range triplets are collected in `rejected`.
pub fn parse_triplets<R: BufRead>(reader: R) -> Result<TripletFile, SentimentError> {
    let mut out = TripletFile::default();
    for (idx, text) in reader.lines().enumerate() {
        let line = idx + 1;
        let text = text.map_err(|e| SentimentError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        match parse_triplet_line(&text, line) {
            Ok(r) => out.records.push(r),
            Err(SentimentError::OutOfRange { line, reason }) => {
                out.rejected.push(Rejection { line, reason })
            }
            Err(e) => return Err(e),
        }
    }
    if out.records.is_empty() && out.rejected.is_empty() {
        let msg = "sentiment file contains no records".to_string();
        warn!("{msg}");
        out.warnings.push(msg);
    }
    if !out.rejected.is_empty() {
        warn!("{} sentiment records rejected", out.rejected.len());
    }
    Ok(out)
}

pub fn ingest_triplets(path: &Path) -> Result<TripletFile, SentimentError> {
    let file = std::fs::File::open(path).map_err(|source| SentimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_triplets(std::io::BufReader::new(file))
}

pub fn write_triplets<W: Write>(records: &[SentimentRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}
