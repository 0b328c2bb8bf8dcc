use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{SentimentError, SentimentRecord, Source};

/// `(positive + 0.5 · neutral) / (positive + neutral + negative)`.
pub fn sentiment_score(positive: f64, neutral: f64, negative: f64) -> Option<f64> {
    let total = positive + neutral + negative;
    (total > 0.0).then(|| (positive + 0.5 * neutral) / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailySentiment {
    pub date: NaiveDate,
    pub mean_positive: f64,
    pub mean_neutral: f64,
    pub mean_negative: f64,
    pub score: f64,
    pub post_count: usize,
}

/// Relative weight of each source when averaging a day's posts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceWeights {
    pub twitter: f64,
    pub reddit: f64,
    pub news: f64,
}

impl Default for SourceWeights {
    fn default() -> Self {
        Self {
            twitter: 1.0,
            reddit: 1.0,
            news: 1.0,
        }
    }
}

impl SourceWeights {
    pub fn weight(&self, source: Source) -> f64 {
        match source {
            Source::Twitter => self.twitter,
            Source::Reddit => self.reddit,
            Source::News => self.news,
        }
    }
}

fn weighted_day(
    records: &[SentimentRecord],
    weights: &SourceWeights,
) -> Result<DailySentiment, SentimentError> {
    let first = records.first().ok_or(SentimentError::NoRecords)?;
    if let Some(other) = records.iter().find(|r| r.date != first.date) {
        return Err(SentimentError::MixedDates {
            first: first.date,
            other: other.date,
        });
    }
    let (mut pos, mut neu, mut neg, mut mass) = (0.0, 0.0, 0.0, 0.0);
    for r in records {
        let w = weights.weight(r.source);
        pos += w * r.positive;
        neu += w * r.neutral;
        neg += w * r.negative;
        mass += w;
    }
    if !(mass > 0.0) {
        return Err(SentimentError::ZeroMass);
    }
    let (pos, neu, neg) = (pos / mass, neu / mass, neg / mass);
    // the day's component means come first, the ratio is taken of the means
    let score = sentiment_score(pos, neu, neg).ok_or(SentimentError::ZeroMass)?;
    Ok(DailySentiment {
        date: first.date,
        mean_positive: pos,
        mean_neutral: neu,
        mean_negative: neg,
        score,
        post_count: records.len(),
    })
}

/// Equal-weight daily aggregate of records that all share one date.
pub fn daily_score(records: &[SentimentRecord]) -> Result<DailySentiment, SentimentError> {
    weighted_day(records, &SourceWeights::default())
}

/// Groups records by date and aggregates each day, in date order.
pub fn aggregate_daily(
    records: &[SentimentRecord],
    weights: &SourceWeights,
) -> Result<Vec<DailySentiment>, SentimentError> {
    let mut by_day: BTreeMap<NaiveDate, Vec<SentimentRecord>> = BTreeMap::new();
    for r in records {
        by_day.entry(r.date).or_default().push(*r);
    }
    by_day
        .values()
        .map(|day| weighted_day(day, weights))
        .collect()
}

pub fn write_daily_csv<W: Write>(days: &[DailySentiment], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "date,mean_positive,mean_neutral,mean_negative,score,post_count"
    )?;
    for d in days {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            d.date, d.mean_positive, d.mean_neutral, d.mean_negative, d.score, d.post_count
        )?;
    }
    Ok(())
}
