use chrono::NaiveDate;

use super::DailySentiment;

/// Daily scores laid onto market dates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSentiment {
    pub scores: Vec<Option<f64>>,
    /// True where the score was carried forward from an earlier day.
    pub filled: Vec<bool>,
}

impl AlignedSentiment {
    pub fn filled_count(&self) -> usize {
        self.filled.iter().filter(|f| **f).count()
    }

    pub fn missing_count(&self) -> usize {
        self.scores.iter().filter(|s| s.is_none()).count()
    }
}

/// Exact-date join of `daily` (sorted by date) onto sorted `market_dates`.
/// A market date without a score reuses the most recent earlier score when
/// that score is at most `max_fill_days` calendar days old, else stays
/// missing.
pub fn align_daily(
    daily: &[DailySentiment],
    market_dates: &[NaiveDate],
    max_fill_days: i64,
) -> AlignedSentiment {
    let mut scores = Vec::with_capacity(market_dates.len());
    let mut filled = Vec::with_capacity(market_dates.len());
    let mut next = 0;
    let mut last: Option<&DailySentiment> = None;
    for &date in market_dates {
        while next < daily.len() && daily[next].date <= date {
            last = Some(&daily[next]);
            next += 1;
        }
        match last {
            Some(d) if d.date == date => {
                scores.push(Some(d.score));
                filled.push(false);
            }
            Some(d) if (date - d.date).num_days() <= max_fill_days => {
                scores.push(Some(d.score));
                filled.push(true);
            }
            _ => {
                scores.push(None);
                filled.push(false);
            }
        }
    }
    AlignedSentiment { scores, filled }
}
