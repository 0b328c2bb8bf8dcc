//! Deterministic synthetic market and sentiment data for demos and tests.
//!
//! Four coins share a log-price market factor, so their closes are strongly
//! correlated. Post sentiment leans positive on days before the ETH close
//! rises, giving the sentiment feature something to find.

use chrono::{Duration, NaiveDate};

use crate::market::{CoinSeries, OhlcvRow};
use crate::rng::{streams, Rng};
use crate::sentiment::{SentimentRecord, Source};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub days: usize,
    /// Longest run of days without any posts.
    pub max_post_gap: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 15,
            start: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date"),
            days: 734,
            max_post_gap: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMarket {
    pub eth: CoinSeries,
    pub btc: CoinSeries,
    pub ada: CoinSeries,
    pub dot: CoinSeries,
    pub posts: Vec<SentimentRecord>,
}

struct CoinSpec {
    symbol: &'static str,
    start: f64,
    beta: f64,
    idio: f64,
    volume: f64,
}

const COINS: [CoinSpec; 4] = [
    CoinSpec {
        symbol: "ETH-USD",
        start: 730.0,
        beta: 1.0,
        idio: 0.012,
        volume: 2.0e10,
    },
    CoinSpec {
        symbol: "BTC-USD",
        start: 29_000.0,
        beta: 0.8,
        idio: 0.008,
        volume: 4.0e10,
    },
    CoinSpec {
        symbol: "ADA-USD",
        start: 0.18,
        beta: 1.2,
        idio: 0.02,
        volume: 1.5e9,
    },
    CoinSpec {
        symbol: "DOT-USD",
        start: 9.0,
        beta: 1.1,
        idio: 0.018,
        volume: 8.0e8,
    },
];

fn coin_rows(spec: &CoinSpec, dates: &[NaiveDate], factor: &[f64], rng: &mut Rng) -> Vec<OhlcvRow> {
    let mut log_price = spec.start.ln();
    let mut prev_close = spec.start;
    dates
        .iter()
        .zip(factor)
        .map(|(&date, &f)| {
            log_price += spec.beta * f + spec.idio * rng.normal();
            let close = log_price.exp();
            let open = prev_close;
            let spread = close.max(open) * 0.01 * rng.uniform();
            let volume =
                (spec.volume * (1.0 + 8.0 * f.abs()) * (0.7 + 0.6 * rng.uniform())).round();
            prev_close = close;
            OhlcvRow {
                date,
                open,
                high: close.max(open) + spread,
                low: (close.min(open) - spread).max(close.min(open) * 0.5),
                close,
                adj_close: close,
                volume,
            }
        })
        .collect()
}

fn day_posts(date: NaiveDate, tilt: f64, rng: &mut Rng) -> Vec<SentimentRecord> {
    let count = 3 + rng.below(6);
    (0..count)
        .map(|k| {
            let source = [Source::Twitter, Source::Reddit, Source::News][k % 3];
            let lean = (tilt + 0.6 * rng.normal()).tanh();
            let mut positive = 0.3 + 0.3 * lean + 0.1 * rng.uniform();
            let mut negative = 0.3 - 0.3 * lean + 0.1 * rng.uniform();
            positive = positive.clamp(0.0, 1.0);
            negative = negative.clamp(0.0, 1.0 - positive);
            let round = |v: f64| (v * 1e6).round() / 1e6;
            let (positive, negative) = (round(positive), round(negative));
            let neutral = round(1.0 - positive - negative);
            SentimentRecord {
                date,
                source,
                positive,
                neutral,
                negative,
            }
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> SynthMarket {
    let mut rng = Rng::with_stream(cfg.seed, streams::SYNTH);
    let dates: Vec<NaiveDate> = (0..cfg.days)
        .map(|d| cfg.start + Duration::days(d as i64))
        .collect();
    // slow regime drift plus daily shocks
    let mut regime = 0.0;
    let factor: Vec<f64> = (0..cfg.days)
        .map(|_| {
            regime = 0.97 * regime + 0.0015 * rng.normal();
            regime + 0.03 * rng.normal()
        })
        .collect();
    let mut coins = COINS.iter().map(|spec| {
        let rows = coin_rows(spec, &dates, &factor, &mut rng);
        CoinSeries::new(spec.symbol, rows)
    });
    let eth = coins.next().expect("eth");
    let btc = coins.next().expect("btc");
    let ada = coins.next().expect("ada");
    let dot = coins.next().expect("dot");

    let mut posts = Vec::new();
    let mut gap = 0;
    for (d, &date) in dates.iter().enumerate() {
        let skip = d > 0 && gap < cfg.max_post_gap && rng.uniform() < 0.08;
        if skip {
            gap += 1;
            continue;
        }
        gap = 0;
        let next_move = factor.get(d + 1).copied().unwrap_or(0.0);
        posts.extend(day_posts(date, 25.0 * next_move, &mut rng));
    }
    SynthMarket {
        eth,
        btc,
        ada,
        dot,
        posts,
    }
}
