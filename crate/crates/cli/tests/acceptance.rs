//! Acceptance gate. Runs every primary criterion and prints one PASS/FAIL
//! line per criterion; exits nonzero if any fails.
//!
//! Set `ETHCAST_REAL_SNAPSHOT` to a directory holding real `ETH-USD.csv`
//! and `BTC-USD.csv` files (about 730 days) to run the optional
//! correlation check against market data.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use ethcast_core::eval::{mape, mse, read_predictions_csv, rmse};
use ethcast_core::gradcheck::check_gradients;
use ethcast_core::market::{
    assemble_features, denormalize_prices, ingest_csv, normalize_prices, normalize_volumes,
    pearson, pearson_matrix, read_snapshot, CoinSeries, FeatureOptions, MarketInputs, OhlcvRow,
    PriceField, WindowedDataset,
};
use ethcast_core::model::{mse_loss, train, ModelConfig, TrainConfig, TransformerRegressor};
use ethcast_core::sentiment::{
    aggregate_daily, ingest_triplets, sentiment_score, DailySentiment, SourceWeights,
};
use ethcast_core::tensor::{self, Mode, Tensor, TensorError};
use ethcast_core::{FeatureConfig, Rng};

const GRAD_STEP: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
const GRAD_INSTANCES: u64 = 20;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
const METRIC_TOL: f64 = 1e-12;
const RMSE_SQUARED_TOL: f64 = 1e-9;
const METRIC_VECTORS: usize = 1000;
const ROUND_TRIP_TOL: f64 = 1e-12;
const PEARSON_TOL: f64 = 1e-12;
const EXPECTED_ETH_BTC: f64 = 0.92;
const ETH_BTC_BAND: f64 = 0.05;
const LEAKAGE_CALENDARS: u64 = 100;
const OVERFIT_MSE: f64 = 1e-3;
const OVERFIT_STEPS: usize = 2000;
const OVERFIT_BUDGET: Duration = Duration::from_secs(60);
const RUN_ALL_BUDGET: Duration = Duration::from_secs(600);

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn random_param(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::parameter((0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect(), shape).unwrap()
}

fn weighted(out: &Tensor, w: &Tensor) -> tensor::Result<Tensor> {
    Ok(tensor::sum(&tensor::mul(out, w)?))
}

fn model_err(e: ethcast_core::ModelError) -> TensorError {
    TensorError::InvalidArgument {
        op: "model",
        reason: e.to_string(),
    }
}

type Case = (Vec<Tensor>, Box<dyn Fn() -> tensor::Result<Tensor>>);

fn gradient_case(op: &str, rng: &mut Rng) -> Case {
    let mut p = |shape: &[usize]| random_param(rng, shape);
    match op {
        "matmul" => {
            let (a, b, w) = (p(&[2, 3, 4]), p(&[4, 2]), p(&[2, 3, 2]).detach());
            (
                vec![a.clone(), b.clone()],
                Box::new(move || weighted(&tensor::matmul(&a, &b)?, &w)),
            )
        }
        "softmax" => {
            let (x, w) = (p(&[3, 8]), p(&[3, 8]).detach());
            (
                vec![x.clone()],
                Box::new(move || weighted(&tensor::softmax(&x, 1)?, &w)),
            )
        }
        "layer_norm" => {
            let (x, g, b, w) = (p(&[4, 6]), p(&[6]), p(&[6]), p(&[4, 6]).detach());
            (
                vec![x.clone(), g.clone(), b.clone()],
                Box::new(move || weighted(&tensor::layer_norm(&x, &g, &b, 1e-6)?, &w)),
            )
        }
        "conv1d" => {
            let (x, k, b, w) = (
                p(&[2, 5, 3]),
                p(&[2, 3, 4]),
                p(&[4]),
                p(&[2, 4, 4]).detach(),
            );
            (
                vec![x.clone(), k.clone(), b.clone()],
                Box::new(move || weighted(&tensor::conv1d(&x, &k, &b)?, &w)),
            )
        }
        "add/sub/mul/scale" => {
            let (a, b, w) = (p(&[3, 4]), p(&[4]), p(&[3, 4]).detach());
            (
                vec![a.clone(), b.clone()],
                Box::new(move || {
                    let s = tensor::sub(&tensor::add(&a, &b)?, &tensor::scale(&b, 0.3))?;
                    weighted(&tensor::mul(&s, &a)?, &w)
                }),
            )
        }
        "relu/mean/transpose/reshape" => {
            let (a, w) = (p(&[3, 4]), p(&[4, 3]).detach());
            (
                vec![a.clone()],
                Box::new(move || {
                    let t = tensor::transpose(&tensor::relu(&a))?;
                    let r = tensor::reshape(&tensor::mul(&t, &t)?, &[4, 3])?;
                    tensor::add(&weighted(&r, &w)?, &tensor::mean(&tensor::mul(&a, &a)?))
                }),
            )
        }
        "dropout/global_average_pool" => {
            let (x, w) = (p(&[2, 5, 3]), p(&[2, 3]).detach());
            let seed = rng.next_u64();
            (
                vec![x.clone()],
                Box::new(move || {
                    let d = tensor::dropout(&x, 0.3, Mode::Train, &mut Rng::new(seed))?;
                    weighted(&tensor::global_average_pool(&d)?, &w)
                }),
            )
        }
        "mse_loss" => {
            let (x, t) = (p(&[9]), p(&[9]).detach());
            (
                vec![x.clone()],
                Box::new(move || mse_loss(&x, &t).map_err(model_err)),
            )
        }
        "model (1 block, dim 8, W=4, F=2)" => {
            let cfg = ModelConfig {
                num_blocks: 1,
                model_dim: 8,
                num_heads: 2,
                head_dim: 4,
                ff_channels: 16,
                window_len: 4,
                num_features: 2,
                ..ModelConfig::default()
            };
            let (x, t) = (p(&[3, 4, 2]).detach(), p(&[3]).detach());
            let model = TransformerRegressor::new(cfg, rng.next_u64()).unwrap();
            let seed = rng.next_u64();
            (
                model.parameters(),
                Box::new(move || {
                    let y = model
                        .forward(&x, Mode::Train, &mut Rng::new(seed))
                        .map_err(model_err)?;
                    mse_loss(&y, &t).map_err(model_err)
                }),
            )
        }
        other => unreachable!("{other}"),
    }
}

fn gradient_suite() -> Outcome {
    let ops = [
        "matmul",
        "softmax",
        "layer_norm",
        "conv1d",
        "add/sub/mul/scale",
        "relu/mean/transpose/reshape",
        "dropout/global_average_pool",
        "mse_loss",
        "model (1 block, dim 8, W=4, F=2)",
    ];
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (k, op) in ops.iter().enumerate() {
        for i in 0..GRAD_INSTANCES {
            let mut rng = Rng::new(1000 * k as u64 + i);
            let (inputs, loss) = gradient_case(op, &mut rng);
            let cmp =
                check_gradients(&inputs, GRAD_STEP, &*loss).map_err(|e| format!("{op}: {e}"))?;
            for c in cmp {
                worst = worst.max(c.relative_error);
                ensure(c.relative_error < GRAD_TOL, || {
                    format!("{op} instance {i}: relative error {:.3e}", c.relative_error)
                })?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < GRAD_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} ops x {GRAD_INSTANCES} instances, worst rel. err {worst:.2e}, {:.1}s",
        ops.len(),
        elapsed.as_secs_f64()
    ))
}

fn metric_oracles() -> Outcome {
    let mut rng = Rng::new(7);
    let mut worst = 0.0f64;
    for _ in 0..METRIC_VECTORS {
        let n = 1 + rng.below(100);
        let a: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.05, 3.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.0, 3.0)).collect();
        let (mut sq, mut pct) = (0.0, 0.0);
        for i in 0..n {
            sq += (a[i] - p[i]) * (a[i] - p[i]);
            pct += ((a[i] - p[i]) / a[i]).abs();
        }
        let want_mse = sq / n as f64;
        let want_mape = 100.0 * pct / n as f64;
        let got_mse = mse(&a, &p).unwrap();
        let got_rmse = rmse(&a, &p).unwrap();
        let got_mape = mape(&a, &p).unwrap().percent;
        for err in [
            (got_mse - want_mse).abs(),
            (got_rmse - want_mse.sqrt()).abs(),
            (got_mape - want_mape).abs(),
        ] {
            worst = worst.max(err);
            ensure(err <= METRIC_TOL, || format!("metric off by {err:.3e}"))?;
        }
        let gap = (got_rmse * got_rmse - got_mse).abs();
        ensure(gap <= RMSE_SQUARED_TOL, || {
            format!("rmse^2 - mse = {gap:.3e}")
        })?;
    }
    Ok(format!("{METRIC_VECTORS} vectors, worst diff {worst:.1e}"))
}

fn formula_exactness() -> Outcome {
    let s = |p, n, g| sentiment_score(p, n, g).unwrap();
    ensure(s(1.0, 0.0, 0.0) == 1.0, || "score(1,0,0) != 1".into())?;
    ensure(s(0.0, 1.0, 0.0) == 0.5, || "score(0,1,0) != 0.5".into())?;
    let day = NaiveDate::from_ymd_opt(2022, 5, 1).unwrap();
    let rec = |p, n, g| ethcast_core::sentiment::SentimentRecord {
        date: day,
        source: ethcast_core::sentiment::Source::Twitter,
        positive: p,
        neutral: n,
        negative: g,
    };
    let mixed = aggregate_daily(
        &[rec(0.2, 0.3, 0.5), rec(0.4, 0.1, 0.5)],
        &SourceWeights::default(),
    )
    .unwrap();
    ensure((mixed[0].score - 0.4).abs() < 1e-12, || {
        format!("mixed case {}", mixed[0].score)
    })?;

    let mut rng = Rng::new(3);
    let vols: Vec<f64> = (0..200).map(|_| rng.uniform_in(1e6, 1e10)).collect();
    let v = normalize_volumes("X", &vols).map_err(|e| e.to_string())?;
    let lo = v.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ensure(lo == 0.0 && hi == 1.0, || {
        format!("volume endpoints {lo}, {hi}")
    })?;

    let closes: Vec<f64> = (0..500).map(|_| rng.uniform_in(0.01, 99_999.0)).collect();
    let n = normalize_prices("X", &closes).map_err(|e| e.to_string())?;
    let back = denormalize_prices(&n.values, n.scale);
    let worst = back
        .iter()
        .zip(&closes)
        .map(|(b, c)| (b - c).abs() / c.max(1.0))
        .fold(0.0, f64::max);
    ensure(worst <= ROUND_TRIP_TOL, || {
        format!("price round trip off by {worst:.3e}")
    })?;
    ensure(n.values.iter().all(|v| *v > 0.0 && *v <= 1.0), || {
        "price outside (0, 1]".into()
    })?;
    Ok(format!(
        "sentiment 1.0 / 0.5 / 0.4, volume [0, 1] exact, price round trip {worst:.1e}"
    ))
}

fn correlation_oracle() -> Outcome {
    let mut rng = Rng::new(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = 50;
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| rng.uniform_in(-1.0, 1.0) * v + rng.normal())
            .collect();
        let (mx, my) = (
            x.iter().sum::<f64>() / n as f64,
            y.iter().sum::<f64>() / n as f64,
        );
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        let err = (pearson(&x, &y).unwrap() - sxy / (sxx * syy).sqrt()).abs();
        worst = worst.max(err);
        ensure(err <= PEARSON_TOL, || format!("pearson off by {err:.3e}"))?;
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        ensure(
            (pearson(&x, &x).unwrap() - 1.0).abs() <= PEARSON_TOL,
            || "self-correlation".into(),
        )?;
        ensure(
            (pearson(&x, &neg).unwrap() + 1.0).abs() <= PEARSON_TOL,
            || "anti-correlation".into(),
        )?;
    }
    let coins = ["ETH-USD", "BTC-USD", "ADA-USD", "DOT-USD"]
        .iter()
        .map(|s| ingest_csv(&fixtures().join(format!("{s}.csv"))).map(|(c, _)| c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let m = pearson_matrix(&coins, PriceField::Close).map_err(|e| e.to_string())?;
    for i in 0..m.len() {
        ensure(m.get(i, i) == Some(1.0), || "matrix diagonal".into())?;
        for j in 0..m.len() {
            ensure(m.get(i, j) == m.get(j, i), || "matrix symmetry".into())?;
        }
    }
    Ok(format!(
        "200 pairs, worst diff {worst:.1e}; fixture matrix symmetric with unit diagonal"
    ))
}

fn real_eth_btc() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("ETHCAST_REAL_SNAPSHOT")?);
    Some((|| {
        let eth = ingest_csv(&dir.join("ETH-USD.csv"))
            .map_err(|e| e.to_string())?
            .0;
        let btc = ingest_csv(&dir.join("BTC-USD.csv"))
            .map_err(|e| e.to_string())?
            .0;
        let m = pearson_matrix(&[eth, btc], PriceField::Close).map_err(|e| e.to_string())?;
        let r = m.get(0, 1).ok_or("undefined correlation")?;
        ensure((r - EXPECTED_ETH_BTC).abs() <= ETH_BTC_BAND, || {
            format!("r = {r:.3}")
        })?;
        Ok(format!("r = {r:.3} over {} shared days", m.overlaps[1]))
    })())
}

fn load_fixture_market() -> Result<(Vec<CoinSeries>, Vec<DailySentiment>), String> {
    let mut coins = Vec::new();
    for s in ["ETH-USD", "ADA-USD", "DOT-USD"] {
        coins.push(
            ingest_csv(&fixtures().join(format!("{s}.csv")))
                .map_err(|e| e.to_string())?
                .0,
        );
    }
    let posts = ingest_triplets(&fixtures().join("sentiment.jsonl")).map_err(|e| e.to_string())?;
    let daily =
        aggregate_daily(&posts.records, &SourceWeights::default()).map_err(|e| e.to_string())?;
    Ok((coins, daily))
}

fn calendar_coin(symbol: &str, dates: &[NaiveDate], rng: &mut Rng) -> CoinSeries {
    let mut price = rng.uniform_in(1.0, 4000.0);
    let mut rows = Vec::new();
    for &date in dates {
        if rng.uniform() <= 0.05 {
            continue;
        }
        price *= 1.0 + 0.02 * rng.normal();
        rows.push(OhlcvRow {
            date,
            open: price,
            high: price,
            low: price,
            close: price,
            adj_close: price,
            volume: rng.uniform_in(1e3, 1e6),
        });
    }
    CoinSeries::new(symbol, rows)
}

fn leakage_free(ds: &WindowedDataset) -> Result<(), String> {
    for i in 0..ds.len() {
        ensure(
            ds.window_dates(i).iter().all(|d| *d < ds.target_date(i)),
            || format!("sample {i} sees its target date"),
        )?;
    }
    let last_train = ds.target_date(ds.split_index - 1);
    ensure(
        (ds.split_index..ds.len()).all(|i| ds.target_date(i) > last_train),
        || "test target precedes a train target".into(),
    )
}

fn split_fidelity() -> Outcome {
    let (coins, daily) = load_fixture_market()?;
    let inputs = MarketInputs {
        eth: &coins[0],
        ada: Some(&coins[1]),
        dot: Some(&coins[2]),
    };
    for c in FeatureConfig::ALL {
        let (ds, _) = assemble_features(&inputs, Some(&daily), c, &FeatureOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(ds.len() == 720, || {
            format!("{c}: {} usable target days", ds.len())
        })?;
        ensure(ds.train_len() == 579 && ds.test_len() == 141, || {
            format!("{c}: {} / {}", ds.train_len(), ds.test_len())
        })?;
        leakage_free(&ds)?;
    }
    let mut checked = 0;
    for case in 0..LEAKAGE_CALENDARS {
        let mut rng = Rng::new(case);
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let mut day = start;
        let dates: Vec<NaiveDate> = (0..40 + rng.below(200))
            .map(|_| {
                day += chrono::Duration::days(1 + rng.below(3) as i64 / 2);
                day
            })
            .collect();
        let eth = calendar_coin("ETH-USD", &dates, &mut rng);
        let ada = calendar_coin("ADA-USD", &dates, &mut rng);
        let dot = calendar_coin("DOT-USD", &dates, &mut rng);
        let opts = FeatureOptions {
            window: 2 + rng.below(20),
            ..FeatureOptions::default()
        };
        let inputs = MarketInputs {
            eth: &eth,
            ada: Some(&ada),
            dot: Some(&dot),
        };
        let daily: Vec<DailySentiment> = dates
            .iter()
            .map(|&date| DailySentiment {
                date,
                mean_positive: 0.5,
                mean_neutral: 0.25,
                mean_negative: 0.25,
                score: rng.uniform(),
                post_count: 1,
            })
            .filter(|d| d.score > 0.2)
            .collect();
        let (ds, _) = assemble_features(&inputs, Some(&daily), FeatureConfig::C, &opts)
            .map_err(|e| format!("calendar {case}: {e}"))?;
        leakage_free(&ds).map_err(|e| format!("calendar {case}: {e}"))?;
        checked += 1;
    }
    ensure(checked == LEAKAGE_CALENDARS, || {
        format!("only {checked} calendars checked")
    })?;
    Ok(format!(
        "fixture A/B/C: 579 train / 141 test; leakage-free on {checked} random calendars"
    ))
}

fn overfit_sanity() -> Outcome {
    let (w, windows) = (14, 32);
    let rows = w + windows;
    let start = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
    let dates = (0..rows)
        .map(|d| start + chrono::Duration::days(d as i64))
        .collect();
    let values = (0..rows)
        .map(|t| 0.5 + 0.4 * (2.0 * std::f64::consts::PI * t as f64 / 11.0).sin())
        .collect();
    let ds = WindowedDataset::new(vec!["eth_close".into()], w, dates, values, windows)
        .map_err(|e| e.to_string())?;
    let mcfg = ModelConfig {
        num_blocks: 1,
        model_dim: 16,
        num_heads: 2,
        head_dim: 8,
        ff_channels: 32,
        dropout: 0.0,
        window_len: w,
        num_features: 1,
        positional_encoding: true,
        ..ModelConfig::default()
    };
    let tcfg = TrainConfig {
        max_epochs: OVERFIT_STEPS,
        max_steps: Some(OVERFIT_STEPS),
        validation_fraction: 0.0,
        seed: 1,
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let out = train(&ds, &mcfg, &tcfg).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    let idx: Vec<usize> = (0..ds.len()).collect();
    let pred = out
        .model
        .predict(&ds.batch(&idx).0, 64)
        .map_err(|e| e.to_string())?;
    let fit = mse(&ds.targets(), &pred).map_err(|e| e.to_string())?;
    ensure(fit < OVERFIT_MSE, || {
        format!("train mse {fit:.3e} after {} steps", out.steps)
    })?;
    ensure(out.steps <= OVERFIT_STEPS, || {
        format!("{} steps", out.steps)
    })?;
    ensure(elapsed < OVERFIT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "train mse {fit:.2e} after {} steps, {:.1}s",
        out.steps,
        elapsed.as_secs_f64()
    ))
}

fn run_all(out: &Path) -> Result<Duration, String> {
    let t0 = Instant::now();
    let result = Command::new(env!("CARGO_BIN_EXE_ethcast"))
        .arg("--config")
        .arg(fixtures().join("experiment.toml"))
        .arg("--out-dir")
        .arg(out)
        .arg("run-all")
        .output()
        .map_err(|e| e.to_string())?;
    if !result.status.success() {
        return Err(format!(
            "run-all failed: {}",
            String::from_utf8_lossy(&result.stderr)
        ));
    }
    Ok(t0.elapsed())
}

fn end_to_end(root: &Path) -> Outcome {
    let (a, b) = (root.join("first"), root.join("second"));
    let ta = run_all(&a)?;
    let tb = run_all(&b)?;
    ensure(ta < RUN_ALL_BUDGET && tb < RUN_ALL_BUDGET, || {
        format!("runs took {ta:?} and {tb:?}")
    })?;
    let report_a = std::fs::read(a.join("report/report.txt")).map_err(|e| e.to_string())?;
    let report_b = std::fs::read(b.join("report/report.txt")).map_err(|e| e.to_string())?;
    ensure(report_a == report_b, || {
        "report tables differ between runs".into()
    })?;
    let csv_a = std::fs::read(a.join("report/report.csv")).map_err(|e| e.to_string())?;
    let csv_b = std::fs::read(b.join("report/report.csv")).map_err(|e| e.to_string())?;
    ensure(csv_a == csv_b, || {
        "machine-readable reports differ between runs".into()
    })?;

    let table = String::from_utf8(report_a).map_err(|e| e.to_string())?;
    let expected = [
        ("ANN (Kim et. al, 2021)", ["0.068", "n/a", "0.048"]),
        ("MLP (Kumar et. al, 2020)", ["0.114", "0.021", "32.29"]),
        ("LSTM (Kumar et. al, 2020)", ["0.013", "0.018", "3.67"]),
    ];
    for (label, values) in expected {
        let line = table
            .lines()
            .find(|l| l.starts_with(label))
            .ok_or(format!("no {label} row"))?;
        let cells: Vec<&str> = line[label.len()..].split_whitespace().collect();
        ensure(cells[..3] == values, || {
            format!("{label} row reads {cells:?}")
        })?;
    }
    for c in FeatureConfig::ALL {
        let line = table
            .lines()
            .find(|l| l.starts_with(c.label()) && l[c.label().len()..].starts_with(' '))
            .ok_or(format!("no row for configuration {c}"))?;
        let cells: Vec<&str> = line[c.label().len()..].split_whitespace().collect();
        for cell in &cells[..3] {
            let v: f64 = cell
                .parse()
                .map_err(|_| format!("{c}: unparseable metric {cell}"))?;
            ensure(v.is_finite(), || format!("{c}: non-finite metric"))?;
        }
        ensure(
            cells[3].starts_with("seed=42") && cells[4].starts_with("data="),
            || format!("{c}: provenance {:?}", &cells[3..]),
        )?;
    }
    Ok(format!(
        "runs {:.1}s / {:.1}s, reports byte-identical, 3 literature + 3 local rows with finite metrics",
        ta.as_secs_f64(),
        tb.as_secs_f64()
    ))
}

fn prediction_export(root: &Path) -> Outcome {
    let run = root.join("first");
    let mut lens = Vec::new();
    for c in FeatureConfig::ALL {
        let snapshot = std::fs::File::open(run.join(format!("featurize/{c}/dataset.txt")))
            .map_err(|e| e.to_string())?;
        let ds = read_snapshot(std::io::BufReader::new(snapshot)).map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(run.join(format!("evaluate/{c}/predictions.csv")))
            .map_err(|e| e.to_string())?;
        ensure(
            text.starts_with("date,actual,predicted,actual_denorm,predicted_denorm\n"),
            || format!("{c}: unexpected header"),
        )?;
        let points = read_predictions_csv(text.as_bytes()).map_err(|e| e.to_string())?;
        ensure(points.len() == ds.test_len(), || {
            format!("{c}: {} rows for {} test days", points.len(), ds.test_len())
        })?;
        let dates: Vec<NaiveDate> = (ds.split_index..ds.len())
            .map(|i| ds.target_date(i))
            .collect();
        ensure(
            points.iter().map(|p| p.date).eq(dates.iter().copied()),
            || format!("{c}: prediction dates differ from the test split"),
        )?;
        lens.push(points.len());
    }
    Ok(format!("rows per configuration {lens:?}, columns parse"))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let root = scratch.path().to_path_buf();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let checks: Vec<(&str, Check)> = vec![
        ("gradient suite", Box::new(gradient_suite)),
        ("metric oracles", Box::new(metric_oracles)),
        ("formula exactness", Box::new(formula_exactness)),
        ("correlation oracle", Box::new(correlation_oracle)),
        ("split fidelity", Box::new(split_fidelity)),
        ("overfit sanity", Box::new(overfit_sanity)),
        ("end-to-end determinism", Box::new(|| end_to_end(&root))),
        ("prediction export", Box::new(|| prediction_export(&root))),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    match real_eth_btc() {
        Some(Ok(detail)) => println!("PASS  real-data ETH-BTC correlation: {detail}"),
        Some(Err(detail)) => {
            failed += 1;
            println!("FAIL  real-data ETH-BTC correlation: {detail}");
        }
        None => println!("SKIP  real-data ETH-BTC correlation: ETHCAST_REAL_SNAPSHOT not set"),
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed.min(checks.len()),
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
