use std::hint::black_box;

use chrono::{Duration, NaiveDate};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ethcast_core::market::{pearson_matrix, CoinSeries, OhlcvRow, PriceField};
use ethcast_core::model::{encoder_block_forward, EncoderBlockParams};
use ethcast_core::tensor::{matmul, sum};
use ethcast_core::{backward, Mode, ModelConfig, Rng, Tensor};

fn random_tensor(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let data = (0..shape.iter().product()).map(|_| rng.normal()).collect();
    Tensor::parameter(data, shape).unwrap()
}

fn random_coin(symbol: &str, days: usize, rng: &mut Rng) -> CoinSeries {
    let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    let mut price = 100.0;
    let rows = (0..days)
        .map(|d| {
            price *= 1.0 + 0.03 * rng.normal();
            OhlcvRow {
                date: start + Duration::days(d as i64),
                open: price,
                high: price,
                low: price,
                close: price,
                adj_close: price,
                volume: 1e6,
            }
        })
        .collect();
    CoinSeries::new(symbol, rows)
}

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    let mut rng = Rng::new(1);
    for n in [16, 64, 128] {
        let a = random_tensor(&mut rng, &[32, 14, n]);
        let b = random_tensor(&mut rng, &[n, n]);
        group.bench_with_input(BenchmarkId::new("batched", n), &n, |bench, _| {
            bench.iter(|| matmul(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn bench_encoder_block(c: &mut Criterion) {
    let cfg = ModelConfig {
        model_dim: 32,
        num_heads: 4,
        head_dim: 8,
        ff_channels: 64,
        window_len: 14,
        ..ModelConfig::default()
    };
    let mut rng = Rng::new(2);
    let params = EncoderBlockParams::init(&cfg, &mut rng);
    let x = random_tensor(&mut rng, &[32, 14, 32]);
    let mut group = c.benchmark_group("encoder_block");
    group.bench_function("forward", |bench| {
        let mut drop_rng = Rng::new(3);
        bench.iter(|| {
            encoder_block_forward(black_box(&x), &params, &cfg, Mode::Eval, &mut drop_rng).unwrap()
        })
    });
    group.bench_function("forward_backward", |bench| {
        let mut drop_rng = Rng::new(3);
        bench.iter(|| {
            let y = encoder_block_forward(black_box(&x), &params, &cfg, Mode::Train, &mut drop_rng)
                .unwrap();
            backward(&sum(&y)).unwrap();
        })
    });
    group.finish();
}

fn bench_pearson_matrix(c: &mut Criterion) {
    let mut rng = Rng::new(4);
    let coins: Vec<CoinSeries> = ["ETH-USD", "BTC-USD", "ADA-USD", "DOT-USD"]
        .iter()
        .map(|s| random_coin(s, 730, &mut rng))
        .collect();
    c.bench_function("pearson_matrix/4x730", |bench| {
        bench.iter(|| pearson_matrix(black_box(&coins), PriceField::Close).unwrap())
    });
}

criterion_group!(
    benches,
    bench_matmul,
    bench_encoder_block,
    bench_pearson_matrix
);
criterion_main!(benches);
