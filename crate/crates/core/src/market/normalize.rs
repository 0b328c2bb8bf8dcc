use super::{CoinSeries, DataError};

/// Number of decimal digits in the integer part of `x`; zero when `x < 1`.
pub fn digit_count(x: f64) -> u32 {
    let mut v = x.floor();
    let mut digits = 0;
    while v >= 1.0 {
        v = (v / 10.0).floor();
        digits += 1;
    }
    digits
}

/// `10^d` where `d` is the digit count of the largest close.
pub fn price_scale(closes: &[f64]) -> Option<f64> {
    let max = closes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max > 0.0).then(|| 10f64.powi(digit_count(max) as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceNormalization {
    pub values: Vec<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeNormalization {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

/// Divides every close by the digit scale of the largest close, mapping
/// positive prices into `(0, 1]`.
pub fn normalize_prices(symbol: &str, closes: &[f64]) -> Result<PriceNormalization, DataError> {
    let scale = price_scale(closes).ok_or_else(|| DataError::NonPositivePrice {
        symbol: symbol.to_string(),
        max: closes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })?;
    Ok(PriceNormalization {
        values: closes.iter().map(|c| c / scale).collect(),
        scale,
    })
}

pub fn normalize_price(series: &CoinSeries) -> Result<PriceNormalization, DataError> {
    normalize_prices(&series.symbol, &series.closes())
}

pub fn denormalize_prices(values: &[f64], scale: f64) -> Vec<f64> {
    values.iter().map(|v| v * scale).collect()
}

/// Min-max scaling into `[0, 1]`. Constant input is an error.
pub fn normalize_volumes(symbol: &str, volumes: &[f64]) -> Result<VolumeNormalization, DataError> {
    let min = volumes.iter().copied().fold(f64::INFINITY, f64::min);
    let max = volumes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(DataError::DegenerateVolume(symbol.to_string()));
    }
    Ok(VolumeNormalization {
        values: volumes.iter().map(|v| (v - min) / (max - min)).collect(),
        min,
        max,
    })
}

pub fn normalize_volume(series: &CoinSeries) -> Result<VolumeNormalization, DataError> {
    normalize_volumes(&series.symbol, &series.volumes())
}
