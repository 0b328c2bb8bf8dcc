use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{CoinSeries, DataError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceField {
    Close,
    Volume,
}

impl PriceField {
    fn get(self, row: &super::OhlcvRow) -> f64 {
        match self {
            PriceField::Close => row.close,
            PriceField::Volume => row.volume,
        }
    }
}

/// Symmetric matrix of pairwise Pearson coefficients. Entries are `None`
/// where a series has zero variance over the shared dates.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub symbols: Vec<String>,
    /// Row-major `[n, n]`.
    pub values: Vec<Option<f64>>,
    /// Shared-date counts, row-major `[n, n]`.
    pub overlaps: Vec<usize>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.len() + j]
    }

    pub fn by_symbol(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.symbols.iter().position(|s| s == a)?;
        let j = self.symbols.iter().position(|s| s == b)?;
        self.get(i, j)
    }

    /// CSV with a `symbol` column followed by one column per symbol; missing
    /// coefficients are written as `n/a`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol");
        for s in &self.symbols {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (i, s) in self.symbols.iter().enumerate() {
            out.push_str(s);
            for j in 0..self.len() {
                match self.get(i, j) {
                    Some(r) => out.push_str(&format!(",{r:.6}")),
                    None => out.push_str(",n/a"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson correlation by a single pass of running co-moments. `None` for
/// fewer than two points or zero variance in either input.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson inputs differ in length");
    if x.len() < 2 {
        return None;
    }
    let (mut mx, mut my) = (0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (k, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (k + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Values of `field` for both series on their shared dates.
fn paired(a: &CoinSeries, b: &CoinSeries, field: PriceField) -> (Vec<f64>, Vec<f64>) {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < a.rows.len() && j < b.rows.len() {
        let (da, db): (NaiveDate, NaiveDate) = (a.rows[i].date, b.rows[j].date);
        match da.cmp(&db) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                xs.push(field.get(&a.rows[i]));
                ys.push(field.get(&b.rows[j]));
                i += 1;
                j += 1;
            }
        }
    }
    (xs, ys)
}

/// Pairwise Pearson matrix, each pair over the dates both series cover.
pub fn pearson_matrix(
    series: &[CoinSeries],
    field: PriceField,
) -> Result<CorrelationMatrix, DataError> {
    let n = series.len();
    let mut values = vec![None; n * n];
    let mut overlaps = vec![0; n * n];
    for i in 0..n {
        for j in i..n {
            let (x, y) = paired(&series[i], &series[j], field);
            if x.len() < 2 {
                return Err(DataError::InsufficientOverlap {
                    a: series[i].symbol.clone(),
                    b: series[j].symbol.clone(),
                    count: x.len(),
                });
            }
            let r = if i == j {
                pearson(&x, &y).map(|_| 1.0)
            } else {
                pearson(&x, &y)
            };
            values[i * n + j] = r;
            values[j * n + i] = r;
            overlaps[i * n + j] = x.len();
            overlaps[j * n + i] = x.len();
        }
    }
    Ok(CorrelationMatrix {
        symbols: series.iter().map(|s| s.symbol.clone()).collect(),
        values,
        overlaps,
    })
}
