//! Plain-text dataset snapshots.
//!
//! ```text
//! # ethcast-dataset v1
//! # configuration: B
//! # window: 14
//! # split_index: 579
//! # target_feature: 0
//! # scaling.eth_close: {"kind":"price-scale","scale":10000.0}
//! # scaling.eth_volume: {"kind":"min-max","min":1.0,"max":9.0}
//! # scaling.eth_sentiment: {"kind":"identity"}
//! date,role,eth_close,eth_volume,eth_sentiment,target
//! 2021-01-01,context,0.0731,0.25,0.61,
//! 2021-01-15,train,0.0745,0.31,0.58,0.0745
//! ```
//!
//! `role` is `context` for the first `window` rows (lookback only), then
//! `train` or `test` according to which split the row's target belongs to.
//! `target` repeats the target column on target rows. Floats use Rust's
//! shortest round-trip formatting, so reading a snapshot back reproduces
//! the dataset bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::NaiveDate;

use super::{DataError, FeatureConfig, FeatureScaling, WindowedDataset};

const MAGIC: &str = "# ethcast-dataset v1";

pub fn write_snapshot<W: Write>(ds: &WindowedDataset, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    if let Some(c) = ds.configuration {
        writeln!(out, "# configuration: {c}")?;
    }
    writeln!(out, "# window: {}", ds.window)?;
    writeln!(out, "# split_index: {}", ds.split_index)?;
    writeln!(out, "# target_feature: {}", ds.target_feature)?;
    for (name, scaling) in ds.feature_names.iter().zip(&ds.scaling) {
        let json = serde_json::to_string(scaling).map_err(std::io::Error::other)?;
        writeln!(out, "# scaling.{name}: {json}")?;
    }
    writeln!(out, "date,role,{},target", ds.feature_names.join(","))?;
    for r in 0..ds.num_rows() {
        let role = match r.checked_sub(ds.window) {
            None => "context",
            Some(i) if i < ds.split_index => "train",
            Some(_) => "test",
        };
        write!(out, "{},{role}", ds.dates[r])?;
        for v in ds.row(r) {
            write!(out, ",{v}")?;
        }
        if role == "context" {
            writeln!(out, ",")?;
        } else {
            writeln!(out, ",{}", ds.row(r)[ds.target_feature])?;
        }
    }
    Ok(())
}

fn malformed(line: usize, reason: impl Into<String>) -> DataError {
    DataError::Malformed {
        line: line as u64,
        reason: reason.into(),
    }
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<WindowedDataset, DataError> {
    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    let mut header: Option<Vec<String>> = None;
    let mut dates = Vec::new();
    let mut roles = Vec::new();
    let mut features = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| malformed(lineno, e.to_string()))?;
        if lineno == 1 {
            if line.trim() != MAGIC {
                return Err(malformed(1, "not a dataset snapshot"));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest
                .split_once(": ")
                .ok_or_else(|| malformed(lineno, "metadata line without `key: value`"))?;
            meta.insert(k.to_string(), v.to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let Some(cols) = &header else {
            if fields.len() < 4
                || fields[0] != "date"
                || fields[1] != "role"
                || fields.last() != Some(&"target")
            {
                return Err(malformed(
                    lineno,
                    "expected header date,role,<features>,target",
                ));
            }
            header = Some(
                fields[2..fields.len() - 1]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            );
            continue;
        };
        if fields.len() != cols.len() + 3 {
            return Err(malformed(
                lineno,
                format!("expected {} fields", cols.len() + 3),
            ));
        }
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
            .map_err(|e| malformed(lineno, format!("bad date: {e}")))?;
        dates.push(date);
        roles.push(fields[1].to_string());
        for f in &fields[2..fields.len() - 1] {
            features.push(
                f.parse::<f64>()
                    .map_err(|_| malformed(lineno, format!("bad number {f:?}")))?,
            );
        }
    }
    let names = header.ok_or_else(|| malformed(0, "snapshot has no header row"))?;
    let get = |k: &str| {
        meta.get(k)
            .ok_or_else(|| malformed(0, format!("missing metadata {k}")))
    };
    let parse_usize = |k: &str| -> Result<usize, DataError> {
        get(k)?
            .parse()
            .map_err(|_| malformed(0, format!("metadata {k} is not an integer")))
    };
    let window = parse_usize("window")?;
    let split_index = parse_usize("split_index")?;
    let target_feature = parse_usize("target_feature")?;
    let configuration = meta
        .get("configuration")
        .map(|c| c.parse::<FeatureConfig>())
        .transpose()
        .map_err(|e| malformed(0, e))?;
    let scaling = names
        .iter()
        .map(|n| {
            let raw = get(&format!("scaling.{n}"))?;
            serde_json::from_str::<FeatureScaling>(raw).map_err(|e| malformed(0, e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let ds = WindowedDataset {
        configuration,
        feature_names: names,
        window,
        dates,
        features,
        target_feature,
        split_index,
        scaling,
    };
    ds.validate()?;
    let expected_roles = (0..ds.num_rows()).map(|r| match r.checked_sub(window) {
        None => "context",
        Some(i) if i < split_index => "train",
        Some(_) => "test",
    });
    if let Some(r) = roles.iter().zip(expected_roles).position(|(a, b)| a != b) {
        return Err(malformed(
            0,
            format!("row {} has role {:?} inconsistent with split", r, roles[r]),
        ));
    }
    Ok(ds)
}
