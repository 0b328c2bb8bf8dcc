use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use super::DataError;

pub const OHLCV_HEADER: [&str; 7] = [
    "Date",
    "Open",
    "High",
    "Low",
    "Close",
    "Adj Close",
    "Volume",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OhlcvRow {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: f64,
}

/// Daily bars of one coin, strictly increasing by date.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinSeries {
    pub symbol: String,
    pub rows: Vec<OhlcvRow>,
}

/// What ingestion skipped or overrode.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadReport {
    pub symbol: String,
    pub rows_read: usize,
    pub rows_kept: usize,
    /// Rows with an empty or `null` field.
    pub dropped_missing: usize,
    pub dropped_lines: Vec<u64>,
    /// Earlier rows replaced by a later row with the same date.
    pub duplicates: usize,
}

impl CoinSeries {
    pub fn new(symbol: impl Into<String>, mut rows: Vec<OhlcvRow>) -> Self {
        rows.sort_by_key(|r| r.date);
        rows.dedup_by(|later, earlier| {
            if later.date == earlier.date {
                *earlier = *later;
                true
            } else {
                false
            }
        });
        Self {
            symbol: symbol.into(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.rows.iter().map(|r| r.date).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.close).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.volume).collect()
    }

    /// Rows restricted to `dates` (which must be sorted); missing dates are skipped.
    pub fn on_dates(&self, dates: &[NaiveDate]) -> Vec<OhlcvRow> {
        let mut out = Vec::with_capacity(dates.len());
        let mut j = 0;
        for row in &self.rows {
            while j < dates.len() && dates[j] < row.date {
                j += 1;
            }
            if j < dates.len() && dates[j] == row.date {
                out.push(*row);
            }
        }
        out
    }
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("null") || f.eq_ignore_ascii_case("nan")
}

/// Parses a Yahoo-style daily OHLCV CSV. Rows with missing fields are
/// dropped and counted; for duplicated dates the later row wins.
pub fn parse_csv<R: Read>(reader: R, symbol: &str) -> Result<(CoinSeries, LoadReport), DataError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = csv.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| DataError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?,
        None => return Err(DataError::Empty(symbol.to_string())),
    };
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != OHLCV_HEADER {
        return Err(DataError::Malformed {
            line: 1,
            reason: format!(
                "expected header {}, found {}",
                OHLCV_HEADER.join(","),
                found.join(",")
            ),
        });
    }

    let mut report = LoadReport {
        symbol: symbol.to_string(),
        ..LoadReport::default()
    };
    let mut by_date: BTreeMap<NaiveDate, OhlcvRow> = BTreeMap::new();
    for record in records {
        let record = record.map_err(|e| DataError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        report.rows_read += 1;
        if record.len() != 7 {
            return Err(DataError::Malformed {
                line,
                reason: format!("expected 7 fields, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d").map_err(|e| {
            DataError::Malformed {
                line,
                reason: format!("bad date {:?}: {e}", &record[0]),
            }
        })?;
        if record.iter().skip(1).any(is_missing) {
            report.dropped_missing += 1;
            report.dropped_lines.push(line);
            continue;
        }
        let mut values = [0.0; 6];
        for (slot, field) in values.iter_mut().zip(record.iter().skip(1)) {
            *slot = field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::Malformed {
                    line,
                    reason: format!("bad number {field:?}"),
                })?;
        }
        if values[5] < 0.0 {
            return Err(DataError::Malformed {
                line,
                reason: format!("negative volume {}", values[5]),
            });
        }
        let row = OhlcvRow {
            date,
            open: values[0],
            high: values[1],
            low: values[2],
            close: values[3],
            adj_close: values[4],
            volume: values[5],
        };
        if by_date.insert(date, row).is_some() {
            report.duplicates += 1;
        }
    }
    if by_date.is_empty() {
        return Err(DataError::Empty(symbol.to_string()));
    }
    report.rows_kept = by_date.len();
    let series = CoinSeries {
        symbol: symbol.to_string(),
        rows: by_date.into_values().collect(),
    };
    Ok((series, report))
}

/// Reads a CSV file; the symbol is the file stem (`ETH-USD.csv` → `ETH-USD`).
pub fn ingest_csv(path: &Path) -> Result<(CoinSeries, LoadReport), DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(std::io::BufReader::new(file), &symbol)
}

pub fn write_csv<W: Write>(series: &CoinSeries, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OHLCV_HEADER)?;
    for r in &series.rows {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            format!("{:.6}", r.open),
            format!("{:.6}", r.high),
            format!("{:.6}", r.low),
            format!("{:.6}", r.close),
            format!("{:.6}", r.adj_close),
            format!("{:.0}", r.volume),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Date,Open,High,Low,Close,Adj Close,Volume\n";

    fn parse(body: &str) -> Result<(CoinSeries, LoadReport), DataError> {
        parse_csv(format!("{HEADER}{body}").as_bytes(), "ETH-USD")
    }

    #[test]
    fn well_formed_rows_sorted() {
        let (s, rep) =
            parse("2022-01-03,3,3,3,3,3,30\n2022-01-01,1,1,1,1,1,10\n2022-01-02,2,2,2,2,2,20\n")
                .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.closes(), vec![1.0, 2.0, 3.0]);
        assert!(s.dates().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rep.rows_kept, 3);
    }

    #[test]
    fn duplicate_date_later_row_wins() {
        let (s, rep) = parse("2022-01-01,1,1,1,1,1,10\n2022-01-01,5,5,5,5,5,50\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.rows[0].close, 5.0);
        assert_eq!(rep.duplicates, 1);
    }

    #[test]
    fn null_volume_dropped_and_counted() {
        let (s, rep) = parse("2022-01-01,1,1,1,1,1,null\n2022-01-02,2,2,2,2,2,20\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(rep.dropped_missing, 1);
        assert_eq!(rep.dropped_lines, vec![2]);
    }

    #[test]
    fn bad_header_reported_on_line_one() {
        let err = parse_csv("Date,Close\n2022-01-01,1\n".as_bytes(), "X").unwrap_err();
        assert!(matches!(err, DataError::Malformed { line: 1, .. }));
    }

    #[test]
    fn bad_number_names_line() {
        let err = parse("2022-01-01,1,1,1,1,1,10\n2022-01-02,2,x,2,2,2,20\n").unwrap_err();
        match err {
            DataError::Malformed { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains("\"x\""));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_date_rejected() {
        assert!(parse("01/02/2022,1,1,1,1,1,10\n").is_err());
    }

    #[test]
    fn all_rows_missing_is_empty() {
        assert!(matches!(
            parse("2022-01-01,null,1,1,1,1,1\n"),
            Err(DataError::Empty(_))
        ));
    }

    #[test]
    fn write_then_parse() {
        let (s, _) = parse("2022-01-01,1.5,2,1,1.75,1.75,1000\n").unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let (again, _) = parse_csv(buf.as_slice(), "ETH-USD").unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn restrict_to_dates() {
        let (s, _) =
            parse("2022-01-01,1,1,1,1,1,1\n2022-01-02,2,2,2,2,2,2\n2022-01-04,4,4,4,4,4,4\n")
                .unwrap();
        let d = |n| NaiveDate::from_ymd_opt(2022, 1, n).unwrap();
        let rows = s.on_dates(&[d(2), d(3), d(4)]);
        assert_eq!(
            rows.iter().map(|r| r.close).collect::<Vec<_>>(),
            vec![2.0, 4.0]
        );
    }
}
