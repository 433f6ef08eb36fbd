use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};

use super::{IngestError, WindRecord};

/// Header of the record CSV, in canonical order.
pub const CSV_COLUMNS: [&str; 8] = [
    "timestamp",
    "wind_speed",
    "wind_speed_std",
    "wind_dir",
    "wind_dir_std",
    "temperature",
    "pressure",
    "power",
];

/// Non-fatal findings while parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum IngestWarning {
    /// Row had a missing or NaN field and was skipped.
    DroppedRow { row: usize, column: String },
    /// Timestamp not strictly after its predecessor.
    NonMonotonicTimestamp { row: usize },
}

#[derive(Debug, Clone)]
pub struct ParsedCsv {
    pub records: Vec<WindRecord>,
    /// Number of data rows read, including dropped ones.
    pub rows_read: usize,
    pub warnings: Vec<IngestWarning>,
}

impl ParsedCsv {
    pub fn dropped_rows(&self) -> usize {
        self.warnings
            .iter()
            .filter(|w| matches!(w, IngestWarning::DroppedRow { .. }))
            .count()
    }
}

pub fn parse_csv(path: impl AsRef<Path>) -> Result<ParsedCsv, IngestError> {
    read_csv(File::open(path)?)
}

fn is_missing(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("na")
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc())
}

/// Reads records from any CSV source. Rows with missing or NaN fields are
/// dropped and reported as warnings.
pub fn read_csv<R: Read>(reader: R) -> Result<ParsedCsv, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut col_idx = [0usize; 8];
    for (slot, name) in col_idx.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))?;
    }

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut rows_read = 0;
    let mut last_ts: Option<DateTime<Utc>> = None;
    'rows: for (i, result) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = result?;
        rows_read += 1;
        let field = |c: usize| rec.get(col_idx[c]).unwrap_or("");

        let ts_raw = field(0);
        if is_missing(ts_raw) {
            warnings.push(IngestWarning::DroppedRow {
                row,
                column: CSV_COLUMNS[0].into(),
            });
            continue;
        }
        let timestamp = parse_timestamp(ts_raw).ok_or(IngestError::MalformedTimestamp { row })?;

        let mut vals = [0.0f64; 7];
        for (c, v) in vals.iter_mut().enumerate() {
            let raw = field(c + 1);
            let column = CSV_COLUMNS[c + 1];
            if is_missing(raw) {
                warnings.push(IngestWarning::DroppedRow {
                    row,
                    column: column.into(),
                });
                continue 'rows;
            }
            *v = raw.parse::<f64>().map_err(|_| IngestError::MalformedNumber {
                row,
                column: column.into(),
            })?;
            if !v.is_finite() {
                warnings.push(IngestWarning::DroppedRow {
                    row,
                    column: column.into(),
                });
                continue 'rows;
            }
        }
        let [wind_speed, wind_speed_std, wind_dir, wind_dir_std, temperature, pressure, power] =
            vals;
        for (v, c) in [(wind_speed, 1), (wind_speed_std, 2), (wind_dir_std, 4)] {
            if v < 0.0 {
                return Err(IngestError::OutOfRange {
                    row,
                    column: CSV_COLUMNS[c].into(),
                });
            }
        }
        if pressure <= 0.0 {
            return Err(IngestError::OutOfRange {
                row,
                column: "pressure".into(),
            });
        }

        if let Some(prev) = last_ts {
            if timestamp <= prev {
                warnings.push(IngestWarning::NonMonotonicTimestamp { row });
            }
        }
        last_ts = Some(timestamp);
        records.push(
            WindRecord {
                timestamp,
                wind_speed,
                wind_speed_std,
                wind_dir,
                wind_dir_std,
                temperature,
                pressure,
                power,
            }
            .normalized(),
        );
    }
    Ok(ParsedCsv {
        records,
        rows_read,
        warnings,
    })
}

/// Writes records in the canonical column order. Output is byte-stable for
/// identical input.
pub fn write_csv<W: Write>(records: &[WindRecord], writer: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            r.wind_speed.to_string(),
            r.wind_speed_std.to_string(),
            r.wind_dir.to_string(),
            r.wind_dir_std.to_string(),
            r.temperature.to_string(),
            r.pressure.to_string(),
            r.power.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "timestamp,wind_speed,wind_speed_std,wind_dir,wind_dir_std,temperature,pressure,power\n";

    #[test]
    fn parses_rows_in_order() {
        let text = format!(
            "{HEADER}2017-01-01T00:00:00Z,5.0,0.5,90,5,-2.0,1010,1200\n\
             2017-01-01T00:10:00Z,6.0,0.6,370,5,-2.5,1011,-15\r\n\
             2017-01-01 00:20:00,7.0,0.7,180,6,-3.0,1012,2400\n"
        );
        let parsed = read_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.rows_read, 3);
        assert!(parsed.warnings.is_empty());
        assert_eq!(parsed.records[0].wind_speed, 5.0);
        assert_eq!(parsed.records[1].wind_dir, 10.0);
        assert_eq!(parsed.records[1].power, -15.0);
        assert_eq!(parsed.records[2].wind_speed, 7.0);
    }

    #[test]
    fn missing_column_is_reported() {
        let text = "timestamp,wind_speed,wind_speed_std,wind_dir,wind_dir_std,temperature,power\n\
                    2017-01-01T00:00:00Z,5,0.5,90,5,-2,1200\n";
        match read_csv(text.as_bytes()) {
            Err(IngestError::MissingColumn(c)) => assert_eq!(c, "pressure"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_number_names_row_and_column() {
        let text = format!(
            "{HEADER}2017-01-01T00:00:00Z,5,0.5,90,5,-2,1010,1\n\
             2017-01-01T00:10:00Z,abc,0.5,90,5,-2,1010,1\n"
        );
        match read_csv(text.as_bytes()) {
            Err(IngestError::MalformedNumber { row, column }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "wind_speed");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_rows_dropped_and_order_warned() {
        let text = format!(
            "{HEADER}2017-01-01T00:10:00Z,5,0.5,90,5,-2,1010,1\n\
             2017-01-01T00:00:00Z,5,0.5,90,5,-2,1010,1\n\
             2017-01-01T00:20:00Z,NaN,0.5,90,5,-2,1010,1\n\
             2017-01-01T00:30:00Z,5,0.5,90,5,,1010,1\n"
        );
        let parsed = read_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.dropped_rows(), 2);
        assert!(parsed
            .warnings
            .contains(&IngestWarning::NonMonotonicTimestamp { row: 2 }));
    }

    #[test]
    fn write_then_read_round_trips() {
        let text = format!("{HEADER}2017-03-01T12:00:00Z,5.25,0.5,359.5,5,-2.125,1010.5,1200.75\n");
        let parsed = read_csv(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_csv(&parsed.records, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
