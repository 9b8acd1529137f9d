//! Loading hourly smart-meter readings from CSV and cutting a window in
//! which a set of users all have complete data.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fedsim::ClientRecord;
use crate::signal::SampledSignal;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column '{0}' not found in header")]
    MissingColumn(String),
    #[error("no parseable rows")]
    NoRows,
    #[error("no window of {hours} consecutive hours is complete for any user")]
    NoCommonWindow { hours: usize },
    #[error("min_days must be at least 1")]
    InvalidDays,
}

/// Which CSV columns hold what, and how timestamps are written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub timestamp: String,
    pub user: String,
    pub value: String,
    /// chrono format string, or `unix` for epoch seconds.
    pub timestamp_format: String,
    /// Offset of the recorded local time from UTC; no DST handling.
    pub utc_offset_hours: i32,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            timestamp: "timestamp".into(),
            user: "user".into(),
            value: "W3".into(),
            timestamp_format: "%Y-%m-%d %H:%M:%S".into(),
            utc_offset_hours: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReading {
    /// UTC, truncated to the hour.
    pub timestamp: NaiveDateTime,
    pub user_id: String,
    /// Watt-hours.
    pub energy: f64,
}

impl RawReading {
    fn hour_index(&self) -> i64 {
        self.timestamp.and_utc().timestamp().div_euclid(3600)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    /// 1-based line number in the file, counting the header.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub readings: Vec<RawReading>,
    pub skipped: Vec<SkippedRow>,
}

fn parse_timestamp(raw: &str, map: &ColumnMap) -> Result<NaiveDateTime, String> {
    let raw = raw.trim();
    let local = if map.timestamp_format == "unix" {
        let secs: i64 = raw.parse().map_err(|_| format!("bad epoch seconds '{raw}'"))?;
        DateTime::from_timestamp(secs, 0)
            .ok_or_else(|| format!("epoch out of range '{raw}'"))?
            .naive_utc()
    } else {
        NaiveDateTime::parse_from_str(raw, &map.timestamp_format)
            .map_err(|e| format!("bad timestamp '{raw}': {e}"))?
    };
    let utc = local - chrono::Duration::hours(i64::from(map.utc_offset_hours));
    let secs = utc.and_utc().timestamp();
    Ok(DateTime::from_timestamp(secs - secs.rem_euclid(3600), 0)
        .expect("in range")
        .naive_utc())
}

/// Reads every parseable row; bad rows are listed in the report.
pub fn load_csv(path: &Path, map: &ColumnMap) -> Result<LoadReport, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let (ts_col, user_col, value_col) = (col(&map.timestamp)?, col(&map.user)?, col(&map.value)?);

    let mut readings = Vec::new();
    let mut skipped = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                skipped.push(SkippedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let parsed = (|| {
            let get = |c: usize| record.get(c).ok_or_else(|| "missing field".to_string());
            let timestamp = parse_timestamp(get(ts_col)?, map)?;
            let user_id = get(user_col)?.trim().to_string();
            if user_id.is_empty() {
                return Err("empty user id".to_string());
            }
            let raw = get(value_col)?.trim();
            let energy: f64 = raw.parse().map_err(|_| format!("bad value '{raw}'"))?;
            if !energy.is_finite() || energy < 0.0 {
                return Err(format!("energy must be finite and nonnegative, got {energy}"));
            }
            Ok(RawReading {
                timestamp,
                user_id,
                energy,
            })
        })();
        match parsed {
            Ok(r) => readings.push(r),
            Err(reason) => skipped.push(SkippedRow { line, reason }),
        }
    }
    if readings.is_empty() {
        return Err(IngestError::NoRows);
    }
    Ok(LoadReport { readings, skipped })
}

/// Users with complete hourly data over one common window.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncedSignals {
    /// First hour of the window (UTC).
    pub window_start: NaiveDateTime,
    pub hours: usize,
    pub signals: BTreeMap<String, SampledSignal>,
}

impl SyncedSignals {
    /// Clients in user-id order.
    pub fn into_clients(self) -> Vec<ClientRecord> {
        self.signals
            .into_iter()
            .map(|(id, s)| ClientRecord::new(id, s))
            .collect()
    }
}

/// Picks the window of `min_days * 24` hours that the most users cover
/// without any missing hour (earliest such window on ties) and returns
/// those users' readings over it.
///
/// Duplicate readings for one user and hour keep the first occurrence.
pub fn filter_synchronized(readings: &[RawReading], min_days: usize) -> Result<SyncedSignals, IngestError> {
    if min_days == 0 {
        return Err(IngestError::InvalidDays);
    }
    let hours = min_days * 24;
    let mut by_user: BTreeMap<&str, BTreeMap<i64, f64>> = BTreeMap::new();
    for r in readings {
        by_user
            .entry(r.user_id.as_str())
            .or_default()
            .entry(r.hour_index())
            .or_insert(r.energy);
    }

    // each run of consecutive hours long enough admits window starts in
    // [run_start, run_end - hours + 1]; sweep those intervals
    let span = hours as i64;
    let mut events: BTreeMap<i64, i64> = BTreeMap::new();
    for series in by_user.values() {
        for (start, end) in runs(series) {
            if end - start + 1 >= span {
                *events.entry(start).or_default() += 1;
                *events.entry(end - span + 2).or_default() -= 1;
            }
        }
    }
    let mut best: Option<(i64, i64)> = None;
    let mut active = 0i64;
    for (&at, &delta) in &events {
        active += delta;
        if active > 0 && best.is_none_or(|(_, c)| active > c) {
            best = Some((at, active));
        }
    }
    let Some((start, _)) = best else {
        return Err(IngestError::NoCommonWindow { hours });
    };

    let mut signals = BTreeMap::new();
    for (user, series) in &by_user {
        let values: Option<Vec<f64>> = (start..start + span).map(|h| series.get(&h).copied()).collect();
        if let Some(values) = values {
            signals.insert(
                user.to_string(),
                SampledSignal::new(values).expect("window is nonempty and values are finite"),
            );
        }
    }
    let window_start = DateTime::from_timestamp(start * 3600, 0)
        .expect("hour index came from a valid timestamp")
        .naive_utc();
    Ok(SyncedSignals {
        window_start,
        hours,
        signals,
    })
}

fn runs(series: &BTreeMap<i64, f64>) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut iter = series.keys().copied();
    let Some(first) = iter.next() else {
        return out;
    };
    let (mut start, mut prev) = (first, first);
    for h in iter {
        if h != prev + 1 {
            out.push((start, prev));
            start = h;
        }
        prev = h;
    }
    out.push((start, prev));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn at(day: u32, hour: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2020, 1, day)
            .unwrap()
            .and_hms_opt(hour, 0, 0)
            .unwrap()
    }

    fn reading(user: &str, t: NaiveDateTime, e: f64) -> RawReading {
        RawReading {
            timestamp: t,
            user_id: user.into(),
            energy: e,
        }
    }

    fn hourly(user: &str, from: NaiveDateTime, count: i64) -> Vec<RawReading> {
        (0..count)
            .map(|h| reading(user, from + chrono::Duration::hours(h), h as f64))
            .collect()
    }

    #[test]
    fn loads_well_formed_rows() {
        let f = write(
            "timestamp,user,W3\n2020-01-01 00:00:00,a,1.5\n2020-01-01 01:00:00,a,2\n2020-01-01 00:00:00,b,0\n",
        );
        let rep = load_csv(f.path(), &ColumnMap::default()).unwrap();
        assert_eq!(rep.readings.len(), 3);
        assert!(rep.skipped.is_empty());
        assert_eq!(rep.readings[1].timestamp, at(1, 1));
    }

    #[test]
    fn reports_malformed_rows() {
        let f = write(
            "timestamp,user,W3\n2020-01-01 00:00:00,a,1.5\n2020-13-01 01:00:00,a,2\n2020-01-01 02:00:00,a,-4\n2020-01-01 03:00:00,a,3\n",
        );
        let rep = load_csv(f.path(), &ColumnMap::default()).unwrap();
        assert_eq!(rep.readings.len(), 2);
        assert_eq!(rep.skipped.len(), 2);
        assert_eq!(rep.skipped[0].line, 3);
        assert!(rep.skipped[0].reason.contains("timestamp"));
    }

    #[test]
    fn load_errors() {
        let missing = load_csv(Path::new("/nonexistent/readings.csv"), &ColumnMap::default());
        assert!(matches!(missing, Err(IngestError::Io { .. })));
        let f = write("time,user,W3\n2020-01-01 00:00:00,a,1\n");
        assert!(matches!(
            load_csv(f.path(), &ColumnMap::default()),
            Err(IngestError::MissingColumn(c)) if c == "timestamp"
        ));
        let f = write("timestamp,user,W3\nnot a date,a,1\n");
        assert!(matches!(load_csv(f.path(), &ColumnMap::default()), Err(IngestError::NoRows)));
    }

    #[test]
    fn custom_columns_offset_and_epoch() {
        let f = write("uid,ts,energy\nx,2020-01-01T05:30,1\n");
        let map = ColumnMap {
            timestamp: "ts".into(),
            user: "uid".into(),
            value: "energy".into(),
            timestamp_format: "%Y-%m-%dT%H:%M".into(),
            utc_offset_hours: 2,
        };
        let rep = load_csv(f.path(), &map).unwrap();
        assert_eq!(rep.readings[0].timestamp, at(1, 3));
        let f = write("uid,ts,energy\nx,3600,1\n");
        let map = ColumnMap {
            timestamp_format: "unix".into(),
            utc_offset_hours: 0,
            ..map
        };
        let rep = load_csv(f.path(), &map).unwrap();
        assert_eq!(rep.readings[0].timestamp.and_utc().timestamp(), 3600);
    }

    #[test]
    fn two_overlapping_users() {
        let mut r = hourly("a", at(1, 0), 720);
        r.extend(hourly("b", at(1, 0), 720));
        let out = filter_synchronized(&r, 30).unwrap();
        assert_eq!(out.signals.len(), 2);
        assert!(out.signals.values().all(|s| s.len() == 720));
        assert_eq!(out.window_start, at(1, 0));
    }

    #[test]
    fn gap_drops_user() {
        let mut r = hourly("a", at(1, 0), 48);
        let mut b = hourly("b", at(1, 0), 48);
        b.remove(10);
        r.extend(b);
        let out = filter_synchronized(&r, 2).unwrap();
        assert_eq!(out.signals.keys().collect::<Vec<_>>(), vec!["a"]);
    }

    #[test]
    fn window_maximises_users_then_earliest() {
        // a covers days 1-3, b covers days 2-4, c covers day 4 only
        let mut r = hourly("a", at(1, 0), 72);
        r.extend(hourly("b", at(2, 0), 72));
        r.extend(hourly("c", at(4, 0), 24));
        let out = filter_synchronized(&r, 1).unwrap();
        assert_eq!(out.window_start, at(2, 0));
        assert_eq!(out.signals.len(), 2);
        assert_eq!(out.signals["b"].values()[0], 0.0);
        assert_eq!(out.signals["a"].values()[0], 24.0);
        let out = filter_synchronized(&r, 3).unwrap();
        assert_eq!(out.window_start, at(1, 0));
        assert_eq!(out.signals.len(), 1);
    }

    #[test]
    fn no_window() {
        let r = hourly("a", at(1, 0), 10);
        assert!(matches!(
            filter_synchronized(&r, 1),
            Err(IngestError::NoCommonWindow { hours: 24 })
        ));
        assert!(matches!(filter_synchronized(&r, 0), Err(IngestError::InvalidDays)));
    }

    #[test]
    fn deterministic_reload() {
        let f = write("timestamp,user,W3\n2020-01-01 00:00:00,a,1.5\n2020-01-01 01:00:00,a,2\n");
        let a = load_csv(f.path(), &ColumnMap::default()).unwrap();
        let b = load_csv(f.path(), &ColumnMap::default()).unwrap();
        assert_eq!(a, b);
    }
}
