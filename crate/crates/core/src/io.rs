//! Power and occupancy CSV ingestion.
//!
//! Power files carry a `timestamp,power_w` header; timestamps are integer
//! epoch seconds or ISO-8601. Readings are bucketed onto a uniform grid
//! anchored at the first timestamp: readings sharing a bucket are averaged,
//! short gaps are forward-filled and negative readings are clamped to zero.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeZone};
use chrono_tz::Tz;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{OccupancySeries, PowerSeries, Timestamp};

pub const DEFAULT_MAX_GAP: usize = 10;

#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub timestamp_col: String,
    pub value_col: String,
    /// Grid period; inferred from the smallest positive timestamp step when `None`.
    pub period_s: Option<u32>,
    /// Longest run of missing samples that is forward-filled.
    pub max_gap: usize,
    /// Zone for naive ISO-8601 timestamps and for the resulting series.
    pub timezone: Tz,
}

impl CsvSchema {
    pub fn power(timezone: Tz) -> Self {
        Self {
            timestamp_col: "timestamp".into(),
            value_col: "power_w".into(),
            period_s: None,
            max_gap: DEFAULT_MAX_GAP,
            timezone,
        }
    }

    pub fn occupancy(timezone: Tz) -> Self {
        Self {
            value_col: "occupied".into(),
            ..Self::power(timezone)
        }
    }

    pub fn with_period(mut self, period_s: u32) -> Self {
        self.period_s = Some(period_s);
        self
    }
}

/// What ingestion had to repair. Echoed into run metadata.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    pub clamped_negative: usize,
    pub collapsed_duplicates: usize,
    pub forward_filled: usize,
    pub gap_policy: &'static str,
}

impl IngestReport {
    pub fn is_clean(&self) -> bool {
        self.clamped_negative == 0 && self.collapsed_duplicates == 0 && self.forward_filled == 0
    }
}

pub fn parse_timestamp(raw: &str, tz: Tz) -> Option<Timestamp> {
    let raw = raw.trim();
    if let Ok(t) = raw.parse::<i64>() {
        return Some(t);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return tz.from_local_datetime(&naive).earliest().map(|d| d.timestamp());
        }
    }
    None
}

fn read_rows(path: &Path, schema: &CsvSchema) -> Result<Vec<(Timestamp, f64, u64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column {name:?}")))
    };
    let (ti, vi) = (col(&schema.timestamp_col)?, col(&schema.value_col)?);

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let t_raw = record.get(ti).unwrap_or("");
        let v_raw = record.get(vi).unwrap_or("");
        let t = parse_timestamp(t_raw, schema.timezone)
            .ok_or_else(|| parse_err(line, format!("bad timestamp {t_raw:?}")))?;
        let v: f64 = v_raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(line, format!("bad value {v_raw:?}")))?;
        rows.push((t, v, line));
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    rows.sort_by_key(|r| r.0);
    Ok(rows)
}

fn infer_period(rows: &[(Timestamp, f64, u64)]) -> Option<u32> {
    rows.windows(2)
        .map(|w| w[1].0 - w[0].0)
        .filter(|d| *d > 0)
        .min()
        .and_then(|d| u32::try_from(d).ok())
}

/// Loads a power CSV onto a uniform grid.
pub fn load_power_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<(PowerSeries, IngestReport)> {
    let path = path.as_ref();
    let rows = read_rows(path, schema)?;
    let period = schema.period_s.or_else(|| infer_period(&rows)).unwrap_or(1);
    let p = period as i64;
    let t0 = rows[0].0;
    let n = ((rows.last().unwrap().0 - t0) / p) as usize + 1;

    let mut report = IngestReport {
        rows: rows.len(),
        gap_policy: "forward-fill",
        ..Default::default()
    };
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for &(t, v, _) in &rows {
        let idx = ((t - t0) / p) as usize;
        let v = if v < 0.0 {
            report.clamped_negative += 1;
            0.0
        } else {
            v
        };
        sums[idx] += v;
        counts[idx] += 1;
    }
    report.collapsed_duplicates = counts.iter().map(|c| c.saturating_sub(1)).sum();

    let mut values = Vec::with_capacity(n);
    let mut run = 0usize;
    for i in 0..n {
        if counts[i] > 0 {
            if run > schema.max_gap {
                return Err(Error::Gap {
                    from: t0 + (i - run - 1) as i64 * p,
                    to: t0 + i as i64 * p,
                    missing: run,
                    max_gap: schema.max_gap,
                });
            }
            run = 0;
            values.push(sums[i] / counts[i] as f64);
        } else {
            run += 1;
            report.forward_filled += 1;
            let prev = *values.last().expect("first bucket is always populated");
            values.push(prev);
        }
    }
    if report.clamped_negative > 0 {
        log::warn!(
            "{}: clamped {} negative readings to 0 W",
            path.display(),
            report.clamped_negative
        );
    }
    Ok((PowerSeries::new(t0, schema.timezone, period, values)?, report))
}

pub fn write_power_csv(series: &PowerSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_power_csv_to(series, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_power_csv_to(series: &PowerSeries, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "timestamp,power_w")?;
    for (i, v) in series.values().iter().enumerate() {
        writeln!(w, "{},{}", series.time_at(i), v)?;
    }
    Ok(())
}

/// Loads an occupancy CSV and windows it. Each row's state holds until the
/// next row; the final row holds for the median row spacing.
pub fn load_occupancy_csv(path: impl AsRef<Path>, schema: &CsvSchema, window_s: u32) -> Result<OccupancySeries> {
    let path = path.as_ref();
    let rows = read_rows(path, schema)?;
    let mut samples = Vec::with_capacity(rows.len());
    for &(t, v, line) in &rows {
        let occ = match v {
            0.0 => false,
            1.0 => true,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("occupied must be 0 or 1, got {other}"),
                })
            }
        };
        samples.push((t, occ));
    }
    let mut steps: Vec<i64> = samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let mut sorted = steps.clone();
    sorted.sort_unstable();
    let tail = sorted.get(sorted.len() / 2).copied().unwrap_or(window_s as i64);
    steps.push(tail);
    OccupancySeries::from_samples(&samples, &steps, window_s)
}

pub fn write_occupancy_csv(samples: &[(Timestamp, bool)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut inner = || -> std::io::Result<()> {
        writeln!(w, "timestamp,occupied")?;
        for (t, occ) in samples {
            writeln!(w, "{},{}", t, u8::from(*occ))?;
        }
        w.flush()
    };
    inner().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    fn schema() -> CsvSchema {
        CsvSchema::power(Tz::UTC)
    }

    #[test]
    fn identity_ingestion() {
        let f = csv_file("timestamp,power_w\n0,100\n1,100\n2,100\n");
        let (s, rep) = load_power_csv(f.path(), &schema()).unwrap();
        assert_eq!(s.values(), &[100.0, 100.0, 100.0]);
        assert_eq!(s.period_s(), 1);
        assert!(rep.is_clean());
    }

    #[test]
    fn forward_fills_short_gap() {
        let f = csv_file("timestamp,power_w\n0,100\n2,100\n");
        let (s, rep) = load_power_csv(f.path(), &schema().with_period(1)).unwrap();
        assert_eq!(s.values(), &[100.0, 100.0, 100.0]);
        assert_eq!(rep.forward_filled, 1);
    }

    #[test]
    fn long_gap_is_an_error() {
        let f = csv_file("timestamp,power_w\n0,1\n12,1\n");
        let err = load_power_csv(f.path(), &schema().with_period(1)).unwrap_err();
        match err {
            Error::Gap { from, to, missing, .. } => {
                assert_eq!((from, to, missing), (0, 12, 11));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicates_mean_and_negatives_clamped() {
        let f = csv_file("timestamp,power_w\n1,-5\n0,100\n0,200\n");
        let (s, rep) = load_power_csv(f.path(), &schema()).unwrap();
        assert_eq!(s.values(), &[150.0, 0.0]);
        assert_eq!(rep.collapsed_duplicates, 1);
        assert_eq!(rep.clamped_negative, 1);
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = csv_file("timestamp,power_w\n0,1\n1,abc\n");
        match load_power_csv(f.path(), &schema()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn iso_timestamps() {
        let f = csv_file(
            "timestamp,power_w\n1970-01-01T00:00:00Z,5\n1970-01-01 00:01:00,7\n",
        );
        let (s, _) = load_power_csv(f.path(), &schema()).unwrap();
        assert_eq!(s.period_s(), 60);
        assert_eq!(s.values(), &[5.0, 7.0]);
    }

    #[test]
    fn occupancy_windowing() {
        let f = csv_file("timestamp,occupied\n0,0\n600,1\n660,0\n1800,0\n");
        let o = load_occupancy_csv(f.path(), &CsvSchema::occupancy(Tz::UTC), 900).unwrap();
        assert_eq!(o.window_start, 0);
        assert!(o.flags[0]);
        assert!(o.flags[1..].iter().all(|f| !f));
    }
}
