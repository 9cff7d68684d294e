//! Raw time-series data model, CSV ingestion, and per-series diagnostics.
//!
//! Raw monitoring data arrives as independently timestamped series, possibly
//! misaligned, mixed-rate, and with gaps. [`TimeSeriesSet`] holds that form;
//! [`AlignedPanel`] is the uniformly sampled matrix the discovery algorithms
//! consume. Timestamps are integer milliseconds throughout, which represents
//! both sub-second and multi-minute sampling exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// One raw observation; `value = None` marks a point that carries no
/// observation (blank or unparseable cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPoint {
    pub timestamp_ms: i64,
    pub value: Option<f64>,
}

/// Named raw series with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeriesSet {
    series: BTreeMap<String, Vec<RawPoint>>,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeriesSet {
    pub fn new(series: BTreeMap<String, Vec<RawPoint>>) -> Result<Self> {
        for (name, points) in &series {
            if name.is_empty() {
                return Err(Error::InvalidSeries {
                    name: "<empty>".into(),
                    reason: "series name is empty".into(),
                });
            }
            for w in points.windows(2) {
                if w[1].timestamp_ms <= w[0].timestamp_ms {
                    return Err(Error::InvalidSeries {
                        name: name.clone(),
                        reason: format!(
                            "timestamps not strictly increasing at {} ms",
                            w[1].timestamp_ms
                        ),
                    });
                }
            }
            if let Some(p) = points.iter().find(|p| p.value.is_some_and(|v| !v.is_finite())) {
                return Err(Error::InvalidSeries {
                    name: name.clone(),
                    reason: format!("non-finite value at {} ms", p.timestamp_ms),
                });
            }
        }
        Ok(TimeSeriesSet {
            series,
            metadata: BTreeMap::new(),
        })
    }

    pub fn series_names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn series(&self, name: &str) -> Option<&[RawPoint]> {
        self.series.get(name).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[RawPoint])> {
        self.series.iter().map(|(n, p)| (n.as_str(), p.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// How to interpret integer timestamps in a CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimestampUnit {
    #[default]
    Milliseconds,
    Seconds,
}

/// Column mapping for [`ingest_csv`]. With the defaults the first column is
/// the timestamp and every other column becomes a series.
#[derive(Debug, Clone, Default)]
pub struct ColumnSpec {
    pub timestamp_column: Option<String>,
    pub value_columns: Option<Vec<String>>,
    pub unit: TimestampUnit,
}

fn parse_timestamp(cell: &str, unit: TimestampUnit, row: usize) -> Result<i64> {
    let cell = cell.trim();
    if let Ok(n) = cell.parse::<i64>() {
        return Ok(match unit {
            TimestampUnit::Milliseconds => n,
            TimestampUnit::Seconds => n * 1000,
        });
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(cell) {
        return Ok(dt.timestamp_millis());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = chrono::NaiveDateTime::parse_from_str(cell, fmt) {
            return Ok(naive.and_utc().timestamp_millis());
        }
    }
    Err(Error::CsvRow {
        row,
        reason: format!("timestamp '{cell}' is neither an integer nor ISO-8601"),
    })
}

/// Reads a header-first CSV into a [`TimeSeriesSet`], one series per value
/// column. Blank, `NaN`, and unparseable value cells become missing points;
/// rows are re-sorted by timestamp; duplicate timestamps are rejected.
pub fn ingest_csv<R: Read>(input: R, spec: &ColumnSpec) -> Result<TimeSeriesSet> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(Error::from)?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(Error::EmptyInput("csv has no header".into()));
    }

    let ts_name = spec
        .timestamp_column
        .clone()
        .unwrap_or_else(|| headers[0].clone());
    let ts_idx = headers
        .iter()
        .position(|h| *h == ts_name)
        .ok_or_else(|| Error::MissingColumn(ts_name.clone()))?;

    let value_names: Vec<String> = match &spec.value_columns {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != ts_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    if value_names.is_empty() {
        return Err(Error::EmptyInput("no value columns selected".into()));
    }
    let value_idx: Vec<usize> = value_names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::MissingColumn(n.clone()))
        })
        .collect::<Result<_>>()?;

    // (timestamp, value, original data row) per series, sorted later.
    let mut rows: Vec<(i64, usize)> = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); value_idx.len()];
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(Error::from)?;
        let ts = parse_timestamp(&record[ts_idx], spec.unit, row_no)?;
        rows.push((ts, row_no));
        for (k, &ci) in value_idx.iter().enumerate() {
            let cell = record.get(ci).unwrap_or("").trim();
            let value = if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                None
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => None,
                }
            };
            cells[k].push(value);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("csv has no data rows".into()));
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| (rows[i].0, rows[i].1));
    for w in order.windows(2) {
        if rows[w[0]].0 == rows[w[1]].0 {
            return Err(Error::DuplicateTimestamp {
                series: value_names[0].clone(),
                timestamp_ms: rows[w[1]].0,
                row: rows[w[1]].1,
            });
        }
    }

    let mut series = BTreeMap::new();
    for (k, name) in value_names.iter().enumerate() {
        let points: Vec<RawPoint> = order
            .iter()
            .map(|&i| RawPoint {
                timestamp_ms: rows[i].0,
                value: cells[k][i],
            })
            .collect();
        if series.insert(name.clone(), points).is_some() {
            return Err(Error::InvalidSeries {
                name: name.clone(),
                reason: "duplicate series name".into(),
            });
        }
    }
    TimeSeriesSet::new(series)
}

/// Writes a [`TimeSeriesSet`] back to the ingestion dialect: `timestamp`
/// column first, one column per series, missing points as empty cells.
///
/// Series that do not share timestamps are written against the union of all
/// timestamps, so re-ingesting such a file yields missing points where a
/// series had no observation at all.
pub fn serialize_csv<W: Write>(set: &TimeSeriesSet, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let names: Vec<&str> = set.series_names().collect();
    let mut header = vec!["timestamp"];
    header.extend(&names);
    writer.write_record(&header)?;

    let mut timestamps: Vec<i64> = set
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.timestamp_ms))
        .collect();
    timestamps.sort_unstable();
    timestamps.dedup();

    let mut cursors = vec![0usize; names.len()];
    for ts in timestamps {
        let mut record = vec![ts.to_string()];
        for (k, name) in names.iter().enumerate() {
            let points = set.series(name).unwrap();
            let mut cell = String::new();
            while cursors[k] < points.len() && points[cursors[k]].timestamp_ms < ts {
                cursors[k] += 1;
            }
            if cursors[k] < points.len() && points[cursors[k]].timestamp_ms == ts {
                if let Some(v) = points[cursors[k]].value {
                    cell = format!("{v}");
                }
                cursors[k] += 1;
            }
            record.push(cell);
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Uniformly sampled T x d panel on a shared clock. Row `r` is exactly
/// `start_ms + r * period_ms`; masked cells carry no observation (their
/// stored value is 0.0 and must not be read).
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    names: Vec<String>,
    period_ms: i64,
    start_ms: i64,
    // Column-major: columns[c][r].
    columns: Vec<Vec<f64>>,
    missing: Vec<Vec<bool>>,
}

impl AlignedPanel {
    pub fn new(
        names: Vec<String>,
        period_ms: i64,
        start_ms: i64,
        columns: Vec<Vec<f64>>,
        missing: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if names.is_empty() || columns.len() != names.len() || missing.len() != names.len() {
            return Err(Error::EmptyInput(
                "panel needs at least one named column".into(),
            ));
        }
        if period_ms <= 0 {
            return Err(Error::InvalidConfig("panel period must be positive".into()));
        }
        let rows = columns[0].len();
        if rows < 2 {
            return Err(Error::EmptyInput("panel needs at least 2 rows".into()));
        }
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows || missing[c].len() != rows {
                return Err(Error::InvalidConfig("ragged panel columns".into()));
            }
            for (r, v) in col.iter().enumerate() {
                if !missing[c][r] && !v.is_finite() {
                    return Err(Error::InvalidSeries {
                        name: names[c].clone(),
                        reason: format!("non-finite value at row {r}"),
                    });
                }
            }
        }
        Ok(AlignedPanel {
            names,
            period_ms,
            start_ms,
            columns,
            missing,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn period_ms(&self) -> i64 {
        self.period_ms
    }

    pub fn start_ms(&self) -> i64 {
        self.start_ms
    }

    pub fn timestamp(&self, row: usize) -> i64 {
        self.start_ms + row as i64 * self.period_ms
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.columns[c]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[col][row]
    }

    pub fn column_missing(&self, c: usize) -> &[bool] {
        &self.missing[c]
    }

    pub fn any_missing(&self) -> bool {
        self.missing.iter().any(|col| col.iter().any(|&m| m))
    }

    pub(crate) fn replace_column(&mut self, c: usize, values: Vec<f64>, missing: Vec<bool>) {
        self.columns[c] = values;
        self.missing[c] = missing;
    }

    /// Converts back to raw per-series form; masked cells become missing
    /// points.
    pub fn to_series_set(&self) -> TimeSeriesSet {
        let mut series = BTreeMap::new();
        for (c, name) in self.names.iter().enumerate() {
            let points = (0..self.n_rows())
                .map(|r| RawPoint {
                    timestamp_ms: self.timestamp(r),
                    value: (!self.missing[c][r]).then(|| self.columns[c][r]),
                })
                .collect();
            series.insert(name.clone(), points);
        }
        TimeSeriesSet::new(series).expect("panel invariants imply valid series")
    }
}

/// Per-series health summary: estimated sampling period, sleeping
/// (constant-output) intervals, and missing-value accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDiagnostics {
    pub name: String,
    /// Median inter-timestamp gap of observed points; `None` with fewer than
    /// two observed points.
    pub sampling_period_estimate: Option<i64>,
    /// Half-open `[start, end)` index ranges of maximal identical-value runs.
    pub sleeping_intervals: Vec<(usize, usize)>,
    pub missing_count: usize,
    pub max_consecutive_missing: usize,
}

/// Median gap between consecutive observed timestamps. Robust to jitter and
/// invariant under shifting all timestamps by a constant. For an even number
/// of gaps the lower-middle average `(a + b) / 2` (integer division) is taken.
pub fn estimate_sampling_period(points: &[RawPoint]) -> Result<i64> {
    let observed: Vec<i64> = points
        .iter()
        .filter(|p| p.value.is_some())
        .map(|p| p.timestamp_ms)
        .collect();
    if observed.len() < 2 {
        return Err(Error::SeriesTooShort {
            series: String::new(),
            len: observed.len(),
            need: 2,
        });
    }
    let mut gaps: Vec<i64> = observed.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_unstable();
    let n = gaps.len();
    Ok(if n % 2 == 1 {
        gaps[n / 2]
    } else {
        (gaps[n / 2 - 1] + gaps[n / 2]) / 2
    })
}

/// Runs diagnostics over every series. A maximal run of at least
/// `sleep_min_len` identical consecutive observed values is reported as a
/// sleeping interval; missing points carry no observation and do not break
/// a run (a sleeping sensor with dropped samples is still sleeping).
/// `sleep_min_len` below 2 is treated as 2.
pub fn diagnose(set: &TimeSeriesSet, sleep_min_len: usize) -> Vec<SeriesDiagnostics> {
    let min_len = sleep_min_len.max(2);
    set.iter()
        .map(|(name, points)| {
            // Runs over the observed subsequence; intervals reported in
            // point-list indices, end exclusive past the last run member.
            let observed: Vec<(usize, f64)> = points
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.value.map(|v| (i, v)))
                .collect();
            let mut sleeping = Vec::new();
            let mut run: Option<(usize, usize, f64, usize)> = None; // start, last, value, count
            let flush = |run: Option<(usize, usize, f64, usize)>, out: &mut Vec<_>| {
                if let Some((start, last, _, count)) = run {
                    if count >= min_len {
                        out.push((start, last + 1));
                    }
                }
            };
            for &(i, v) in &observed {
                match run {
                    Some((start, _, value, count)) if value == v => {
                        run = Some((start, i, value, count + 1));
                    }
                    other => {
                        flush(other, &mut sleeping);
                        run = Some((i, i, v, 1));
                    }
                }
            }
            flush(run, &mut sleeping);

            let missing_count = points.iter().filter(|p| p.value.is_none()).count();
            let mut max_run = 0usize;
            let mut cur = 0usize;
            for p in points {
                if p.value.is_none() {
                    cur += 1;
                    max_run = max_run.max(cur);
                } else {
                    cur = 0;
                }
            }
            SeriesDiagnostics {
                name: name.to_string(),
                sampling_period_estimate: estimate_sampling_period(points).ok(),
                sleeping_intervals: sleeping,
                missing_count,
                max_consecutive_missing: max_run,
            }
        })
        .collect()
}
