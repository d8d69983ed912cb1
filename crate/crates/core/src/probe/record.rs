use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Every repetition produced a sample.
    Ok,
    /// At least one, but not every, repetition produced a sample.
    Partial,
    /// No repetition succeeded.
    Failed,
}

/// One client-to-server download timing result.
///
/// Serialized as one JSON object per line; field names are part of the file
/// format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub ts_unix_ms: i64,
    pub client_id: String,
    pub server_id: String,
    pub bytes: u64,
    pub samples_ms: Vec<f64>,
    pub status: Status,
}

impl MeasurementRecord {
    /// Median of the samples in milliseconds, or `None` without samples.
    pub fn representative_ms(&self) -> Option<f64> {
        median(&self.samples_ms)
    }
}

/// Summary statistics of a sample list, all in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStat {
    pub median_ms: f64,
    pub mean_ms: f64,
    /// Population standard deviation.
    pub stddev_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

pub fn summarize(samples_ms: &[f64]) -> Result<LatencyStat> {
    if samples_ms.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty sample list".into()));
    }
    if let Some(bad) = samples_ms.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "sample {bad} is not a positive latency"
        )));
    }
    let mut sorted = samples_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(LatencyStat {
        median_ms: median_of_sorted(&sorted),
        mean_ms: mean,
        stddev_ms: var.sqrt(),
        min_ms: sorted[0],
        max_ms: sorted[sorted.len() - 1],
    })
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(median_of_sorted(&sorted))
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let mid = sorted.len() / 2;
    if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    }
}

/// Writes records as JSON lines.
pub fn write_records<W: Write>(mut out: W, records: &[MeasurementRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads JSON-line records. Blank lines are skipped; `source` only labels errors.
pub fn read_records<R: BufRead>(input: R, source: &Path) -> Result<Vec<MeasurementRecord>> {
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: source.into(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Appends records to `path`, creating the file if needed.
pub fn persist_records(records: &[MeasurementRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    write_records(BufWriter::new(file), records).map_err(|e| Error::io(path, e))
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<MeasurementRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(BufReader::new(file), path)
}
