use std::fs::File;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::Mode;

/// Sentinel written in `radar_range` when the radar saw nothing.
pub const NO_DETECTION: f64 = -1.0;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("log csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One row per simulation tick.
///
/// `lat`/`lon` are the measured (noisy) fix. `progress` is arc length along
/// the path as a fraction of its total length. `mode` is empty when the
/// controller's mode is not visible to the logging side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub steer: f64,
    pub lat: f64,
    pub lon: f64,
    pub radar_range: f64,
    pub e_lat: f64,
    pub progress: f64,
    pub mode: Option<Mode>,
    pub steer_cmd: f64,
    pub throttle: f64,
    pub brake: f64,
    pub collision: bool,
}

impl LogRecord {
    pub fn nearest_range(&self) -> Option<f64> {
        (self.radar_range >= 0.0).then_some(self.radar_range)
    }
}

pub fn write_log<W: Write>(writer: W, records: &[LogRecord]) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log<R: Read>(reader: R) -> Result<Vec<LogRecord>, LogError> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .map(|r| r.map_err(LogError::from))
        .collect()
}

pub fn write_log_file(path: impl AsRef<FsPath>, records: &[LogRecord]) -> Result<(), LogError> {
    write_log(std::io::BufWriter::new(File::create(path)?), records)
}

pub fn read_log_file(path: impl AsRef<FsPath>) -> Result<Vec<LogRecord>, LogError> {
    read_log(std::io::BufReader::new(File::open(path)?))
}

/// Modes with consecutive repeats collapsed, skipping unknown entries.
pub fn mode_trace(records: &[LogRecord]) -> Vec<Mode> {
    let mut out: Vec<Mode> = Vec::new();
    for m in records.iter().filter_map(|r| r.mode) {
        if out.last() != Some(&m) {
            out.push(m);
        }
    }
    out
}
