use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::log::LogRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot compute metrics of an empty log")]
pub struct EmptyLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub max_abs_cross_track: f64,
    pub rms_cross_track: f64,
    /// Smallest radar range seen over the run, if anything was detected.
    pub min_radar_range: Option<f64>,
    /// Nearest radar range at the final tick.
    pub final_gap: Option<f64>,
    pub collided: bool,
    pub stopped: bool,
    pub path_completion: f64,
}

pub fn compute_metrics(log: &[LogRecord], v_stop_eps: f64) -> Result<Metrics, EmptyLog> {
    let last = log.last().ok_or(EmptyLog)?;
    let max_abs_cross_track = log.iter().map(|r| r.e_lat.abs()).fold(0.0, f64::max);
    let rms_cross_track =
        (log.iter().map(|r| r.e_lat * r.e_lat).sum::<f64>() / log.len() as f64).sqrt();
    let min_radar_range = log
        .iter()
        .filter_map(LogRecord::nearest_range)
        .reduce(f64::min);
    Ok(Metrics {
        max_abs_cross_track,
        rms_cross_track,
        min_radar_range,
        final_gap: last.nearest_range(),
        collided: log.iter().any(|r| r.collision),
        stopped: last.v < v_stop_eps,
        path_completion: log.iter().map(|r| r.progress).fold(0.0, f64::max),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_owned(), |x| x.to_string())
}

impl fmt::Display for Metrics {
    /// `key=value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max_abs_cross_track={}", self.max_abs_cross_track)?;
        writeln!(f, "rms_cross_track={}", self.rms_cross_track)?;
        writeln!(f, "min_radar_range={}", opt(self.min_radar_range))?;
        writeln!(f, "final_gap={}", opt(self.final_gap))?;
        writeln!(f, "collided={}", self.collided)?;
        writeln!(f, "stopped={}", self.stopped)?;
        write!(f, "path_completion={}", self.path_completion)
    }
}
