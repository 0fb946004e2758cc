use std::io::Read;

use serde::Deserialize;

use super::GuidanceError;
use crate::geoframe::{compass_to_math_heading, geo_to_local, FrameAnchor, GeoFix};
use crate::world::Vec2;

/// Consecutive recorded fixes closer than this are treated as duplicates.
pub const DUPLICATE_EPS_M: f64 = 0.01;
/// Largest allowed distance between consecutive recorded fixes.
pub const MAX_WAYPOINT_GAP_M: f64 = 50.0;

/// Uniformly resampled reference polyline in the local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    points: Vec<Vec2>,
    s: Vec<f64>,
    total_length: f64,
    ds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProjection {
    pub s: f64,
    /// Signed lateral offset; positive when the point is left of the tangent.
    pub e_lat: f64,
    pub heading_ref: f64,
}

impl Path {
    /// Builds a path from local points: drops near-duplicates, resamples at `ds`.
    pub fn from_local(raw: &[Vec2], ds: f64) -> Result<Path, GuidanceError> {
        if !(ds > 0.0) || !ds.is_finite() {
            return Err(GuidanceError::BadSpacing(ds));
        }
        for (i, pair) in raw.windows(2).enumerate() {
            let gap = (pair[1] - pair[0]).norm();
            if gap > MAX_WAYPOINT_GAP_M {
                return Err(GuidanceError::WaypointGap { index: i + 1, gap });
            }
        }
        let mut pts: Vec<Vec2> = Vec::with_capacity(raw.len());
        for &p in raw {
            match pts.last() {
                Some(&q) if (p - q).norm() < DUPLICATE_EPS_M => {}
                _ => pts.push(p),
            }
        }
        if pts.len() < 2 {
            return Err(GuidanceError::DegeneratePath(pts.len()));
        }

        let cumulative = arc_lengths(&pts);
        let length = *cumulative.last().unwrap();
        let segments = ((length / ds).round() as usize).max(1);
        let step = length / segments as f64;

        let mut resampled = Vec::with_capacity(segments + 1);
        let mut seg = 0;
        for i in 0..=segments {
            let target = if i == segments {
                length
            } else {
                i as f64 * step
            };
            while seg + 2 < pts.len() && cumulative[seg + 1] < target {
                seg += 1;
            }
            let span = cumulative[seg + 1] - cumulative[seg];
            let f = ((target - cumulative[seg]) / span).clamp(0.0, 1.0);
            resampled.push(pts[seg] + (pts[seg + 1] - pts[seg]) * f);
        }
        let s = arc_lengths(&resampled);
        let total_length = *s.last().unwrap();
        Ok(Path {
            points: resampled,
            s,
            total_length,
            ds,
        })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.s
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn spacing(&self) -> f64 {
        self.ds
    }

    /// Tangent heading at the start of the path.
    pub fn start_heading(&self) -> f64 {
        let d = self.points[1] - self.points[0];
        d.y.atan2(d.x)
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.total_length);
        let i = match self.s.partition_point(|&v| v <= s) {
            0 => 0,
            n => (n - 1).min(self.points.len() - 2),
        };
        let span = self.s[i + 1] - self.s[i];
        let f = ((s - self.s[i]) / span).clamp(0.0, 1.0);
        self.points[i] + (self.points[i + 1] - self.points[i]) * f
    }

    /// Closest point over all segments; ties resolve to the smaller `s`.
    pub fn project(&self, position: Vec2) -> PathProjection {
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for (i, seg) in self.points.windows(2).enumerate() {
            let d = seg[1] - seg[0];
            let len2 = d.dot(d);
            let f = ((position - seg[0]).dot(d) / len2).clamp(0.0, 1.0);
            let dist2 = {
                let r = position - (seg[0] + d * f);
                r.dot(r)
            };
            if dist2 < best.0 {
                best = (dist2, i, f);
            }
        }
        let (_, i, f) = best;
        let a = self.points[i];
        let d = self.points[i + 1] - a;
        let foot = a + d * f;
        let offset = position - foot;
        // Distance to the foot point, signed by the side of the tangent.
        let e_lat = offset.norm().copysign(d.cross(offset));
        PathProjection {
            s: (self.s[i] + f * (self.s[i + 1] - self.s[i])).min(self.total_length),
            e_lat,
            heading_ref: d.y.atan2(d.x),
        }
    }
}

fn arc_lengths(pts: &[Vec2]) -> Vec<f64> {
    let mut s = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    s.push(0.0);
    for pair in pts.windows(2) {
        acc += (pair[1] - pair[0]).norm();
        s.push(acc);
    }
    s
}

pub fn project_onto_path(path: &Path, position: Vec2) -> PathProjection {
    path.project(position)
}

/// Converts recorded geodetic fixes through the anchor and resamples them.
pub fn build_path(
    waypoints: &[GeoFix],
    anchor: &FrameAnchor,
    ds: f64,
) -> Result<Path, GuidanceError> {
    let local = waypoints
        .iter()
        .map(|w| geo_to_local(w, anchor).map(|p| Vec2::new(p.x, p.y)))
        .collect::<Result<Vec<_>, _>>()?;
    Path::from_local(&local, ds)
}

#[derive(Debug, Deserialize)]
struct WaypointRow {
    lat_deg: f64,
    lon_deg: f64,
    #[serde(default)]
    heading_deg: Option<f64>,
    #[serde(default)]
    speed_mps: Option<f64>,
}

/// Reads a recorded-path CSV: header row, then `lat_deg,lon_deg` with
/// optional `heading_deg` (compass) and `speed_mps` columns.
pub fn read_waypoints_csv<R: Read>(reader: R) -> Result<Vec<GeoFix>, GuidanceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<WaypointRow>() {
        let row = row.map_err(|e| GuidanceError::WaypointFile(e.to_string()))?;
        let heading = match row.heading_deg {
            Some(h) => compass_to_math_heading(h)?,
            None => 0.0,
        };
        out.push(GeoFix {
            lat: row.lat_deg,
            lon: row.lon_deg,
            heading,
            speed: row.speed_mps.unwrap_or(0.0).max(0.0),
        });
    }
    Ok(out)
}
