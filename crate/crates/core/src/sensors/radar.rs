use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{ObstacleSpec, Vec2, World};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("ray direction must be a unit vector (norm {0})")]
    NonUnitDirection(f64),
    #[error("invalid radar parameters: {0}")]
    BadRadarParams(&'static str),
    #[error("invalid gps parameters: {0}")]
    BadGpsParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarParams {
    pub fov_half_angle: f64,
    pub max_range: f64,
    pub n_rays: usize,
    pub max_detections: usize,
    /// Sensor position ahead of the plant reference point, meters.
    pub mount_offset: f64,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            fov_half_angle: 0.175,
            max_range: 100.0,
            n_rays: 41,
            max_detections: 8,
            mount_offset: 3.8,
        }
    }
}

impl RadarParams {
    pub fn validate(&self) -> Result<(), SensorError> {
        use std::f64::consts::FRAC_PI_2;
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle < FRAC_PI_2) {
            return Err(SensorError::BadRadarParams(
                "fov_half_angle must be in (0, pi/2)",
            ));
        }
        if !(self.max_range > 0.0) {
            return Err(SensorError::BadRadarParams("max_range must be positive"));
        }
        if self.n_rays < 3 || self.n_rays.is_multiple_of(2) {
            return Err(SensorError::BadRadarParams(
                "n_rays must be odd and at least 3",
            ));
        }
        if self.max_detections > u8::MAX as usize {
            return Err(SensorError::BadRadarParams(
                "max_detections must fit in one byte",
            ));
        }
        Ok(())
    }

    /// Azimuth of ray `i` in the sensor frame.
    pub fn ray_azimuth(&self, i: usize) -> f64 {
        let n = self.n_rays.max(2);
        -self.fov_half_angle + 2.0 * self.fov_half_angle * i as f64 / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarDetection {
    pub range: f64,
    /// d(range)/dt; negative when closing.
    pub range_rate: f64,
    pub azimuth: f64,
}

/// Smallest `t >= 0` with `origin + t * direction` on the boundary of `rect`.
pub fn ray_rect_intersect(
    origin: Vec2,
    direction: Vec2,
    rect: &ObstacleSpec,
) -> Result<Option<f64>, SensorError> {
    let norm = direction.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(SensorError::NonUnitDirection(norm));
    }
    Ok(cast(origin, direction, rect))
}

// Slab test in the rectangle's own frame.
fn cast(origin: Vec2, direction: Vec2, rect: &ObstacleSpec) -> Option<f64> {
    let u = Vec2::from_angle(rect.heading);
    let axes = [(u, rect.length / 2.0), (u.perp(), rect.width / 2.0)];
    let rel = origin - rect.center;
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (axis, half) in axes {
        let o = rel.dot(axis);
        let d = direction.dot(axis);
        if d == 0.0 {
            if o.abs() > half {
                return None;
            }
            continue;
        }
        let (a, b) = ((-half - o) / d, (half - o) / d);
        t_lo = t_lo.max(a.min(b));
        t_hi = t_hi.min(a.max(b));
    }
    if t_lo > t_hi || t_hi < 0.0 {
        return None;
    }
    Some(if t_lo >= 0.0 { t_lo } else { t_hi })
}

/// One detection per obstacle: the minimum-range ray hit, sorted by range.
pub fn radar_scan(world: &World, ego_speed: f64, params: &RadarParams) -> Vec<RadarDetection> {
    let ego = world.ego_pose();
    let obstacles = world.obstacles();
    if obstacles.is_empty() {
        return Vec::new();
    }
    let boresight = Vec2::from_angle(ego.heading);
    let origin = Vec2::new(ego.x, ego.y) + boresight * params.mount_offset;

    // (range, azimuth) of the closest hit per obstacle index.
    let mut best: Vec<Option<(f64, f64)>> = vec![None; obstacles.len()];
    for i in 0..params.n_rays {
        let azimuth = params.ray_azimuth(i);
        let dir = Vec2::from_angle(ego.heading + azimuth);
        let nearest = obstacles
            .iter()
            .enumerate()
            .filter_map(|(k, o)| cast(origin, dir, o).map(|t| (k, t)))
            .filter(|&(_, t)| t > 0.0 && t <= params.max_range)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, t)) = nearest {
            let better = match best[k] {
                None => true,
                Some((r, az)) => t < r || (t == r && azimuth.abs() < az.abs()),
            };
            if better {
                best[k] = Some((t, azimuth));
            }
        }
    }

    let mut detections: Vec<(u32, RadarDetection)> = best
        .iter()
        .zip(obstacles)
        .filter_map(|(hit, o)| {
            hit.map(|(range, azimuth)| {
                // Static obstacles: relative velocity is minus the ego velocity.
                let p_rel = Vec2::from_angle(ego.heading + azimuth) * range;
                let v_rel = boresight * -ego_speed;
                let detection = RadarDetection {
                    range,
                    range_rate: p_rel.dot(v_rel) / range,
                    azimuth,
                };
                (o.id, detection)
            })
        })
        .collect();
    detections.sort_by(|a, b| a.1.range.total_cmp(&b.1.range).then(a.0.cmp(&b.0)));
    detections.truncate(params.max_detections);
    detections.into_iter().map(|(_, d)| d).collect()
}
