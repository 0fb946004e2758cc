use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SensorError;
use crate::geoframe::{local_to_geo, normalize_angle, FrameAnchor, GeoError, GeoFix, LocalPose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpsParams {
    /// Per-axis position standard deviation, meters.
    pub sigma_pos: f64,
    pub sigma_heading: f64,
    pub seed: u64,
}

impl Default for GpsParams {
    fn default() -> Self {
        Self {
            sigma_pos: 0.02,
            sigma_heading: 0.002,
            seed: 0,
        }
    }
}

impl GpsParams {
    pub fn validate(&self) -> Result<(), SensorError> {
        if self.sigma_pos >= 0.0 && self.sigma_heading >= 0.0 {
            Ok(())
        } else {
            Err(SensorError::BadGpsParams("sigmas must be non-negative"))
        }
    }
}

/// Noise source for [`gps_sample`]: ChaCha8 keyed by the 64-bit seed, stream 0.
///
/// Each sample draws exactly three standard normals (east, north, heading)
/// with the `rand_distr` ziggurat sampler, so a log can be replayed from the
/// seed alone.
#[derive(Debug, Clone)]
pub struct GpsRng(ChaCha8Rng);

impl GpsRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }
}

pub fn gps_sample(
    true_pose: &LocalPose,
    anchor: &FrameAnchor,
    params: &GpsParams,
    rng: &mut GpsRng,
) -> Result<GeoFix, GeoError> {
    let (ne, nn, nh) = (rng.normal(), rng.normal(), rng.normal());
    let noisy = LocalPose {
        x: true_pose.x + params.sigma_pos * ne,
        y: true_pose.y + params.sigma_pos * nn,
        heading: normalize_angle(true_pose.heading + params.sigma_heading * nh),
        speed: true_pose.speed,
    };
    local_to_geo(&noisy, anchor)
}
