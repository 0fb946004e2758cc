//! Geodetic <-> local metric frame translation.
//!
//! The local frame is an equirectangular tangent plane on a sphere, anchored at
//! the virtually matched starting location: x points east, y points north.
//! `cos(lat0)` is frozen at the anchor so the map is affine and exactly
//! invertible.
//!
//! Headings everywhere in this crate are radians, counter-clockwise positive,
//! zero pointing east, normalized into `[-pi, pi)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spherical earth radius used by the default anchor (WGS-84 equatorial).
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Anchors with `|lat0|` at or above this are rejected.
pub const MAX_ANCHOR_LAT_DEG: f64 = 89.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("degenerate anchor: |lat0| = {0} must be below {MAX_ANCHOR_LAT_DEG} degrees")]
    DegenerateAnchor(f64),
    #[error("invalid earth radius {0}")]
    InvalidRadius(f64),
    #[error("invalid heading value {0}")]
    InvalidHeading(f64),
}

/// Geodetic position with heading and speed; the real-to-virtual payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoFix {
    pub lat: f64,
    pub lon: f64,
    pub heading: f64,
    pub speed: f64,
}

/// Pose in the anchored local frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl LocalPose {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
            speed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAnchor {
    lat0: f64,
    lon0: f64,
    radius: f64,
}

impl FrameAnchor {
    pub fn new(lat0: f64, lon0: f64) -> Result<Self, GeoError> {
        Self::with_radius(lat0, lon0, EARTH_RADIUS_M)
    }

    pub fn with_radius(lat0: f64, lon0: f64, radius: f64) -> Result<Self, GeoError> {
        let anchor = Self { lat0, lon0, radius };
        anchor.validate()?;
        Ok(anchor)
    }

    pub fn lat0(&self) -> f64 {
        self.lat0
    }

    pub fn lon0(&self) -> f64 {
        self.lon0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn validate(&self) -> Result<(), GeoError> {
        if !(self.lat0.abs() < MAX_ANCHOR_LAT_DEG) {
            return Err(GeoError::DegenerateAnchor(self.lat0));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(GeoError::InvalidRadius(self.radius));
        }
        Ok(())
    }

    /// Meters per degree of latitude and of longitude at the anchor.
    fn scales(&self) -> (f64, f64) {
        let per_deg_lat = self.radius * PI / 180.0;
        let per_deg_lon = per_deg_lat * (self.lat0 * PI / 180.0).cos();
        (per_deg_lat, per_deg_lon)
    }
}

/// Wraps an angle into `[-pi, pi)`. Idempotent.
pub fn normalize_angle(angle: f64) -> f64 {
    if (-PI..PI).contains(&angle) {
        return angle;
    }
    let mut wrapped = angle - TAU * ((angle + PI) / TAU).floor();
    if wrapped >= PI {
        wrapped -= TAU;
    }
    if wrapped < -PI {
        wrapped = -PI;
    }
    wrapped
}

pub fn geo_to_local(fix: &GeoFix, anchor: &FrameAnchor) -> Result<LocalPose, GeoError> {
    anchor.validate()?;
    let (per_lat, per_lon) = anchor.scales();
    Ok(LocalPose {
        x: (fix.lon - anchor.lon0) * per_lon,
        y: (fix.lat - anchor.lat0) * per_lat,
        heading: fix.heading,
        speed: fix.speed,
    })
}

pub fn local_to_geo(pose: &LocalPose, anchor: &FrameAnchor) -> Result<GeoFix, GeoError> {
    anchor.validate()?;
    let (per_lat, per_lon) = anchor.scales();
    Ok(GeoFix {
        lat: anchor.lat0 + pose.y / per_lat,
        lon: anchor.lon0 + pose.x / per_lon,
        heading: pose.heading,
        speed: pose.speed,
    })
}

/// Converts a compass bearing (degrees clockwise from north) to the
/// project heading convention.
pub fn compass_to_math_heading(compass_deg: f64) -> Result<f64, GeoError> {
    if !compass_deg.is_finite() {
        return Err(GeoError::InvalidHeading(compass_deg));
    }
    Ok(normalize_angle(FRAC_PI_2 - compass_deg.to_radians()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor() -> FrameAnchor {
        FrameAnchor::new(40.0, -83.0).unwrap()
    }

    fn fix(lat: f64, lon: f64) -> GeoFix {
        GeoFix {
            lat,
            lon,
            heading: 0.3,
            speed: 4.0,
        }
    }

    /// Great-circle distance on the same sphere, used as an independent check.
    fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64, r: f64) -> f64 {
        let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
        let dp = p2 - p1;
        let dl = (lon2 - lon1).to_radians();
        let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * r * a.sqrt().asin()
    }

    #[test]
    fn anchor_maps_to_origin() {
        let p = geo_to_local(&fix(40.0, -83.0), &anchor()).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert_eq!(p.heading, 0.3);
        assert_eq!(p.speed, 4.0);
    }

    #[test]
    fn northward_displacement_matches_haversine() {
        let p = geo_to_local(&fix(40.0009, -83.0), &anchor()).unwrap();
        let oracle = haversine(40.0, -83.0, 40.0009, -83.0, EARTH_RADIUS_M);
        assert!((oracle - 100.188).abs() < 1e-3);
        assert_eq!(p.x, 0.0);
        assert!((p.y - oracle).abs() < 1e-3, "{} vs {}", p.y, oracle);
    }

    #[test]
    fn eastward_displacement_matches_haversine() {
        let p = geo_to_local(&fix(40.0, -82.999), &anchor()).unwrap();
        let oracle = haversine(40.0, -83.0, 40.0, -82.999, EARTH_RADIUS_M);
        assert!((oracle - 85.276).abs() < 1e-3);
        assert!((p.x - oracle).abs() < 1e-3, "{} vs {}", p.x, oracle);
        assert_eq!(p.y, 0.0);
    }

    #[test]
    fn inverse_examples() {
        let a = anchor();
        let g = local_to_geo(&LocalPose::default(), &a).unwrap();
        assert_eq!((g.lat, g.lon), (40.0, -83.0));
        let g = local_to_geo(&LocalPose::new(85.276, 0.0, 0.0, 0.0), &a).unwrap();
        assert!((g.lon - -82.999).abs() < 1e-8);
        assert_eq!(g.lat, 40.0);
    }

    #[test]
    fn degenerate_anchor_rejected() {
        assert_eq!(
            FrameAnchor::new(89.0, 0.0),
            Err(GeoError::DegenerateAnchor(89.0))
        );
        assert!(FrameAnchor::new(-89.5, 0.0).is_err());
        assert!(FrameAnchor::new(f64::NAN, 0.0).is_err());
        assert!(FrameAnchor::with_radius(10.0, 0.0, 0.0).is_err());
        assert!(FrameAnchor::new(88.9, 0.0).is_ok());
    }

    #[test]
    fn compass_conversion() {
        assert!((compass_to_math_heading(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(compass_to_math_heading(90.0).unwrap().abs() < 1e-15);
        // pi/2 - 3pi/2 = -pi, which is the canonical representative of the half-open range.
        assert_eq!(compass_to_math_heading(270.0).unwrap(), -PI);
        assert!((compass_to_math_heading(180.0).unwrap() + FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(
            compass_to_math_heading(f64::INFINITY),
            Err(GeoError::InvalidHeading(_))
        ));
        assert!(compass_to_math_heading(f64::NAN).is_err());
    }

    #[test]
    fn normalize_edges() {
        assert_eq!(normalize_angle(PI), -PI);
        assert_eq!(normalize_angle(-PI), -PI);
        assert!((normalize_angle(3.0 * PI) + PI).abs() < 1e-12);
        assert!((normalize_angle(TAU + 0.5) - 0.5).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalize_is_idempotent_and_in_range(a in -1e4f64..1e4) {
                let n = normalize_angle(a);
                prop_assert!((-PI..PI).contains(&n));
                prop_assert_eq!(normalize_angle(n), n);
            }

            #[test]
            fn geo_to_local_is_affine(
                lat1 in 39.99f64..40.01, lon1 in -83.01f64..-82.99,
                lat2 in 39.99f64..40.01, lon2 in -83.01f64..-82.99,
            ) {
                let a = anchor();
                let p1 = geo_to_local(&fix(lat1, lon1), &a).unwrap();
                let p2 = geo_to_local(&fix(lat2, lon2), &a).unwrap();
                let mid = geo_to_local(&fix((lat1 + lat2) / 2.0, (lon1 + lon2) / 2.0), &a).unwrap();
                prop_assert!((mid.x - (p1.x + p2.x) / 2.0).abs() < 1e-8);
                prop_assert!((mid.y - (p1.y + p2.y) / 2.0).abs() < 1e-8);
            }

            #[test]
            fn round_trip_within_two_km(x in -1400.0f64..1400.0, y in -1400.0f64..1400.0) {
                let a = anchor();
                let g = local_to_geo(&LocalPose::new(x, y, 0.0, 0.0), &a).unwrap();
                let back = local_to_geo(&geo_to_local(&g, &a).unwrap(), &a).unwrap();
                prop_assert!((back.lat - g.lat).abs() < 1e-9);
                prop_assert!((back.lon - g.lon).abs() < 1e-9);
            }
        }
    }
}
