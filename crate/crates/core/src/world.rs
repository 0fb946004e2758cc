//! Planar virtual world: the ego twin and static rectangular obstacles.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geoframe::LocalPose;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("obstacle {id}: dimensions must be positive (length {length}, width {width})")]
    BadObstacle { id: u32, length: f64, width: f64 },
    #[error("duplicate obstacle id {0}")]
    DuplicateId(u32),
    #[error("ego footprint dimensions must be positive")]
    BadFootprint,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Oriented rectangle: center, heading of the length axis, full extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    /// Corners in counter-clockwise order, starting rear-right.
    pub fn corners(&self) -> [Vec2; 4] {
        let u = Vec2::from_angle(self.heading) * (self.length / 2.0);
        let v = Vec2::from_angle(self.heading).perp() * (self.width / 2.0);
        let c = self.center;
        [c - u - v, c + u - v, c + u + v, c - u + v]
    }

    pub fn axes(&self) -> [Vec2; 2] {
        let u = Vec2::from_angle(self.heading);
        [u, u.perp()]
    }

    /// Closed-set point containment.
    pub fn contains(&self, p: Vec2) -> bool {
        let [u, v] = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.length / 2.0 && d.dot(v).abs() <= self.width / 2.0
    }

    /// Separating-axis test. Boundary contact counts as overlap.
    pub fn intersects(&self, other: &OrientedRect) -> bool {
        let a = self.corners();
        let b = other.corners();
        for axis in self.axes().into_iter().chain(other.axes()) {
            let (amin, amax) = project(&a, axis);
            let (bmin, bmax) = project(&b, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
        true
    }
}

fn project(pts: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    pts.iter()
        .map(|p| p.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub id: u32,
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl ObstacleSpec {
    pub fn rect(&self) -> OrientedRect {
        OrientedRect {
            center: self.center,
            heading: self.heading,
            length: self.length,
            width: self.width,
        }
    }

    fn validate(&self) -> Result<(), WorldError> {
        if self.length > 0.0 && self.width > 0.0 {
            Ok(())
        } else {
            Err(WorldError::BadObstacle {
                id: self.id,
                length: self.length,
                width: self.width,
            })
        }
    }
}

pub fn obstacle_corners(spec: &ObstacleSpec) -> [Vec2; 4] {
    spec.rect().corners()
}

/// Ego outline relative to the plant reference point (rear-axle center).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgoFootprint {
    pub wheelbase: f64,
    pub front_overhang: f64,
    pub rear_overhang: f64,
    pub width: f64,
}

impl Default for EgoFootprint {
    fn default() -> Self {
        Self {
            wheelbase: 2.85,
            front_overhang: 0.95,
            rear_overhang: 1.0,
            width: 1.9,
        }
    }
}

impl EgoFootprint {
    pub fn length(&self) -> f64 {
        self.rear_overhang + self.wheelbase + self.front_overhang
    }

    /// Distance from the reference point to the front bumper.
    pub fn front_extent(&self) -> f64 {
        self.wheelbase + self.front_overhang
    }

    pub fn rect_at(&self, pose: &LocalPose) -> OrientedRect {
        // Center sits half-way between rear and front bumpers.
        let offset = (self.front_extent() - self.rear_overhang) / 2.0;
        OrientedRect {
            center: Vec2::new(pose.x, pose.y) + Vec2::from_angle(pose.heading) * offset,
            heading: pose.heading,
            length: self.length(),
            width: self.width,
        }
    }

    fn validate(&self) -> Result<(), WorldError> {
        let ok = self.wheelbase > 0.0
            && self.front_overhang >= 0.0
            && self.rear_overhang >= 0.0
            && self.width > 0.0;
        if ok {
            Ok(())
        } else {
            Err(WorldError::BadFootprint)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    ego_pose: LocalPose,
    footprint: EgoFootprint,
    obstacles: Vec<ObstacleSpec>,
}

impl World {
    pub fn new(
        ego_pose: LocalPose,
        footprint: EgoFootprint,
        obstacles: Vec<ObstacleSpec>,
    ) -> Result<Self, WorldError> {
        footprint.validate()?;
        for (i, obs) in obstacles.iter().enumerate() {
            obs.validate()?;
            if obstacles[..i].iter().any(|o| o.id == obs.id) {
                return Err(WorldError::DuplicateId(obs.id));
            }
        }
        Ok(Self {
            ego_pose,
            footprint,
            obstacles,
        })
    }

    pub fn ego_pose(&self) -> &LocalPose {
        &self.ego_pose
    }

    pub fn footprint(&self) -> &EgoFootprint {
        &self.footprint
    }

    pub fn obstacles(&self) -> &[ObstacleSpec] {
        &self.obstacles
    }

    pub fn set_ego_pose(&mut self, pose: LocalPose) {
        self.ego_pose = pose;
    }

    /// Returns a copy with every pose moved by a rotation about the origin
    /// followed by a translation.
    pub fn transformed(&self, rotation: f64, translation: Vec2) -> World {
        let (s, c) = rotation.sin_cos();
        let apply = |p: Vec2| Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) + translation;
        let ego = apply(Vec2::new(self.ego_pose.x, self.ego_pose.y));
        World {
            ego_pose: LocalPose::new(
                ego.x,
                ego.y,
                self.ego_pose.heading + rotation,
                self.ego_pose.speed,
            ),
            footprint: self.footprint,
            obstacles: self
                .obstacles
                .iter()
                .map(|o| ObstacleSpec {
                    center: apply(o.center),
                    heading: o.heading + rotation,
                    ..*o
                })
                .collect(),
        }
    }
}

pub fn footprints_intersect(world: &World) -> bool {
    let ego = world.footprint.rect_at(&world.ego_pose);
    world.obstacles.iter().any(|o| ego.intersects(&o.rect()))
}
