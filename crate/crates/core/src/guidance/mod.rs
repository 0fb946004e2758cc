//! Path following and speed control: the controller side of the loop.
//!
//! Lateral control is pure pursuit toward a goal point a speed-scaled arc
//! length ahead of the vehicle's projection. Longitudinal control tracks the
//! lower of a path-end taper and a constant-deceleration stopping law behind
//! the nearest radar detection, and a small mode machine handles the stop,
//! the wait, and stale sensor data.

mod path;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use path::{
    build_path, project_onto_path, read_waypoints_csv, Path, PathProjection, DUPLICATE_EPS_M,
    MAX_WAYPOINT_GAP_M,
};

use crate::geoframe::{geo_to_local, normalize_angle, FrameAnchor, GeoError, GeoFix, LocalPose};
use crate::plant::{ActuationCommand, PlantParams};
use crate::sensors::RadarDetection;
use crate::world::Vec2;

/// Brake fraction applied while holding behind an obstacle.
pub const HOLD_BRAKE: f64 = 0.5;

/// Anti-windup bound on the integral term of the speed loop, m/s^2.
pub const INTEGRAL_ACCEL_LIMIT: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("path needs at least 2 distinct points, got {0}")]
    DegeneratePath(usize),
    #[error("waypoint {index} is {gap:.1} m from its predecessor (limit {MAX_WAYPOINT_GAP_M} m)")]
    WaypointGap { index: usize, gap: f64 },
    #[error("resample spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("waypoint file: {0}")]
    WaypointFile(String),
    #[error("no path configured")]
    PathNotSet,
    #[error("invalid guidance parameter: {0}")]
    BadParams(&'static str),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceParams {
    /// Lookahead gain, seconds.
    pub k_v: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    pub v_target: f64,
    pub d_safe: f64,
    pub a_brake_plan: f64,
    pub v_stop_eps: f64,
    pub kp: f64,
    pub ki: f64,
    pub resume_enabled: bool,
    pub t_clear: f64,
    pub t_stale: f64,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self {
            k_v: 0.8,
            lookahead_min: 3.0,
            lookahead_max: 12.0,
            v_target: 5.0,
            d_safe: 5.0,
            a_brake_plan: 3.0,
            v_stop_eps: 0.05,
            kp: 0.8,
            ki: 0.2,
            resume_enabled: false,
            t_clear: 2.0,
            t_stale: 0.2,
        }
    }
}

impl GuidanceParams {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.lookahead_min > 0.0 && self.lookahead_min <= self.lookahead_max) {
            return Err(GuidanceError::BadParams(
                "need 0 < lookahead_min <= lookahead_max",
            ));
        }
        if !(self.d_safe > 0.0) {
            return Err(GuidanceError::BadParams("d_safe must be positive"));
        }
        if !(self.a_brake_plan > 0.0) {
            return Err(GuidanceError::BadParams("a_brake_plan must be positive"));
        }
        if !(self.v_target >= 0.0) || !(self.v_stop_eps > 0.0) {
            return Err(GuidanceError::BadParams("speeds must be non-negative"));
        }
        if !(self.kp >= 0.0 && self.ki >= 0.0 && self.t_clear >= 0.0 && self.t_stale > 0.0) {
            return Err(GuidanceError::BadParams(
                "gains and timers must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn lookahead(&self, v: f64) -> f64 {
        (self.k_v * v).clamp(self.lookahead_min, self.lookahead_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    #[default]
    Cruise,
    Braking,
    Hold,
    Failsafe,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Cruise => "CRUISE",
            Mode::Braking => "BRAKING",
            Mode::Hold => "HOLD",
            Mode::Failsafe => "FAILSAFE",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CRUISE" => Ok(Mode::Cruise),
            "BRAKING" => Ok(Mode::Braking),
            "HOLD" => Ok(Mode::Hold),
            "FAILSAFE" => Ok(Mode::Failsafe),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuidanceState {
    pub mode: Mode,
    /// Integral of speed error, m.
    pub integrator: f64,
    pub last_sensor_age: f64,
    pub clear_timer: f64,
    /// Last emitted steer command; frozen in HOLD and FAILSAFE.
    pub last_steer_cmd: f64,
}

pub fn pure_pursuit_steer(
    pose: &LocalPose,
    path: &Path,
    params: &GuidanceParams,
    plant: &PlantParams,
) -> f64 {
    let lookahead = params.lookahead(pose.speed);
    let here = Vec2::new(pose.x, pose.y);
    let s = path.project(here).s;
    let goal = path.point_at(s + lookahead);
    let rel = goal - here;
    if rel.norm() == 0.0 {
        return 0.0;
    }
    let alpha = normalize_angle(rel.y.atan2(rel.x) - pose.heading);
    let steer = if alpha.abs() > std::f64::consts::FRAC_PI_2 {
        // Goal behind the vehicle: turn as hard as possible toward it.
        plant.steer_max.copysign(alpha)
    } else {
        (2.0 * plant.wheelbase * alpha.sin() / lookahead).atan()
    };
    steer.clamp(-plant.steer_max, plant.steer_max)
}

/// The two speed ceilings; the command is their minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedLimits {
    pub v_path: f64,
    pub v_obs: Option<f64>,
}

impl SpeedLimits {
    pub fn command(&self) -> f64 {
        self.v_obs.map_or(self.v_path, |v| v.min(self.v_path))
    }

    pub fn obstacle_binding(&self) -> bool {
        self.v_obs.is_some_and(|v| v < self.v_path)
    }
}

fn braking_speed(distance: f64, decel: f64) -> f64 {
    if distance <= 0.0 {
        0.0
    } else {
        (2.0 * decel * distance).sqrt()
    }
}

pub fn speed_limits(
    projection: &PathProjection,
    path: &Path,
    detections: &[RadarDetection],
    params: &GuidanceParams,
) -> SpeedLimits {
    let remaining = path.total_length() - projection.s;
    let v_path = params
        .v_target
        .min(braking_speed(remaining, params.a_brake_plan));
    let v_obs = detections
        .first()
        .map(|d| braking_speed(d.range - params.d_safe, params.a_brake_plan));
    SpeedLimits { v_path, v_obs }
}

pub fn speed_command(
    projection: &PathProjection,
    path: &Path,
    detections: &[RadarDetection],
    params: &GuidanceParams,
) -> f64 {
    speed_limits(projection, path, detections, params).command()
}

/// Deceleration the speed target demands while the vehicle moves along a
/// constant-deceleration braking curve at speed `v`.
fn braking_feedforward(v_cmd: f64, v: f64, params: &GuidanceParams, plant: &PlantParams) -> f64 {
    if v_cmd >= params.v_target || v <= 0.0 {
        return 0.0;
    }
    let ratio = if v_cmd > 0.0 {
        v / v_cmd
    } else {
        f64::INFINITY
    };
    (-params.a_brake_plan * ratio).max(-plant.a_brake_max)
}

/// PI speed loop with an acceleration feedforward term. Returns the pedal part
/// of the command (steer left at 0) and the updated state.
pub fn longitudinal_control(
    v_cmd: f64,
    a_ff: f64,
    v: f64,
    state: &GuidanceState,
    dt: f64,
    params: &GuidanceParams,
    plant: &PlantParams,
) -> (ActuationCommand, GuidanceState) {
    let error = v_cmd - v;
    let mut next = *state;
    let unclamped = params.kp * error + params.ki * state.integrator + a_ff;
    let saturated = (unclamped >= plant.a_throttle_max && error > 0.0)
        || (unclamped <= -plant.a_brake_max && error < 0.0);
    if !saturated && params.ki > 0.0 {
        let limit = INTEGRAL_ACCEL_LIMIT / params.ki;
        next.integrator = (state.integrator + error * dt).clamp(-limit, limit);
    }
    let accel = params.kp * error + params.ki * next.integrator + a_ff;
    let mut cmd = ActuationCommand::default();
    if accel > 0.0 {
        cmd.throttle = (accel / plant.a_throttle_max).clamp(0.0, 1.0);
    } else if accel < 0.0 {
        cmd.brake = (-accel / plant.a_brake_max).clamp(0.0, 1.0);
    }
    (cmd, next)
}

/// Everything the controller receives in one sensor packet.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub fix: GeoFix,
    pub detections: Vec<RadarDetection>,
    /// Seconds since the data was sampled.
    pub age: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceOutput {
    pub command: ActuationCommand,
    pub state: GuidanceState,
    pub v_cmd: f64,
    pub projection: Option<PathProjection>,
}

/// The controller: configuration plus a pure transition function over
/// [`GuidanceState`].
#[derive(Debug, Clone)]
pub struct Guidance {
    anchor: FrameAnchor,
    params: GuidanceParams,
    plant: PlantParams,
    path: Option<Path>,
}

impl Guidance {
    pub fn new(anchor: FrameAnchor, params: GuidanceParams, plant: PlantParams) -> Self {
        Self {
            anchor,
            params,
            plant,
            path: None,
        }
    }

    pub fn with_path(mut self, path: Path) -> Self {
        self.path = Some(path);
        self
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_ref()
    }

    pub fn params(&self) -> &GuidanceParams {
        &self.params
    }

    pub fn step(
        &self,
        frame: &SensorFrame,
        state: &GuidanceState,
        dt: f64,
    ) -> Result<GuidanceOutput, GuidanceError> {
        let path = self.path.as_ref().ok_or(GuidanceError::PathNotSet)?;
        let p = &self.params;
        let mut next = GuidanceState {
            last_sensor_age: frame.age,
            ..*state
        };

        if frame.age > p.t_stale {
            next.mode = Mode::Failsafe;
            next.integrator = 0.0;
            next.clear_timer = 0.0;
            return Ok(GuidanceOutput {
                command: ActuationCommand::full_brake(state.last_steer_cmd),
                state: next,
                v_cmd: 0.0,
                projection: None,
            });
        }
        if next.mode == Mode::Failsafe {
            next.mode = Mode::Cruise;
        }

        let pose = geo_to_local(&frame.fix, &self.anchor)?;
        let v = frame.fix.speed;
        let projection = path.project(Vec2::new(pose.x, pose.y));
        let limits = speed_limits(&projection, path, &frame.detections, p);
        let nearest = frame.detections.first().map(|d| d.range);

        next.mode = match next.mode {
            Mode::Cruise if limits.obstacle_binding() => Mode::Braking,
            Mode::Braking if v < p.v_stop_eps && nearest.is_some_and(|r| r <= p.d_safe + 1.0) => {
                Mode::Hold
            }
            Mode::Hold => {
                next.clear_timer = if frame.detections.is_empty() {
                    next.clear_timer + dt
                } else {
                    0.0
                };
                if p.resume_enabled && next.clear_timer >= p.t_clear {
                    next.clear_timer = 0.0;
                    Mode::Cruise
                } else {
                    Mode::Hold
                }
            }
            m => m,
        };

        if next.mode == Mode::Hold {
            next.integrator = 0.0;
            return Ok(GuidanceOutput {
                command: ActuationCommand {
                    steer_cmd: state.last_steer_cmd,
                    throttle: 0.0,
                    brake: HOLD_BRAKE,
                },
                state: next,
                v_cmd: 0.0,
                projection: Some(projection),
            });
        }

        let steer = pure_pursuit_steer(&pose, path, p, &self.plant);
        let v_cmd = limits.command();
        let a_ff = braking_feedforward(v_cmd, v, p, &self.plant);
        let (mut command, after) = longitudinal_control(v_cmd, a_ff, v, &next, dt, p, &self.plant);
        command.steer_cmd = steer;
        next = GuidanceState {
            last_steer_cmd: steer,
            ..after
        };
        Ok(GuidanceOutput {
            command,
            state: next,
            v_cmd,
            projection: Some(projection),
        })
    }
}
