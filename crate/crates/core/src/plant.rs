//! Kinematic bicycle stand-in for the physical vehicle.
//!
//! The reference point is the rear-axle center. Steering is a pure rate
//! limit toward the commanded road-wheel angle; the rest of the state is
//! integrated with classic RK4 over one fixed step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geoframe::normalize_angle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("throttle ({throttle}) and brake ({brake}) must not both be applied")]
    ThrottleAndBrake { throttle: f64, brake: f64 },
    #[error("invalid plant parameter: {0}")]
    BadParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub wheelbase: f64,
    pub steer_max: f64,
    pub steer_rate_max: f64,
    pub a_throttle_max: f64,
    pub a_brake_max: f64,
    pub dt: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.85,
            steer_max: 0.5,
            steer_rate_max: 0.6,
            a_throttle_max: 2.5,
            a_brake_max: 6.0,
            dt: 0.01,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        let fields = [
            self.wheelbase,
            self.steer_max,
            self.steer_rate_max,
            self.a_throttle_max,
            self.a_brake_max,
            self.dt,
        ];
        if fields.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(PlantError::BadParams(
                "all plant parameters must be positive",
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    /// Current road-wheel angle.
    pub steer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuationCommand {
    pub steer_cmd: f64,
    pub throttle: f64,
    pub brake: f64,
}

impl ActuationCommand {
    pub fn full_brake(steer_cmd: f64) -> Self {
        Self {
            steer_cmd,
            throttle: 0.0,
            brake: 1.0,
        }
    }
}

pub fn actuation_to_accel(cmd: &ActuationCommand, params: &PlantParams) -> Result<f64, PlantError> {
    if cmd.throttle > 0.0 && cmd.brake > 0.0 {
        return Err(PlantError::ThrottleAndBrake {
            throttle: cmd.throttle,
            brake: cmd.brake,
        });
    }
    let throttle = cmd.throttle.clamp(0.0, 1.0);
    let brake = cmd.brake.clamp(0.0, 1.0);
    Ok(throttle * params.a_throttle_max - brake * params.a_brake_max)
}

// (x, y, heading) derivative for fixed steer and speed profile v(t) = v0 + a t.
fn pose_rate(heading: f64, v: f64, curvature: f64) -> [f64; 3] {
    [v * heading.cos(), v * heading.sin(), v * curvature]
}

fn rk4(state: &VehicleState, curvature: f64, accel: f64, h: f64) -> VehicleState {
    let add =
        |s: [f64; 3], k: [f64; 3], f: f64| [s[0] + f * k[0], s[1] + f * k[1], s[2] + f * k[2]];
    let s0 = [state.x, state.y, state.heading];
    let v0 = state.v;
    let k1 = pose_rate(s0[2], v0, curvature);
    let s1 = add(s0, k1, h / 2.0);
    let k2 = pose_rate(s1[2], v0 + accel * h / 2.0, curvature);
    let s2 = add(s0, k2, h / 2.0);
    let k3 = pose_rate(s2[2], v0 + accel * h / 2.0, curvature);
    let s3 = add(s0, k3, h);
    let k4 = pose_rate(s3[2], v0 + accel * h, curvature);
    let next = |i: usize| s0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    VehicleState {
        x: next(0),
        y: next(1),
        heading: normalize_angle(next(2)),
        v: v0 + accel * h,
        steer: state.steer,
    }
}

/// Advances the plant by `params.dt`. A command with both pedals applied is
/// treated as braking only.
pub fn plant_step(
    state: &VehicleState,
    cmd: &ActuationCommand,
    params: &PlantParams,
) -> VehicleState {
    let dt = params.dt;
    let target = cmd.steer_cmd.clamp(-params.steer_max, params.steer_max);
    let max_delta = params.steer_rate_max * dt;
    let steer = (state.steer + (target - state.steer).clamp(-max_delta, max_delta))
        .clamp(-params.steer_max, params.steer_max);

    let sanitized = if cmd.throttle > 0.0 && cmd.brake > 0.0 {
        ActuationCommand {
            throttle: 0.0,
            ..*cmd
        }
    } else {
        *cmd
    };
    let accel = actuation_to_accel(&sanitized, params).unwrap_or(0.0);
    let curvature = steer.tan() / params.wheelbase;
    let start = VehicleState { steer, ..*state };

    // No reverse: integrate only until the vehicle comes to rest.
    let v_end = state.v + accel * dt;
    if v_end >= 0.0 {
        rk4(&start, curvature, accel, dt)
    } else {
        let t_stop = if accel < 0.0 {
            (state.v / -accel).min(dt)
        } else {
            0.0
        };
        let mut out = if t_stop > 0.0 {
            rk4(&start, curvature, accel, t_stop)
        } else {
            start
        };
        out.v = 0.0;
        out
    }
}
