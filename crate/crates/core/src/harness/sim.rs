use thiserror::Error;

use super::log::{LogRecord, NO_DETECTION};
use super::scenario::Scenario;
use crate::bridge::{DecodeError, EncodeError, Packet, PosePacket, SensorPacket, WireDetection};
use crate::geoframe::{geo_to_local, local_to_geo, GeoError, GeoFix, LocalPose};
use crate::guidance::{GuidanceError, Mode, SensorFrame};
use crate::plant::{plant_step, ActuationCommand, VehicleState};
use crate::sensors::{gps_sample, radar_scan, GpsRng, RadarDetection};
use crate::world::{Vec2, World};

/// Radar is sampled every this many plant ticks (20 Hz at the default step).
pub const RADAR_EVERY: u64 = 5;
/// A sensor packet goes to the controller every this many ticks (50 Hz).
pub const SENSOR_EVERY: u64 = 2;
/// Seconds stopped in HOLD or FAILSAFE before a run is considered finished.
pub const HOLD_FINISH_S: f64 = 3.0;
/// Fraction of the path that counts as reaching its end.
pub const PATH_COMPLETE_FRACTION: f64 = 0.99;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error("encode: {0}")]
    Encode(#[from] EncodeError),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("unexpected packet type on {0} link")]
    WrongPacket(&'static str),
    #[error("network: {0}")]
    Net(#[from] std::io::Error),
    #[error("no contact with the {0}")]
    NoPeer(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndReason {
    Collision,
    PathComplete,
    Holding,
    MaxDuration,
}

impl EndReason {
    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::Collision => "collision",
            EndReason::PathComplete => "path_complete",
            EndReason::Holding => "holding",
            EndReason::MaxDuration => "max_duration",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<LogRecord>,
    pub end: EndReason,
}

pub(crate) fn us(t: f64) -> u64 {
    (t * 1e6).round() as u64
}

pub(crate) fn frame_from_packet(p: &SensorPacket, age: f64) -> SensorFrame {
    SensorFrame {
        fix: p.fix,
        detections: p.detections.iter().map(RadarDetection::from).collect(),
        age,
    }
}

/// Plant, virtual world and virtual sensors: everything on the simulator side
/// of the bridge.
pub(crate) struct WorldSide<'a> {
    sc: &'a Scenario,
    pub state: VehicleState,
    world: World,
    gps_rng: GpsRng,
    fix: GeoFix,
    detections: Vec<RadarDetection>,
    pose_seq: u32,
    sensor_seq: u32,
}

impl<'a> WorldSide<'a> {
    pub fn new(sc: &'a Scenario) -> Result<Self, RunError> {
        let state = sc.initial_state();
        let world = sc.initial_world();
        let fix = local_to_geo(world.ego_pose(), &sc.anchor)?;
        Ok(Self {
            sc,
            state,
            world,
            gps_rng: GpsRng::new(sc.gps.seed),
            fix,
            detections: Vec::new(),
            pose_seq: 0,
            sensor_seq: 0,
        })
    }

    pub fn step_plant(&mut self, cmd: &ActuationCommand) {
        self.state = plant_step(&self.state, cmd, &self.sc.plant);
    }

    fn true_pose(&self) -> LocalPose {
        LocalPose::new(self.state.x, self.state.y, self.state.heading, self.state.v)
    }

    pub fn pose_packet(&mut self, t_mono_us: u64) -> Result<Packet, RunError> {
        self.pose_seq = self.pose_seq.wrapping_add(1);
        Ok(Packet::Pose(PosePacket {
            seq: self.pose_seq,
            t_mono_us,
            fix: local_to_geo(&self.true_pose(), &self.sc.anchor)?,
        }))
    }

    /// Moves the virtual twin to a received pose.
    pub fn apply_pose(&mut self, p: &PosePacket) -> Result<(), RunError> {
        let pose = geo_to_local(&p.fix, &self.sc.anchor)?;
        self.world.set_ego_pose(pose);
        Ok(())
    }

    /// GPS every tick, radar on its slower schedule, both from the twin.
    pub fn sample_sensors(&mut self, tick: u64) -> Result<(), RunError> {
        let twin = *self.world.ego_pose();
        self.fix = gps_sample(&twin, &self.sc.anchor, &self.sc.gps, &mut self.gps_rng)?;
        if tick.is_multiple_of(RADAR_EVERY) {
            self.detections = radar_scan(&self.world, twin.speed, &self.sc.radar);
        }
        Ok(())
    }

    pub fn sensor_packet(&mut self, t_mono_us: u64) -> Packet {
        self.sensor_seq = self.sensor_seq.wrapping_add(1);
        Packet::Sensor(SensorPacket {
            seq: self.sensor_seq,
            t_mono_us,
            fix: self.fix,
            detections: self.detections.iter().map(WireDetection::from).collect(),
        })
    }

    /// Footprint overlap at the true plant state.
    pub fn collision(&self) -> bool {
        let ego = self.sc.footprint.rect_at(&self.true_pose());
        self.world
            .obstacles()
            .iter()
            .any(|o| ego.intersects(&o.rect()))
    }

    pub fn record(&self, tick: u64, mode: Option<Mode>, cmd: &ActuationCommand) -> LogRecord {
        let proj = self.sc.path.project(Vec2::new(self.state.x, self.state.y));
        LogRecord {
            tick,
            t: tick as f64 * self.sc.plant.dt,
            x: self.state.x,
            y: self.state.y,
            heading: self.state.heading,
            v: self.state.v,
            steer: self.state.steer,
            lat: self.fix.lat,
            lon: self.fix.lon,
            radar_range: self.detections.first().map_or(NO_DETECTION, |d| d.range),
            e_lat: proj.e_lat,
            progress: proj.s / self.sc.path.total_length(),
            mode,
            steer_cmd: cmd.steer_cmd,
            throttle: cmd.throttle,
            brake: cmd.brake,
            collision: self.collision(),
        }
    }
}

/// Decides when a run is over.
pub(crate) struct Terminator {
    dt: f64,
    v_stop_eps: f64,
    max_duration: f64,
    stopped_for: f64,
    moved: bool,
}

impl Terminator {
    pub fn new(sc: &Scenario) -> Self {
        Self {
            dt: sc.plant.dt,
            v_stop_eps: sc.guidance.v_stop_eps,
            max_duration: sc.max_duration,
            stopped_for: 0.0,
            moved: false,
        }
    }

    pub fn max_ticks(&self) -> u64 {
        (self.max_duration / self.dt - 1e-9).ceil() as u64
    }

    /// Records with no visible mode count as holding once the vehicle has
    /// moved and come to rest.
    pub fn update(&mut self, r: &LogRecord) -> Option<EndReason> {
        let still = r.v < self.v_stop_eps;
        self.moved |= !still;
        let holding = match r.mode {
            Some(m) => matches!(m, Mode::Hold | Mode::Failsafe),
            None => self.moved,
        };
        if still && holding {
            self.stopped_for += self.dt;
        } else {
            self.stopped_for = 0.0;
        }
        if r.collision {
            Some(EndReason::Collision)
        } else if r.tick > 0 && still && r.progress >= PATH_COMPLETE_FRACTION {
            Some(EndReason::PathComplete)
        } else if self.stopped_for >= HOLD_FINISH_S - 1e-9 {
            Some(EndReason::Holding)
        } else if r.tick >= self.max_ticks() {
            Some(EndReason::MaxDuration)
        } else {
            None
        }
    }
}
