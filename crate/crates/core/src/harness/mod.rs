//! Scenario loading, the co-simulation run loops, logging and metrics.

mod lockstep;
mod log;
mod metrics;
mod net;
mod scenario;
mod sim;

pub use lockstep::run_lockstep;
pub use log::{
    mode_trace, read_log, read_log_file, write_log, write_log_file, LogError, LogRecord,
    NO_DETECTION,
};
pub use metrics::{compute_metrics, EmptyLog, Metrics};
pub use net::{
    overlay_modes, run_controller, run_networked, run_world, ControllerConfig, ControllerReport,
    LinkStats, NetOutput, Pacing, WorldConfig, WorldOutput, WorldStats, DEFAULT_ACTUATION_PORT,
    DEFAULT_POSE_PORT, DEFAULT_SENSOR_PORT,
};
pub use scenario::{
    load_scenario, parse_scenario, RunMode, Scenario, ScenarioError, DEFAULT_DS,
    DEFAULT_MAX_DURATION,
};
pub use sim::{
    EndReason, RunError, RunOutput, HOLD_FINISH_S, PATH_COMPLETE_FRACTION, RADAR_EVERY,
    SENSOR_EVERY,
};
