use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bridge::LinkParams;
use crate::geoframe::{compass_to_math_heading, geo_to_local, FrameAnchor, GeoFix, LocalPose};
use crate::guidance::{build_path, read_waypoints_csv, GuidanceParams, Path};
use crate::plant::{PlantParams, VehicleState};
use crate::sensors::{GpsParams, RadarParams};
use crate::world::{EgoFootprint, ObstacleSpec, Vec2, World};

pub const DEFAULT_DS: f64 = 0.5;
pub const DEFAULT_MAX_DURATION: f64 = 120.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field at line {line}, column {column}: {message}")]
    Field {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Semantic(String),
}

impl ScenarioError {
    fn semantic(msg: impl std::fmt::Display) -> Self {
        ScenarioError::Semantic(msg.to_string())
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self, ScenarioError::Syntax { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    #[default]
    Lockstep,
    Udp,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Lockstep => "lockstep",
            RunMode::Udp => "udp",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnchorFile {
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointFile {
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleFile {
    id: Option<u32>,
    lat: f64,
    lon: f64,
    /// Compass degrees, clockwise from north.
    #[serde(default)]
    heading_deg: f64,
    length: f64,
    width: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GpsOverrides {
    sigma_pos: Option<f64>,
    sigma_heading: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LinkOverrides {
    loss_prob: Option<f64>,
    latency_ms: Option<f64>,
    jitter_ms: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    anchor: AnchorFile,
    waypoints_file: Option<PathBuf>,
    waypoints: Option<Vec<WaypointFile>>,
    v_target: Option<f64>,
    #[serde(default)]
    obstacles: Vec<ObstacleFile>,
    #[serde(default)]
    seed: u64,
    max_duration: Option<f64>,
    #[serde(default)]
    mode: RunMode,
    ds: Option<f64>,
    #[serde(default)]
    guidance: GuidanceParams,
    #[serde(default)]
    plant: PlantParams,
    #[serde(default)]
    footprint: EgoFootprint,
    #[serde(default)]
    radar: RadarParams,
    #[serde(default)]
    gps: GpsOverrides,
    #[serde(default)]
    link: LinkOverrides,
}

/// A fully resolved test description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub anchor: FrameAnchor,
    pub waypoints: Vec<GeoFix>,
    pub path: Path,
    pub obstacles: Vec<ObstacleSpec>,
    pub guidance: GuidanceParams,
    pub plant: PlantParams,
    pub footprint: EgoFootprint,
    pub radar: RadarParams,
    pub gps: GpsParams,
    pub link: LinkParams,
    pub seed: u64,
    pub max_duration: f64,
    pub mode: RunMode,
    pub ds: f64,
}

impl Scenario {
    /// Replaces the run seed; GPS noise and link impairment follow it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.gps.seed = seed;
        self.link.seed = seed;
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.set_seed(seed);
        self
    }

    /// Plant state at the start of the path, facing along it, at rest.
    pub fn initial_state(&self) -> VehicleState {
        let p0 = self.path.points()[0];
        VehicleState {
            x: p0.x,
            y: p0.y,
            heading: self.path.start_heading(),
            v: 0.0,
            steer: 0.0,
        }
    }

    pub fn initial_world(&self) -> World {
        let s = self.initial_state();
        World::new(
            LocalPose::new(s.x, s.y, s.heading, 0.0),
            self.footprint,
            self.obstacles.clone(),
        )
        .expect("obstacles validated at load")
    }

    /// Resolved view for display.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "anchor": { "lat": self.anchor.lat0(), "lon": self.anchor.lon0() },
            "waypoint_count": self.waypoints.len(),
            "path": {
                "ds": self.ds,
                "points": self.path.points().len(),
                "total_length": self.path.total_length(),
            },
            "obstacles": self.obstacles.iter().map(|o| json!({
                "id": o.id,
                "x": o.center.x,
                "y": o.center.y,
                "heading": o.heading,
                "length": o.length,
                "width": o.width,
            })).collect::<Vec<_>>(),
            "seed": self.seed,
            "max_duration": self.max_duration,
            "mode": self.mode.as_str(),
            "guidance": self.guidance,
            "plant": self.plant,
            "footprint": self.footprint,
            "radar": self.radar,
            "gps": self.gps,
            "link": self.link,
        })
    }
}

/// Loads a scenario file; a relative `waypoints_file` is resolved against the
/// scenario's directory.
pub fn load_scenario(path: impl AsRef<FsPath>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text, path.parent().unwrap_or(FsPath::new(".")))
}

pub fn parse_scenario(text: &str, base_dir: &FsPath) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        let message = e.to_string();
        match e.classify() {
            serde_json::error::Category::Data => ScenarioError::Field {
                line,
                column,
                message,
            },
            _ => ScenarioError::Syntax {
                line,
                column,
                message,
            },
        }
    })?;
    resolve(file, base_dir)
}

fn resolve(file: ScenarioFile, base_dir: &FsPath) -> Result<Scenario, ScenarioError> {
    let anchor =
        FrameAnchor::new(file.anchor.lat, file.anchor.lon).map_err(ScenarioError::semantic)?;

    let waypoints = match (&file.waypoints_file, file.waypoints) {
        (Some(_), Some(_)) => {
            return Err(ScenarioError::semantic(
                "give either waypoints_file or waypoints, not both",
            ))
        }
        (Some(rel), None) => {
            let wp_path = base_dir.join(rel);
            let f = fs::File::open(&wp_path).map_err(|source| ScenarioError::Io {
                path: wp_path.clone(),
                source,
            })?;
            read_waypoints_csv(f).map_err(ScenarioError::semantic)?
        }
        (None, Some(inline)) => inline
            .iter()
            .map(|w| GeoFix {
                lat: w.lat,
                lon: w.lon,
                heading: 0.0,
                speed: 0.0,
            })
            .collect(),
        (None, None) => return Err(ScenarioError::semantic("scenario has no waypoints")),
    };
    if waypoints.len() < 2 {
        return Err(ScenarioError::semantic(format!(
            "need at least 2 waypoints, got {}",
            waypoints.len()
        )));
    }

    let ds = file.ds.unwrap_or(DEFAULT_DS);
    let path = build_path(&waypoints, &anchor, ds).map_err(ScenarioError::semantic)?;

    let mut guidance = file.guidance;
    if let Some(v) = file.v_target {
        guidance.v_target = v;
    }
    guidance.validate().map_err(ScenarioError::semantic)?;
    file.plant.validate().map_err(ScenarioError::semantic)?;
    file.radar.validate().map_err(ScenarioError::semantic)?;

    let mut gps = GpsParams::default();
    if let Some(s) = file.gps.sigma_pos {
        gps.sigma_pos = s;
    }
    if let Some(s) = file.gps.sigma_heading {
        gps.sigma_heading = s;
    }
    gps.validate().map_err(ScenarioError::semantic)?;

    let mut link = LinkParams::default();
    if let Some(v) = file.link.loss_prob {
        link.loss_prob = v;
    }
    if let Some(v) = file.link.latency_ms {
        link.latency_ms = v;
    }
    if let Some(v) = file.link.jitter_ms {
        link.jitter_ms = v;
    }
    link.validate().map_err(ScenarioError::semantic)?;

    let max_duration = file.max_duration.unwrap_or(DEFAULT_MAX_DURATION);
    if !(max_duration > 0.0 && max_duration.is_finite()) {
        return Err(ScenarioError::semantic("max_duration must be positive"));
    }

    let mut obstacles = Vec::with_capacity(file.obstacles.len());
    for (i, o) in file.obstacles.iter().enumerate() {
        let heading = compass_to_math_heading(o.heading_deg).map_err(ScenarioError::semantic)?;
        let fix = GeoFix {
            lat: o.lat,
            lon: o.lon,
            heading,
            speed: 0.0,
        };
        let local = geo_to_local(&fix, &anchor).map_err(ScenarioError::semantic)?;
        obstacles.push(ObstacleSpec {
            id: o.id.unwrap_or(i as u32 + 1),
            center: Vec2::new(local.x, local.y),
            heading: local.heading,
            length: o.length,
            width: o.width,
        });
    }

    let mut scenario = Scenario {
        anchor,
        waypoints,
        path,
        obstacles,
        guidance,
        plant: file.plant,
        footprint: file.footprint,
        radar: file.radar,
        gps,
        link,
        seed: file.seed,
        max_duration,
        mode: file.mode,
        ds,
    };
    scenario.set_seed(file.seed);
    // Surfaces bad obstacle or footprint dimensions at load time.
    let s = scenario.initial_state();
    World::new(
        LocalPose::new(s.x, s.y, s.heading, 0.0),
        scenario.footprint,
        scenario.obstacles.clone(),
    )
    .map_err(ScenarioError::semantic)?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "anchor": {"lat": 40.0, "lon": -83.0},
        "waypoints": [{"lat": 40.0, "lon": -83.0}, {"lat": 40.0, "lon": -82.9995}]
    }"#;

    fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        parse_scenario(text, FsPath::new("."))
    }

    #[test]
    fn minimal_gets_defaults() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.guidance, GuidanceParams::default());
        assert_eq!(s.plant, PlantParams::default());
        assert_eq!(s.radar, RadarParams::default());
        assert_eq!(s.gps.sigma_pos, 0.02);
        assert_eq!(s.mode, RunMode::Lockstep);
        assert_eq!(s.max_duration, DEFAULT_MAX_DURATION);
        assert_eq!(s.ds, DEFAULT_DS);
        assert!(s.obstacles.is_empty());
        // 0.0005 deg of longitude at 40N on the spherical model.
        let expect = 0.0005f64.to_radians() * 6_378_137.0 * 40f64.to_radians().cos();
        assert!((s.path.total_length() - expect).abs() < 1e-6);
        assert_eq!(s.initial_state().heading, 0.0);
    }

    #[test]
    fn unknown_key_named() {
        let text = MINIMAL.replace("\"anchor\"", "\"vtarget\": 3, \"anchor\"");
        let err = parse(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Field { .. }), "{err}");
        assert!(err.to_string().contains("vtarget"), "{err}");
        let text = MINIMAL.replace("\"anchor\"", "\"guidance\": {\"kd\": 1}, \"anchor\"");
        assert!(parse(&text).unwrap_err().to_string().contains("kd"));
    }

    #[test]
    fn syntax_distinct_from_semantic() {
        let err = parse("{\n  \"anchor\": {\"lat\": 40.0,, }\n}").unwrap_err();
        assert!(err.is_syntax());
        assert!(
            matches!(err, ScenarioError::Syntax { line: 2, .. }),
            "{err}"
        );
        let err = parse(r#"{"anchor": {"lat": 40.0, "lon": -83.0}}"#).unwrap_err();
        assert!(matches!(err, ScenarioError::Semantic(_)), "{err}");
        let err =
            parse(&MINIMAL.replace("\"anchor\"", "\"max_duration\": 0, \"anchor\"")).unwrap_err();
        assert!(matches!(err, ScenarioError::Semantic(_)), "{err}");
    }

    #[test]
    fn obstacle_at_anchor_is_origin() {
        let text = MINIMAL.replace(
            "\"anchor\"",
            r#""obstacles": [{"lat": 40.0, "lon": -83.0, "heading_deg": 90, "length": 4.5, "width": 1.9}], "anchor""#,
        );
        let s = parse(&text).unwrap();
        let o = &s.obstacles[0];
        assert_eq!((o.center.x, o.center.y), (0.0, 0.0));
        assert_eq!(o.heading, 0.0);
        assert_eq!(o.id, 1);
    }

    #[test]
    fn overrides_and_seed() {
        let text = MINIMAL.replace(
            "\"anchor\"",
            r#""v_target": 3.5, "seed": 9, "gps": {"sigma_pos": 0.05}, "link": {"loss_prob": 0.1}, "mode": "udp", "anchor""#,
        );
        let s = parse(&text).unwrap();
        assert_eq!(s.guidance.v_target, 3.5);
        assert_eq!(s.gps.sigma_pos, 0.05);
        assert_eq!(s.gps.seed, 9);
        assert_eq!(s.link.loss_prob, 0.1);
        assert_eq!(s.mode, RunMode::Udp);
        let s = s.with_seed(11);
        assert_eq!((s.seed, s.gps.seed, s.link.seed), (11, 11, 11));
    }

    #[test]
    fn waypoint_file_relative_to_scenario() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("wp.csv"),
            "lat_deg,lon_deg\n40.0,-83.0\n40.0,-82.9999\n40.0,-82.9998\n",
        )
        .unwrap();
        let scenario = dir.path().join("s.json");
        fs::write(
            &scenario,
            r#"{"anchor": {"lat": 40.0, "lon": -83.0}, "waypoints_file": "wp.csv"}"#,
        )
        .unwrap();
        let s = load_scenario(&scenario).unwrap();
        assert_eq!(s.waypoints.len(), 3);
        assert!(matches!(
            load_scenario(dir.path().join("missing.json")),
            Err(ScenarioError::Io { .. })
        ));
    }
}
