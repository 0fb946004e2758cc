use std::net::{SocketAddr, UdpSocket};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use vve_core::harness::{
    compute_metrics, load_scenario, read_log_file, run_controller, run_lockstep, run_networked,
    run_world, write_log_file, ControllerConfig, LogRecord, Pacing, RunError, RunMode, Scenario,
    WorldConfig, DEFAULT_ACTUATION_PORT, DEFAULT_POSE_PORT, DEFAULT_SENSOR_PORT,
};
use vve_core::sweep::{sweep_seeds, Exec};

const EXIT_CONFIG: u8 = 1;
const EXIT_COLLISION: u8 = 2;
const EXIT_NETWORK: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vve",
    version,
    about = "Vehicle-in-virtual-environment co-simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lockstep,
    Udp,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and print its metrics.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Write the per-tick log as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Do not pace udp runs to wall-clock time.
        #[arg(long)]
        fast: bool,
    },
    /// Print metrics of a logged run.
    Metrics {
        log: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        v_stop_eps: f64,
    },
    /// Simulator endpoint: plant, virtual world and sensors.
    ServeWorld {
        scenario: PathBuf,
        /// Address receiving actuation packets.
        #[arg(long, default_value_t = SocketAddr::from(([127, 0, 0, 1], DEFAULT_ACTUATION_PORT)))]
        bind: SocketAddr,
        /// Address receiving the plant's pose stream.
        #[arg(long, default_value_t = SocketAddr::from(([127, 0, 0, 1], DEFAULT_POSE_PORT)))]
        pose_bind: SocketAddr,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        fast: bool,
        /// Seconds to wait for the controller to appear.
        #[arg(long, default_value_t = 10.0)]
        connect_timeout: f64,
    },
    /// Controller endpoint: path following and speed control.
    ServeController {
        scenario: PathBuf,
        /// World endpoint address.
        #[arg(long, default_value_t = SocketAddr::from(([127, 0, 0, 1], DEFAULT_ACTUATION_PORT)))]
        connect: SocketAddr,
        /// Local address receiving sensor packets.
        #[arg(long, default_value_t = SocketAddr::from(([127, 0, 0, 1], DEFAULT_SENSOR_PORT)))]
        bind: SocketAddr,
        /// Exit after this many seconds without traffic.
        #[arg(long, default_value_t = 3.0)]
        idle_timeout: f64,
    },
    /// Print the resolved scenario as JSON.
    Echo { scenario: PathBuf },
    /// Run a scenario over a range of seeds.
    Sweep {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 16)]
        count: u64,
        #[arg(long)]
        sequential: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = match e {
            RunError::Net(_) | RunError::NoPeer(_) => EXIT_NETWORK,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn network(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_NETWORK,
        message: e.to_string(),
    }
}

fn scenario(path: &PathBuf, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut sc =
        load_scenario(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        sc.set_seed(seed);
    }
    Ok(sc)
}

fn finish(records: &[LogRecord], log: Option<&PathBuf>, v_stop_eps: f64) -> Result<u8, Failure> {
    if let Some(path) = log {
        write_log_file(path, records).map_err(Failure::config)?;
    }
    let m = compute_metrics(records, v_stop_eps).map_err(Failure::config)?;
    println!("{m}");
    Ok(if m.collided { EXIT_COLLISION } else { 0 })
}

fn pacing(fast: bool) -> Pacing {
    if fast {
        Pacing::Fast
    } else {
        Pacing::RealTime
    }
}

fn execute(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Run {
            scenario: path,
            mode,
            log,
            seed,
            fast,
        } => {
            let sc = scenario(&path, seed)?;
            let mode = match mode {
                Some(ModeArg::Lockstep) => RunMode::Lockstep,
                Some(ModeArg::Udp) => RunMode::Udp,
                None => sc.mode,
            };
            let run = match mode {
                RunMode::Lockstep => run_lockstep(&sc)?,
                RunMode::Udp => {
                    let cfg = WorldConfig {
                        pacing: pacing(fast),
                        ..WorldConfig::default()
                    };
                    run_networked(&sc, &cfg, &ControllerConfig::default())?.run
                }
            };
            println!("end={}", run.end.as_str());
            finish(&run.records, log.as_ref(), sc.guidance.v_stop_eps)
        }
        Command::Metrics { log, v_stop_eps } => {
            let records = read_log_file(&log)
                .map_err(|e| Failure::config(format!("{}: {e}", log.display())))?;
            finish(&records, None, v_stop_eps)
        }
        Command::ServeWorld {
            scenario: path,
            bind,
            pose_bind,
            log,
            seed,
            fast,
            connect_timeout,
        } => {
            let sc = scenario(&path, seed)?;
            let sock = UdpSocket::bind(bind).map_err(network)?;
            let cfg = WorldConfig {
                pacing: pacing(fast),
                pose_bind,
                connect_timeout: Duration::from_secs_f64(connect_timeout),
                ..WorldConfig::default()
            };
            let out = run_world(&sc, &sock, &cfg)?;
            println!("end={}", out.run.end.as_str());
            if let Some(t) = out.stats.controller_lost_at {
                println!("controller_lost_at={t}");
            }
            println!("watchdog_trips={}", out.stats.watchdog_trips);
            finish(&out.run.records, log.as_ref(), sc.guidance.v_stop_eps)
        }
        Command::ServeController {
            scenario: path,
            connect,
            bind,
            idle_timeout,
        } => {
            let sc = scenario(&path, None)?;
            let sock = UdpSocket::bind(bind).map_err(network)?;
            let cfg = ControllerConfig {
                idle_timeout: Duration::from_secs_f64(idle_timeout),
                ..ControllerConfig::default()
            };
            let report = run_controller(&sc, &sock, connect, &cfg, None)?;
            let mut last = None;
            for (stamp, mode) in &report.trace {
                if last != Some(*mode) {
                    println!("t={} mode={mode}", *stamp as f64 * 1e-6);
                    last = Some(*mode);
                }
            }
            println!("sensors_accepted={}", report.sensors.accepted);
            Ok(0)
        }
        Command::Echo { scenario: path } => {
            let sc = scenario(&path, None)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&sc.to_json()).expect("json values serialize")
            );
            Ok(0)
        }
        Command::Sweep {
            scenario: path,
            first_seed,
            count,
            sequential,
        } => {
            let sc = scenario(&path, None)?;
            let seeds: Vec<u64> = (first_seed..first_seed + count).collect();
            let exec = if sequential {
                Exec::Sequential
            } else {
                Exec::Parallel
            };
            let outcomes = sweep_seeds(&sc, &seeds, exec)?;
            println!("seed,end,collided,final_gap,max_abs_cross_track");
            let mut code = 0;
            for o in outcomes {
                let gap = o
                    .metrics
                    .final_gap
                    .map_or("none".to_owned(), |g| g.to_string());
                println!(
                    "{},{},{},{gap},{}",
                    o.seed,
                    o.end.as_str(),
                    o.metrics.collided,
                    o.metrics.max_abs_cross_track
                );
                if o.metrics.collided {
                    code = EXIT_COLLISION;
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
