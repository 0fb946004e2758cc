use std::net::UdpSocket;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use vve_core::guidance::Mode;
use vve_core::harness::{mode_trace, read_log_file, write_log_file, LogRecord, NO_DETECTION};

fn vve() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vve"))
}

fn reference() -> PathBuf {
    PathBuf::from(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/reference.json"
    ))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn free_port() -> u16 {
    UdpSocket::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

#[test]
fn run_writes_log_and_metrics_agree() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run.csv");
    let out = vve()
        .arg("run")
        .arg(reference())
        .arg("--log")
        .arg(&log)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("end=holding"));
    assert!(text.contains("collided=false"));

    let again = vve().arg("metrics").arg(&log).output().unwrap();
    assert_eq!(again.status.code(), Some(0));
    let metrics_lines: Vec<&str> = text.lines().filter(|l| !l.starts_with("end=")).collect();
    assert_eq!(stdout(&again).lines().collect::<Vec<_>>(), metrics_lines);
}

#[test]
fn seed_flag_changes_noise_only() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let log = dir.path().join(name);
        let out = vve()
            .arg("run")
            .arg(reference())
            .args(["--seed", seed, "--log"])
            .arg(&log)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(log).unwrap()
    };
    let a = run("1", "a.csv");
    assert_eq!(a, run("1", "b.csv"));
    assert_ne!(a, run("2", "c.csv"));
}

#[test]
fn metrics_exit_code_on_collision() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("hit.csv");
    let rec = LogRecord {
        tick: 0,
        t: 0.0,
        x: 0.0,
        y: 0.0,
        heading: 0.0,
        v: 1.0,
        steer: 0.0,
        lat: 40.0,
        lon: -83.0,
        radar_range: NO_DETECTION,
        e_lat: 0.0,
        progress: 0.0,
        mode: Some(Mode::Cruise),
        steer_cmd: 0.0,
        throttle: 0.0,
        brake: 0.0,
        collision: true,
    };
    write_log_file(&log, &[rec]).unwrap();
    let out = vve().arg("metrics").arg(&log).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("collided=true"));
}

#[test]
fn run_exit_code_on_collision() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("crash.json");
    // Obstacle overlapping the start of the path.
    std::fs::write(
        &scenario,
        r#"{"anchor": {"lat": 40.0, "lon": -83.0},
            "waypoints": [{"lat": 40.0, "lon": -83.0}, {"lat": 40.0, "lon": -82.9995}],
            "obstacles": [{"lat": 40.0, "lon": -82.99998, "heading_deg": 90, "length": 4.5, "width": 1.9}]}"#,
    )
    .unwrap();
    let out = vve().arg("run").arg(&scenario).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n \"anchor\": [1,,\n}").unwrap();
    let out = vve().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    std::fs::write(
        &bad,
        r#"{"anchor": {"lat": 40, "lon": -83}, "waypoints": [], "speed": 3}"#,
    )
    .unwrap();
    let out = vve().arg("echo").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed"));

    assert_eq!(
        vve().arg("frobnicate").output().unwrap().status.code(),
        Some(1)
    );
    assert_eq!(vve().args(["run"]).output().unwrap().status.code(), Some(1));
    assert_eq!(vve().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn echo_prints_resolved_scenario() {
    let out = vve().arg("echo").arg(reference()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["anchor"]["lat"], 40.0);
    assert_eq!(v["guidance"]["v_target"], 5.0);
    assert_eq!(v["radar"]["n_rays"], 41);
    assert_eq!(v["obstacles"].as_array().unwrap().len(), 1);
}

#[test]
fn udp_fast_run_succeeds() {
    let out = vve()
        .arg("run")
        .arg(reference())
        .args(["--mode", "udp", "--fast"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("collided=false"));
}

#[test]
fn sweep_lists_every_seed() {
    let par = vve()
        .arg("sweep")
        .arg(reference())
        .args(["--count", "4"])
        .output()
        .unwrap();
    let seq = vve()
        .arg("sweep")
        .arg(reference())
        .args(["--count", "4", "--sequential"])
        .output()
        .unwrap();
    assert_eq!(par.status.code(), Some(0));
    assert_eq!(stdout(&par), stdout(&seq));
    assert_eq!(stdout(&par).lines().count(), 5);
}

#[test]
fn missing_controller_is_a_network_failure() {
    let port = free_port();
    let out = vve()
        .arg("serve-world")
        .arg(reference())
        .args([
            "--bind",
            &format!("127.0.0.1:{port}"),
            "--pose-bind",
            "127.0.0.1:0",
        ])
        .args(["--connect-timeout", "0.3", "--fast"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn killed_controller_process_brakes_to_failsafe_stop() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("world.csv");
    let addr = format!("127.0.0.1:{}", free_port());
    let world = vve()
        .arg("serve-world")
        .arg(reference())
        .args(["--bind", &addr, "--pose-bind", "127.0.0.1:0", "--log"])
        .arg(&log)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut controller = vve()
        .arg("serve-controller")
        .arg(reference())
        .args(["--connect", &addr, "--bind", "127.0.0.1:0"])
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    std::thread::sleep(Duration::from_secs(3));
    controller.kill().unwrap();
    controller.wait().unwrap();

    let out = world.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("end=holding"), "{text}");
    assert!(text.contains("stopped=true") && text.contains("collided=false"));

    let records = read_log_file(&log).unwrap();
    let last = records.last().unwrap();
    assert_eq!(last.mode, Some(Mode::Failsafe));
    assert_eq!(last.brake, 1.0);
    assert!(last.v < 0.05);
    // The vehicle was moving before the controller vanished.
    assert!(records.iter().any(|r| r.v > 1.0));
    assert_eq!(mode_trace(&records), vec![Mode::Failsafe]);
}
