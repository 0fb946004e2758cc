use std::path::Path;

use vve_core::geoframe::{local_to_geo, FrameAnchor, LocalPose};
use vve_core::guidance::Mode;
use vve_core::harness::{
    compute_metrics, mode_trace, parse_scenario, read_log, run_lockstep, write_log, EndReason,
    Scenario,
};

fn straight_scenario(obstacle_x: Option<f64>) -> Scenario {
    let anchor = FrameAnchor::new(40.0, -83.0).unwrap();
    let geo = |x: f64, y: f64| local_to_geo(&LocalPose::new(x, y, 0.0, 0.0), &anchor).unwrap();
    let waypoints: Vec<String> = (0..=10)
        .map(|i| {
            let g = geo(i as f64 * 10.0, 0.0);
            format!(r#"{{"lat": {}, "lon": {}}}"#, g.lat, g.lon)
        })
        .collect();
    let obstacles = match obstacle_x {
        Some(x) => {
            let g = geo(x, 0.0);
            format!(
                r#"[{{"lat": {}, "lon": {}, "heading_deg": 90, "length": 4.5, "width": 1.9}}]"#,
                g.lat, g.lon
            )
        }
        None => "[]".to_owned(),
    };
    let text = format!(
        r#"{{"anchor": {{"lat": 40.0, "lon": -83.0}}, "waypoints": [{}], "obstacles": {}, "seed": 3, "max_duration": 60}}"#,
        waypoints.join(","),
        obstacles
    );
    parse_scenario(&text, Path::new(".")).unwrap()
}

#[test]
fn free_path_runs_to_the_end_and_stops() {
    let out = run_lockstep(&straight_scenario(None)).unwrap();
    let m = compute_metrics(&out.records, 0.05).unwrap();
    assert_eq!(out.end, EndReason::PathComplete, "{m}");
    assert!(m.path_completion >= 0.99, "{m}");
    assert!(m.stopped && !m.collided);
    assert!(m.max_abs_cross_track < 0.1, "{m}");
}

#[test]
fn obstacle_at_80m_brakes_and_holds_once() {
    // Rear face at 83.8 m, so the front bumper should stop near 78.8 m.
    let out = run_lockstep(&straight_scenario(Some(86.05))).unwrap();
    let m = compute_metrics(&out.records, 0.05).unwrap();
    assert_eq!(out.end, EndReason::Holding, "{m}");
    assert_eq!(
        mode_trace(&out.records),
        vec![Mode::Cruise, Mode::Braking, Mode::Hold]
    );
    assert!(!m.collided && m.stopped);
    let gap = m.final_gap.unwrap();
    assert!((4.5..=6.0).contains(&gap), "{gap}");
}

#[test]
fn ticks_and_time_are_uniform() {
    let out = run_lockstep(&straight_scenario(Some(60.0))).unwrap();
    for (i, r) in out.records.iter().enumerate() {
        assert_eq!(r.tick, i as u64);
        assert_eq!(r.t, i as f64 * 0.01);
    }
}

#[test]
fn same_seed_same_bytes() {
    let sc = straight_scenario(Some(60.0));
    let bytes = |sc: &Scenario| {
        let mut buf = Vec::new();
        write_log(&mut buf, &run_lockstep(sc).unwrap().records).unwrap();
        buf
    };
    let a = bytes(&sc);
    assert_eq!(a, bytes(&sc));
    let b = bytes(&sc.clone().with_seed(4));
    assert_ne!(a, b);
    let m = compute_metrics(&read_log(&b[..]).unwrap(), 0.05).unwrap();
    assert!(!m.collided);
}

#[test]
fn collision_flag_matches_footprint_overlap() {
    // Obstacle sits beside the start so the ego begins in contact with it.
    let mut sc = straight_scenario(Some(2.0));
    sc.obstacles[0].center.y = 1.0;
    let out = run_lockstep(&sc).unwrap();
    assert_eq!(out.end, EndReason::Collision);
    assert_eq!(out.records.len(), 1);
    assert!(compute_metrics(&out.records, 0.05).unwrap().collided);
}
