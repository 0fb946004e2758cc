use vve_core::guidance::Mode;
use vve_core::harness::{
    compute_metrics, load_scenario, mode_trace, run_lockstep, run_networked, ControllerConfig,
    EndReason, Pacing, Scenario, WorldConfig,
};

fn reference() -> Scenario {
    load_scenario(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/reference.json"
    ))
    .unwrap()
}

fn fast() -> WorldConfig {
    WorldConfig {
        pacing: Pacing::Fast,
        ..WorldConfig::default()
    }
}

#[test]
fn ideal_link_matches_lockstep() {
    let sc = reference();
    let lock = compute_metrics(&run_lockstep(&sc).unwrap().records, 0.05).unwrap();
    let net = run_networked(&sc, &fast(), &ControllerConfig::default()).unwrap();
    let m = compute_metrics(&net.run.records, 0.05).unwrap();
    assert!(!m.collided && m.stopped);
    assert!(
        (m.final_gap.unwrap() - lock.final_gap.unwrap()).abs() <= 0.3,
        "{m}\n{lock}"
    );
    assert_eq!(
        mode_trace(&net.run.records),
        vec![Mode::Cruise, Mode::Braking, Mode::Hold]
    );
    assert_eq!(net.world.watchdog_trips, 0);
}

#[test]
fn lossy_delayed_link_still_stops_safely() {
    let mut sc = reference();
    sc.link.loss_prob = 0.05;
    sc.link.latency_ms = 50.0;
    sc.link.jitter_ms = 10.0;
    let net = run_networked(&sc, &fast(), &ControllerConfig::default()).unwrap();
    let m = compute_metrics(&net.run.records, 0.05).unwrap();
    assert!(!m.collided);
    let gap = m.final_gap.unwrap();
    assert!((4.5..=7.0).contains(&gap), "{gap}");
    assert!(net.world.pose.dropped > 0 && net.world.actuation.dropped > 0);
}

#[test]
fn silent_controller_triggers_failsafe_stop() {
    let sc = reference();
    let ctrl = ControllerConfig {
        halt_at: Some(10.0),
        ..ControllerConfig::default()
    };
    let net = run_networked(&sc, &fast(), &ctrl).unwrap();
    assert!(net.controller.halted);
    assert!(net.world.controller_lost_at.is_some());
    assert_eq!(net.run.end, EndReason::Holding);
    let last = net.run.records.last().unwrap();
    assert_eq!(last.mode, Some(Mode::Failsafe));
    assert_eq!(last.brake, 1.0);
    let m = compute_metrics(&net.run.records, 0.05).unwrap();
    assert!(m.stopped && !m.collided);
    assert!(m.path_completion < 0.5);
}
