//! Two-endpoint mode: the world side (plant, virtual world, sensors) and the
//! controller side (guidance) exchange real UDP datagrams. Link impairment is
//! applied by the world side in simulation time, to outbound pose and sensor
//! traffic and to inbound actuation traffic.

use std::collections::HashMap;
use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use super::scenario::Scenario;
use super::sim::{frame_from_packet, us, RunError, RunOutput, Terminator, WorldSide, SENSOR_EVERY};
use crate::bridge::{endpoint_recv, ActuationPacket, LinkImpairer, Packet, SeqWindow};
use crate::guidance::{Guidance, GuidanceState, Mode};
use crate::plant::ActuationCommand;

pub const DEFAULT_POSE_PORT: u16 = 47001;
pub const DEFAULT_SENSOR_PORT: u16 = 47002;
pub const DEFAULT_ACTUATION_PORT: u16 = 47003;

const POSE_LINK: u64 = 1;
const SENSOR_LINK: u64 = 2;
const ACTUATION_LINK: u64 = 3;
const MAX_DATAGRAM: usize = 2048;
const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pacing {
    /// One simulation tick per `dt` of wall time.
    RealTime,
    /// Run as fast as the controller answers.
    Fast,
}

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub pacing: Pacing,
    /// Where the pose stream from the plant is received.
    pub pose_bind: SocketAddr,
    /// How long to wait for the controller's first packet.
    pub connect_timeout: Duration,
    /// In fast mode, how long to wait for the answer to one sensor packet
    /// before treating the controller as gone.
    pub reply_timeout: Duration,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            pacing: Pacing::RealTime,
            pose_bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            connect_timeout: Duration::from_secs(10),
            reply_timeout: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Give up if nothing arrives from the world for this long.
    pub idle_timeout: Duration,
    /// Go silent once sensor data stamped at or after this time arrives.
    pub halt_at: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            idle_timeout: Duration::from_secs(3),
            halt_at: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub submitted: u64,
    pub dropped: u64,
    pub accepted: u64,
    pub stale: u64,
    pub corrupt: u64,
}

#[derive(Debug, Clone, Default)]
pub struct WorldStats {
    pub pose: LinkStats,
    pub sensor: LinkStats,
    pub actuation: LinkStats,
    /// Simulation time at which the controller stopped answering.
    pub controller_lost_at: Option<f64>,
    pub watchdog_trips: u64,
}

#[derive(Debug, Clone)]
pub struct WorldOutput {
    pub run: RunOutput,
    pub stats: WorldStats,
    /// Sensor timestamp echoed by the actuation in effect at each tick.
    pub applied_stamp: Vec<Option<u64>>,
}

#[derive(Debug, Clone, Default)]
pub struct ControllerReport {
    /// Mode after each guidance step, keyed by the sensor timestamp.
    pub trace: Vec<(u64, Mode)>,
    pub sensors: LinkStats,
    pub halted: bool,
}

#[derive(Debug, Clone)]
pub struct NetOutput {
    pub run: RunOutput,
    pub world: WorldStats,
    pub controller: ControllerReport,
}

fn would_block(e: &std::io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut)
}

/// Reads every datagram already queued on `sock`.
fn drain(sock: &UdpSocket, buf: &mut [u8]) -> std::io::Result<Vec<(Vec<u8>, SocketAddr)>> {
    sock.set_nonblocking(true)?;
    let mut out = Vec::new();
    loop {
        match sock.recv_from(buf) {
            Ok((n, from)) => out.push((buf[..n].to_vec(), from)),
            Err(e) if would_block(&e) => break,
            Err(e) if e.kind() == ErrorKind::ConnectionReset => continue,
            Err(e) => {
                sock.set_nonblocking(false)?;
                return Err(e);
            }
        }
    }
    sock.set_nonblocking(false)?;
    Ok(out)
}

fn recv_timeout(
    sock: &UdpSocket,
    buf: &mut [u8],
    timeout: Duration,
) -> std::io::Result<Option<(usize, SocketAddr)>> {
    sock.set_read_timeout(Some(timeout.max(Duration::from_micros(1))))?;
    match sock.recv_from(buf) {
        Ok(r) => Ok(Some(r)),
        Err(e) if would_block(&e) || e.kind() == ErrorKind::ConnectionReset => Ok(None),
        Err(e) => Err(e),
    }
}

fn link_stats(link: &LinkImpairer<impl Sized>, window: &SeqWindow) -> LinkStats {
    LinkStats {
        submitted: link.submitted(),
        dropped: link.dropped(),
        accepted: window.accepted(),
        stale: window.stale(),
        corrupt: window.corrupt(),
    }
}

/// Timestamp echoed by an actuation packet; handshakes (sequence 0) have none.
fn actuation_stamp(raw: &[u8]) -> Option<u64> {
    match Packet::decode(raw) {
        Ok(Packet::Actuation(a)) if a.seq != 0 => Some(a.t_mono_us),
        _ => None,
    }
}

/// The simulator endpoint. `act_sock` receives actuation packets; sensor
/// packets go back to whichever address the controller sends from.
pub fn run_world(
    sc: &Scenario,
    act_sock: &UdpSocket,
    cfg: &WorldConfig,
) -> Result<WorldOutput, RunError> {
    let mut buf = [0u8; MAX_DATAGRAM];

    // Wait for the controller to announce itself.
    let deadline = Instant::now() + cfg.connect_timeout;
    let controller = loop {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() {
            return Err(RunError::NoPeer("controller"));
        }
        if let Some((n, from)) = recv_timeout(act_sock, &mut buf, left.min(POLL))? {
            if matches!(Packet::decode(&buf[..n]), Ok(Packet::Actuation(_))) {
                break from;
            }
        }
    };

    let pose_rx = UdpSocket::bind(cfg.pose_bind)?;
    let pose_tx = UdpSocket::bind(SocketAddr::new(pose_rx.local_addr()?.ip(), 0))?;
    pose_tx.connect(pose_rx.local_addr()?)?;

    let dt = sc.plant.dt;
    let t_stale = sc.guidance.t_stale;
    let mut pose_link = LinkImpairer::new(sc.link.for_link(POSE_LINK));
    let mut sensor_link = LinkImpairer::new(sc.link.for_link(SENSOR_LINK));
    let mut act_link = LinkImpairer::new(sc.link.for_link(ACTUATION_LINK));
    let mut pose_win = SeqWindow::new();
    // Handshake packets carry sequence 0 and are never applied.
    let mut act_win = SeqWindow::starting_at(0);

    let mut ws = WorldSide::new(sc)?;
    let mut term = Terminator::new(sc);
    let mut stats = WorldStats::default();
    let mut records = Vec::new();
    let mut applied_stamp = Vec::new();
    let mut cmd = ActuationCommand::default();
    let mut stamp: Option<u64> = None;
    let mut last_act_t = 0.0;
    let mut failsafe = false;
    let start = Instant::now();

    for tick in 0u64.. {
        let t = tick as f64 * dt;
        let t_us = us(t);
        if cfg.pacing == Pacing::RealTime {
            let due = start + Duration::from_secs_f64(t);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }

        if tick > 0 {
            if t - last_act_t > t_stale + 1e-9 {
                if !failsafe {
                    stats.watchdog_trips += 1;
                }
                failsafe = true;
                cmd = ActuationCommand::full_brake(cmd.steer_cmd);
            }
            ws.step_plant(&cmd);
        }

        // Plant to world over the pose link.
        pose_link.submit(t_us, ws.pose_packet(t_us)?.encode()?);
        let due = pose_link.poll(t_us);
        for p in &due {
            pose_tx.send(&p.payload)?;
        }
        let mut got = 0;
        while got < due.len() {
            let Some((n, _)) = recv_timeout(&pose_rx, &mut buf, Duration::from_millis(100))? else {
                break;
            };
            got += 1;
            if let Ok(Some(Packet::Pose(p))) = endpoint_recv(&buf[..n], &mut pose_win) {
                ws.apply_pose(&p)?;
            }
        }

        ws.sample_sensors(tick)?;

        // World to controller over the sensor link.
        if tick.is_multiple_of(SENSOR_EVERY) {
            let bytes = ws.sensor_packet(t_us).encode()?;
            sensor_link.submit(t_us, (t_us, bytes));
        }
        let mut replies: Vec<Vec<u8>> = Vec::new();
        for p in sensor_link.poll(t_us) {
            let (stamp_us, bytes) = p.payload;
            act_sock.send_to(&bytes, controller)?;
            if cfg.pacing == Pacing::Fast && stats.controller_lost_at.is_none() {
                let deadline = Instant::now() + cfg.reply_timeout;
                loop {
                    let left = deadline.saturating_duration_since(Instant::now());
                    let got = if left.is_zero() {
                        None
                    } else {
                        recv_timeout(act_sock, &mut buf, left)?
                    };
                    let Some((n, _)) = got else {
                        stats.controller_lost_at = Some(t);
                        break;
                    };
                    replies.push(buf[..n].to_vec());
                    if actuation_stamp(&buf[..n]) == Some(stamp_us) {
                        break;
                    }
                }
            }
        }
        replies.extend(drain(act_sock, &mut buf)?.into_iter().map(|(b, _)| b));

        // Controller to plant over the actuation link.
        for raw in replies {
            act_link.submit(t_us, raw);
        }
        for p in act_link.poll(t_us) {
            if let Ok(Some(Packet::Actuation(a))) = endpoint_recv(&p.payload, &mut act_win) {
                cmd = a.command();
                stamp = Some(a.t_mono_us);
                last_act_t = t;
                failsafe = false;
            }
        }

        let rec = ws.record(tick, failsafe.then_some(Mode::Failsafe), &cmd);
        applied_stamp.push(if failsafe { None } else { stamp });
        let end = term.update(&rec);
        records.push(rec);
        if let Some(end) = end {
            stats.pose = link_stats(&pose_link, &pose_win);
            stats.sensor = LinkStats {
                submitted: sensor_link.submitted(),
                dropped: sensor_link.dropped(),
                ..LinkStats::default()
            };
            stats.actuation = link_stats(&act_link, &act_win);
            return Ok(WorldOutput {
                run: RunOutput { records, end },
                stats,
                applied_stamp,
            });
        }
    }
    unreachable!()
}

/// The controller endpoint: announces itself to `world`, then answers every
/// accepted sensor packet with one actuation packet echoing its timestamp.
pub fn run_controller(
    sc: &Scenario,
    sock: &UdpSocket,
    world: SocketAddr,
    cfg: &ControllerConfig,
    stop: Option<&AtomicBool>,
) -> Result<ControllerReport, RunError> {
    let guidance = Guidance::new(sc.anchor, sc.guidance, sc.plant).with_path(sc.path.clone());
    let sensor_dt = SENSOR_EVERY as f64 * sc.plant.dt;
    let mut buf = [0u8; MAX_DATAGRAM];
    let mut window = SeqWindow::new();
    let mut state = GuidanceState::default();
    let mut report = ControllerReport::default();
    let mut seq = 0u32;
    let mut last_stamp: Option<u64> = None;
    let mut last_rx = Instant::now();
    let mut last_hello: Option<Instant> = None;
    let stopped = || stop.is_some_and(|s| s.load(Ordering::Relaxed));
    let halt_us = cfg.halt_at.map(us);

    loop {
        if stopped() {
            break;
        }
        if last_stamp.is_none()
            && last_hello.is_none_or(|h| h.elapsed() >= Duration::from_millis(100))
        {
            let hello = Packet::Actuation(ActuationPacket::from_command(
                0,
                0,
                &ActuationCommand::full_brake(0.0),
            ));
            sock.send_to(&hello.encode()?, world)?;
            last_hello = Some(Instant::now());
        }
        let Some((n, from)) = recv_timeout(sock, &mut buf, POLL)? else {
            if last_rx.elapsed() > cfg.idle_timeout {
                if last_stamp.is_none() {
                    return Err(RunError::NoPeer("world"));
                }
                break;
            }
            continue;
        };
        last_rx = Instant::now();
        let Ok(Some(Packet::Sensor(sp))) = endpoint_recv(&buf[..n], &mut window) else {
            continue;
        };
        if halt_us.is_some_and(|h| sp.t_mono_us >= h) {
            report.halted = true;
            break;
        }
        let dt = last_stamp.map_or(sensor_dt, |prev| {
            (sp.t_mono_us.saturating_sub(prev) as f64 * 1e-6).max(sensor_dt)
        });
        last_stamp = Some(sp.t_mono_us);
        let out = guidance.step(&frame_from_packet(&sp, 0.0), &state, dt)?;
        state = out.state;
        seq = seq.wrapping_add(1);
        let act = Packet::Actuation(ActuationPacket::from_command(
            seq,
            sp.t_mono_us,
            &out.command,
        ));
        sock.send_to(&act.encode()?, from)?;
        report.trace.push((sp.t_mono_us, state.mode));
    }
    report.sensors = LinkStats {
        accepted: window.accepted(),
        stale: window.stale(),
        corrupt: window.corrupt(),
        ..LinkStats::default()
    };
    Ok(report)
}

/// Fills in the controller's mode for every tick whose command came from a
/// known sensor timestamp.
pub fn overlay_modes(out: &mut WorldOutput, trace: &[(u64, Mode)]) {
    let modes: HashMap<u64, Mode> = trace.iter().copied().collect();
    for (rec, stamp) in out.run.records.iter_mut().zip(&out.applied_stamp) {
        if rec.mode.is_none() {
            rec.mode = stamp.and_then(|s| modes.get(&s).copied());
        }
    }
}

/// Runs both endpoints in one process on loopback, each on its own thread.
pub fn run_networked(
    sc: &Scenario,
    world_cfg: &WorldConfig,
    ctrl_cfg: &ControllerConfig,
) -> Result<NetOutput, RunError> {
    let loopback = SocketAddr::from(([127, 0, 0, 1], 0));
    let act_sock = UdpSocket::bind(loopback)?;
    let ctrl_sock = UdpSocket::bind(loopback)?;
    let world_addr = act_sock.local_addr()?;
    let stop = AtomicBool::new(false);

    let (world, controller) = std::thread::scope(|s| {
        let ctrl = s.spawn(|| run_controller(sc, &ctrl_sock, world_addr, ctrl_cfg, Some(&stop)));
        let world = run_world(sc, &act_sock, world_cfg);
        stop.store(true, Ordering::Relaxed);
        (world, ctrl.join().expect("controller thread panicked"))
    });
    let mut world = world?;
    let controller = controller?;
    overlay_modes(&mut world, &controller.trace);
    Ok(NetOutput {
        run: world.run,
        world: world.stats,
        controller,
    })
}
