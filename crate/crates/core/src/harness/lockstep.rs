use super::scenario::Scenario;
use super::sim::{frame_from_packet, us, RunError, RunOutput, Terminator, WorldSide, SENSOR_EVERY};
use crate::bridge::{ActuationPacket, Packet};
use crate::guidance::{Guidance, GuidanceState};
use crate::plant::ActuationCommand;

fn wire(p: Packet) -> Result<Packet, RunError> {
    Ok(Packet::decode(&p.encode()?)?)
}

/// Single-threaded deterministic run. Every packet still goes through
/// encode and decode so the data path matches the networked mode.
///
/// Tick order: plant step with the previous command, pose packet, twin
/// update, sensor sampling, sensor packet and guidance, command stored for
/// the next tick, log.
pub fn run_lockstep(sc: &Scenario) -> Result<RunOutput, RunError> {
    let guidance = Guidance::new(sc.anchor, sc.guidance, sc.plant).with_path(sc.path.clone());
    let dt = sc.plant.dt;
    let sensor_dt = SENSOR_EVERY as f64 * dt;
    let mut ws = WorldSide::new(sc)?;
    let mut term = Terminator::new(sc);
    let mut cmd = ActuationCommand::default();
    let mut gstate = GuidanceState::default();
    let mut act_seq = 0u32;
    let mut records = Vec::new();

    for tick in 0.. {
        let t_us = us(tick as f64 * dt);
        if tick > 0 {
            ws.step_plant(&cmd);
        }
        match wire(ws.pose_packet(t_us)?)? {
            Packet::Pose(p) => ws.apply_pose(&p)?,
            _ => return Err(RunError::WrongPacket("pose")),
        }
        ws.sample_sensors(tick)?;
        if tick.is_multiple_of(SENSOR_EVERY) {
            let Packet::Sensor(sp) = wire(ws.sensor_packet(t_us))? else {
                return Err(RunError::WrongPacket("sensor"));
            };
            let out = guidance.step(&frame_from_packet(&sp, 0.0), &gstate, sensor_dt)?;
            gstate = out.state;
            act_seq = act_seq.wrapping_add(1);
            let act = Packet::Actuation(ActuationPacket::from_command(
                act_seq,
                sp.t_mono_us,
                &out.command,
            ));
            let Packet::Actuation(ap) = wire(act)? else {
                return Err(RunError::WrongPacket("actuation"));
            };
            cmd = ap.command();
        }
        let rec = ws.record(tick, Some(gstate.mode), &cmd);
        let end = term.update(&rec);
        records.push(rec);
        if let Some(end) = end {
            return Ok(RunOutput { records, end });
        }
    }
    unreachable!()
}
