//! Fixed-layout little-endian datagrams. Every packet starts with the ASCII
//! magic `VVE1`, a one-byte message type, a 32-bit sequence number and a
//! 64-bit monotonic timestamp in microseconds, and ends with a CRC-32 (IEEE,
//! reflected) over all preceding bytes.

use thiserror::Error;

use crate::geoframe::GeoFix;
use crate::plant::ActuationCommand;
use crate::sensors::RadarDetection;

pub const MAGIC: [u8; 4] = *b"VVE1";
pub const HEADER_LEN: usize = 4 + 1 + 4 + 8;
pub const CRC_LEN: usize = 4;
pub const POSE_LEN: usize = HEADER_LEN + 4 * 8 + CRC_LEN;
pub const SENSOR_BASE_LEN: usize = HEADER_LEN + 4 * 8 + 1 + CRC_LEN;
pub const DETECTION_LEN: usize = 3 * 4;
pub const ACTUATION_LEN: usize = HEADER_LEN + 3 * 4 + CRC_LEN;

const TYPE_POSE: u8 = 1;
const TYPE_SENSOR: u8 = 2;
const TYPE_ACTUATION: u8 = 3;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bad magic")]
    BadMagic,
    #[error("bad length: expected {expected}, got {actual}")]
    BadLength { expected: usize, actual: usize },
    #[error("crc mismatch")]
    BadCrc,
    #[error("unknown message type {0}")]
    UnknownType(u8),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("too many detections: {0} (max 255)")]
    TooManyDetections(usize),
    #[error("field out of range: {0}")]
    OutOfRange(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePacket {
    pub seq: u32,
    pub t_mono_us: u64,
    pub fix: GeoFix,
}

/// Radar detection as carried on the wire (single precision).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireDetection {
    pub range: f32,
    pub range_rate: f32,
    pub azimuth: f32,
}

impl From<&RadarDetection> for WireDetection {
    fn from(d: &RadarDetection) -> Self {
        Self {
            range: d.range as f32,
            range_rate: d.range_rate as f32,
            azimuth: d.azimuth as f32,
        }
    }
}

impl From<&WireDetection> for RadarDetection {
    fn from(d: &WireDetection) -> Self {
        Self {
            range: d.range as f64,
            range_rate: d.range_rate as f64,
            azimuth: d.azimuth as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorPacket {
    pub seq: u32,
    pub t_mono_us: u64,
    pub fix: GeoFix,
    pub detections: Vec<WireDetection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationPacket {
    pub seq: u32,
    pub t_mono_us: u64,
    pub steer_cmd: f32,
    pub throttle: f32,
    pub brake: f32,
}

impl ActuationPacket {
    pub fn from_command(seq: u32, t_mono_us: u64, cmd: &ActuationCommand) -> Self {
        Self {
            seq,
            t_mono_us,
            steer_cmd: cmd.steer_cmd as f32,
            throttle: cmd.throttle as f32,
            brake: cmd.brake as f32,
        }
    }

    pub fn command(&self) -> ActuationCommand {
        ActuationCommand {
            steer_cmd: self.steer_cmd as f64,
            throttle: self.throttle as f64,
            brake: self.brake as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Pose(PosePacket),
    Sensor(SensorPacket),
    Actuation(ActuationPacket),
}

impl Packet {
    pub fn seq(&self) -> u32 {
        match self {
            Packet::Pose(p) => p.seq,
            Packet::Sensor(p) => p.seq,
            Packet::Actuation(p) => p.seq,
        }
    }

    pub fn t_mono_us(&self) -> u64 {
        match self {
            Packet::Pose(p) => p.t_mono_us,
            Packet::Sensor(p) => p.t_mono_us,
            Packet::Actuation(p) => p.t_mono_us,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, EncodeError> {
        match self {
            Packet::Pose(p) => {
                let mut w = Writer::new(TYPE_POSE, p.seq, p.t_mono_us, POSE_LEN);
                w.fix(&p.fix);
                Ok(w.finish())
            }
            Packet::Sensor(p) => {
                let n = p.detections.len();
                if n > u8::MAX as usize {
                    return Err(EncodeError::TooManyDetections(n));
                }
                let len = SENSOR_BASE_LEN + DETECTION_LEN * n;
                let mut w = Writer::new(TYPE_SENSOR, p.seq, p.t_mono_us, len);
                w.fix(&p.fix);
                w.buf.push(n as u8);
                for d in &p.detections {
                    w.f32(d.range);
                    w.f32(d.range_rate);
                    w.f32(d.azimuth);
                }
                Ok(w.finish())
            }
            Packet::Actuation(p) => {
                if !(0.0..=1.0).contains(&p.throttle) || !(0.0..=1.0).contains(&p.brake) {
                    return Err(EncodeError::OutOfRange(
                        "throttle and brake must be in [0, 1]",
                    ));
                }
                let mut w = Writer::new(TYPE_ACTUATION, p.seq, p.t_mono_us, ACTUATION_LEN);
                w.f32(p.steer_cmd);
                w.f32(p.throttle);
                w.f32(p.brake);
                Ok(w.finish())
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Packet, DecodeError> {
        if bytes.len() < 5 {
            return Err(DecodeError::BadLength {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        if bytes[..4] != MAGIC {
            return Err(DecodeError::BadMagic);
        }
        let kind = bytes[4];
        let expected = match kind {
            TYPE_POSE => POSE_LEN,
            TYPE_ACTUATION => ACTUATION_LEN,
            TYPE_SENSOR => {
                let count_at = SENSOR_BASE_LEN - CRC_LEN - 1;
                match bytes.get(count_at) {
                    Some(&n) => SENSOR_BASE_LEN + DETECTION_LEN * n as usize,
                    None => {
                        return Err(DecodeError::BadLength {
                            expected: SENSOR_BASE_LEN,
                            actual: bytes.len(),
                        })
                    }
                }
            }
            other => return Err(DecodeError::UnknownType(other)),
        };
        if bytes.len() != expected {
            return Err(DecodeError::BadLength {
                expected,
                actual: bytes.len(),
            });
        }
        let (body, tail) = bytes.split_at(expected - CRC_LEN);
        let crc = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != crc {
            return Err(DecodeError::BadCrc);
        }

        let mut r = Reader { buf: body, pos: 5 };
        let seq = r.u32();
        let t_mono_us = r.u64();
        Ok(match kind {
            TYPE_POSE => Packet::Pose(PosePacket {
                seq,
                t_mono_us,
                fix: r.fix(),
            }),
            TYPE_SENSOR => {
                let fix = r.fix();
                let n = r.u8() as usize;
                let detections = (0..n)
                    .map(|_| WireDetection {
                        range: r.f32(),
                        range_rate: r.f32(),
                        azimuth: r.f32(),
                    })
                    .collect();
                Packet::Sensor(SensorPacket {
                    seq,
                    t_mono_us,
                    fix,
                    detections,
                })
            }
            _ => Packet::Actuation(ActuationPacket {
                seq,
                t_mono_us,
                steer_cmd: r.f32(),
                throttle: r.f32(),
                brake: r.f32(),
            }),
        })
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: u8, seq: u32, t_mono_us: u64, len: usize) -> Self {
        let mut buf = Vec::with_capacity(len);
        buf.extend_from_slice(&MAGIC);
        buf.push(kind);
        buf.extend_from_slice(&seq.to_le_bytes());
        buf.extend_from_slice(&t_mono_us.to_le_bytes());
        Self { buf }
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn fix(&mut self, fix: &GeoFix) {
        self.f64(fix.lat);
        self.f64(fix.lon);
        self.f64(fix.heading);
        self.f64(fix.speed);
    }

    fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn fix(&mut self) -> GeoFix {
        GeoFix {
            lat: self.f64(),
            lon: self.f64(),
            heading: self.f64(),
            speed: self.f64(),
        }
    }
}
