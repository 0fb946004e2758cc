//! Wire protocol between the simulator and the controller, plus a seeded
//! network impairment model.

mod impair;
mod packet;
mod seq;

pub use impair::{link_impair, LinkImpairer, LinkParams, LinkParamsError, TimedPacket};
pub use packet::{
    ActuationPacket, DecodeError, EncodeError, Packet, PosePacket, SensorPacket, WireDetection,
    ACTUATION_LEN, DETECTION_LEN, MAGIC, POSE_LEN, SENSOR_BASE_LEN,
};
pub use seq::{endpoint_recv, seq_newer, SeqWindow};
