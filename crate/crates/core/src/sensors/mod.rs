//! Virtual sensors sampled from the [`World`](crate::world::World): a
//! ray-casting radar and a noisy GPS.

mod gps;
mod radar;

pub use gps::{gps_sample, GpsParams, GpsRng};
pub use radar::{radar_scan, ray_rect_intersect, RadarDetection, RadarParams, SensorError};
