//! Vehicle-in-virtual-environment co-simulation.
//!
//! A stand-in vehicle ([`plant`]) is mirrored into a planar virtual world
//! ([`world`]) through the anchored geodetic frame ([`geoframe`]). Virtual GPS
//! and radar ([`sensors`]) are sampled from the world and fed back to the
//! controller ([`guidance`]) over a datagram protocol ([`bridge`]). The
//! [`harness`] wires the loop together, either single-process in lockstep or
//! as two endpoints over UDP, and [`sweep`] runs batches of scenarios.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod geoframe;
pub mod guidance;
pub mod harness;
pub mod plant;
pub mod sensors;
pub mod sweep;
pub mod world;
