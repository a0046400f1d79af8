//! Opportunistic networking over public-transit bus fleets.
//!
//! The crate is organised as a three stage pipeline plus the routing machinery
//! that sits between the stages:
//!
//! * [`feed`] turns a transit feed (or a synthetic city) into closed bus lines
//!   and a planar street topology.
//! * [`mobility`] replays a full service day at one second resolution and logs
//!   every radio contact between buses.
//! * [`contacts`] computes contact analytics from a trace.
//! * [`encounter`] learns line-to-line encounter probabilities and builds
//!   routing tables over the line graph.
//! * [`routing`] holds the forwarding policies.
//! * [`traffic`] runs data traffic over a trace under bandwidth and buffer
//!   limits and collects delivery metrics.

pub mod contacts;
pub mod encounter;
pub mod feed;
pub mod geometry;
pub mod ids;
pub mod mobility;
pub mod provenance;
pub mod rng;
pub mod routing;
pub mod traffic;

pub use ids::{BusId, LineId, PacketId, PathId};

/// Seconds since midnight of the simulated service day.
pub type Tick = u32;
