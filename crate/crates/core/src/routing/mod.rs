//! Forwarding policies behind one decision interface.
//!
//! The traffic engine asks the carrier's policy what to do with each buffered
//! packet when the carrier meets another bus. Table-driven single-copy
//! policies (Op-HOP, minimum hop, Shanghai) differ only in the routing table
//! they consult; epidemic routing copies to every bus that has not seen the
//! packet.
//!
//! Contract: a `Hold` for a given (packet, carrier, peer) must stay `Hold`
//! until the packet moves. The engine relies on this to scan each buffer
//! only once per directed bus pair.

mod epidemic;
mod table;
mod tables;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{BusId, LineId, PacketId, Tick};

pub use epidemic::EpidemicPolicy;
pub use table::TablePolicy;
pub use tables::{PolicyTables, TABLES_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Move the packet to the peer.
    Forward,
    /// Give the peer a copy and keep the original.
    Replicate,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Justification {
    /// The peer belongs to the destination line.
    Destination,
    DesignatedNextHop,
    OpportunisticImprovement,
    EpidemicCopy,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub action: Action,
    pub justification: Justification,
}

impl PolicyDecision {
    pub const HOLD: PolicyDecision = PolicyDecision {
        action: Action::Hold,
        justification: Justification::None,
    };

    pub fn forward(justification: Justification) -> Self {
        PolicyDecision {
            action: Action::Forward,
            justification,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopyMode {
    SingleCopy,
    MultiCopy,
}

/// What a policy may look at when deciding about one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketView {
    pub id: PacketId,
    pub source_line: LineId,
    pub dest_line: LineId,
    pub created_at: Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Encounter {
    pub tick: Tick,
    pub carrier: BusId,
    pub carrier_line: LineId,
    pub peer: BusId,
    pub peer_line: LineId,
}

pub trait RoutingPolicy {
    fn name(&self) -> &str;

    fn copy_mode(&self) -> CopyMode;

    fn decide(&self, packet: &PacketView, encounter: &Encounter) -> PolicyDecision;

    /// The packet was generated on `bus`.
    fn on_packet_created(&mut self, _packet: PacketId, _bus: BusId) {}

    /// `bus` received the packet (or a copy), by contact or handoff.
    fn on_packet_received(&mut self, _packet: PacketId, _bus: BusId) {}

    /// First arrival of the packet at its destination line.
    fn on_delivery(&mut self, _packet: PacketId, _bus: BusId, _tick: Tick) {}
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoutingError {
    #[error("unknown policy {name:?}; registered policies: {}", known.join(", "))]
    UnknownPolicy { name: String, known: Vec<String> },
}

pub const POLICY_NAMES: [&str; 4] = ["ophop", "minhop", "epidemic", "shanghai"];

/// Builds a registered policy by name. `buses` is the number of buses in the
/// trace (dense ids).
pub fn build_policy(
    name: &str,
    tables: &PolicyTables,
    buses: usize,
) -> Result<Box<dyn RoutingPolicy>, RoutingError> {
    match name {
        "ophop" => Ok(Box::new(TablePolicy::new("ophop", tables.ophop.clone()))),
        "minhop" => Ok(Box::new(TablePolicy::new("minhop", tables.minhop.clone()))),
        "shanghai" => Ok(Box::new(TablePolicy::new(
            "shanghai",
            tables.shanghai.clone(),
        ))),
        "epidemic" => Ok(Box::new(EpidemicPolicy::new(buses))),
        _ => Err(RoutingError::UnknownPolicy {
            name: name.to_string(),
            known: POLICY_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}
