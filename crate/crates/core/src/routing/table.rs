use super::{CopyMode, Encounter, Justification, PacketView, PolicyDecision, RoutingPolicy};
use crate::encounter::{approx_eq, RoutingTable};

/// Single-copy line-level routing over a precomputed table.
///
/// The carrier hands a packet over when the peer's line is the destination,
/// the designated next hop, or strictly closer to the destination than the
/// designated next hop. An unreachable destination counts as infinitely far,
/// so any peer line with a route is an improvement. Buses of the same line
/// never exchange packets.
#[derive(Debug, Clone)]
pub struct TablePolicy {
    name: String,
    table: RoutingTable,
}

impl TablePolicy {
    pub fn new(name: &str, table: RoutingTable) -> Self {
        TablePolicy {
            name: name.to_string(),
            table,
        }
    }

    pub fn table(&self) -> &RoutingTable {
        &self.table
    }
}

impl RoutingPolicy for TablePolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn copy_mode(&self) -> CopyMode {
        CopyMode::SingleCopy
    }

    fn decide(&self, packet: &PacketView, enc: &Encounter) -> PolicyDecision {
        let dest = packet.dest_line;
        if enc.peer_line == dest {
            return PolicyDecision::forward(Justification::Destination);
        }
        if enc.peer_line == enc.carrier_line {
            return PolicyDecision::HOLD;
        }
        let next = self.table.next_hop(enc.carrier_line, dest);
        if next == Some(enc.peer_line) {
            return PolicyDecision::forward(Justification::DesignatedNextHop);
        }
        let Some(peer_w) = self.table.distance(enc.peer_line, dest) else {
            return PolicyDecision::HOLD;
        };
        let better = match next.and_then(|n| self.table.distance(n, dest)) {
            Some(ref_w) => peer_w < ref_w && !approx_eq(peer_w, ref_w),
            None => true,
        };
        if better {
            PolicyDecision::forward(Justification::OpportunisticImprovement)
        } else {
            PolicyDecision::HOLD
        }
    }
}
