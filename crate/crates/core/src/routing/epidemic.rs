use super::{
    Action, CopyMode, Encounter, Justification, PacketView, PolicyDecision, RoutingPolicy,
};
use crate::{BusId, PacketId};

/// Flooding: copy to every bus that has not held the packet yet.
///
/// Seen sets are bitsets over dense bus ids, one per packet, grown on demand.
#[derive(Debug, Clone, Default)]
pub struct EpidemicPolicy {
    words: usize,
    seen: Vec<Vec<u64>>,
}

impl EpidemicPolicy {
    pub fn new(buses: usize) -> Self {
        EpidemicPolicy {
            words: buses.div_ceil(64).max(1),
            seen: Vec::new(),
        }
    }

    pub fn has_seen(&self, packet: PacketId, bus: BusId) -> bool {
        self.seen
            .get(packet.index())
            .and_then(|s| s.get(bus.index() / 64))
            .is_some_and(|w| w & (1u64 << (bus.index() % 64)) != 0)
    }

    fn mark(&mut self, packet: PacketId, bus: BusId) {
        if self.seen.len() <= packet.index() {
            self.seen.resize(packet.index() + 1, Vec::new());
        }
        let set = &mut self.seen[packet.index()];
        let word = bus.index() / 64;
        if set.len() <= word {
            set.resize(self.words.max(word + 1), 0);
        }
        set[word] |= 1u64 << (bus.index() % 64);
    }
}

impl RoutingPolicy for EpidemicPolicy {
    fn name(&self) -> &str {
        "epidemic"
    }

    fn copy_mode(&self) -> CopyMode {
        CopyMode::MultiCopy
    }

    fn decide(&self, packet: &PacketView, enc: &Encounter) -> PolicyDecision {
        if self.has_seen(packet.id, enc.peer) {
            return PolicyDecision::HOLD;
        }
        PolicyDecision {
            action: Action::Replicate,
            justification: if enc.peer_line == packet.dest_line {
                Justification::Destination
            } else {
                Justification::EpidemicCopy
            },
        }
    }

    fn on_packet_created(&mut self, packet: PacketId, bus: BusId) {
        self.mark(packet, bus);
    }

    fn on_packet_received(&mut self, packet: PacketId, bus: BusId) {
        self.mark(packet, bus);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LineId;

    #[test]
    fn copies_until_seen() {
        let mut p = EpidemicPolicy::new(100);
        let pkt = PacketView {
            id: PacketId(3),
            source_line: LineId(0),
            dest_line: LineId(5),
            created_at: 0,
        };
        let enc = Encounter {
            tick: 0,
            carrier: BusId(0),
            carrier_line: LineId(0),
            peer: BusId(70),
            peer_line: LineId(1),
        };
        p.on_packet_created(PacketId(3), BusId(0));
        let d = p.decide(&pkt, &enc);
        assert_eq!(d.action, Action::Replicate);
        assert_eq!(d.justification, Justification::EpidemicCopy);
        p.on_packet_received(PacketId(3), BusId(70));
        assert_eq!(p.decide(&pkt, &enc), PolicyDecision::HOLD);
        assert!(!p.has_seen(PacketId(4), BusId(70)));
    }
}
