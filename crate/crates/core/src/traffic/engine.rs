use std::collections::HashMap;

use super::buffer::{Buffer, Slot};
use super::report::{BufferSample, EngineCounters, MetricsReport};
use super::{
    Disposition, DropReason, Hop, HopKind, Packet, PacketSpec, TrafficConfig, TrafficOutcome,
};
use crate::mobility::MobilityTrace;
use crate::routing::{
    Action, CopyMode, Encounter, Justification, PacketView, PolicyDecision, RoutingPolicy,
};
use crate::{BusId, PacketId, Tick};

/// Runs `policy` over the trace with the given pre-generated packets, which
/// must be sorted by `(created_at, source_bus)` and carry dense ids.
pub fn simulate(
    trace: &MobilityTrace,
    policy: &mut dyn RoutingPolicy,
    config: &TrafficConfig,
    packets: &[PacketSpec],
) -> TrafficOutcome {
    let mut engine = Engine::new(trace, policy, config, packets);
    engine.run();
    engine.finish()
}

enum Send {
    Sent,
    /// Receiver full; the direction stops for this tick.
    Blocked,
    /// Nothing (more) eligible in the sender's buffer.
    Exhausted,
}

struct Engine<'a> {
    trace: &'a MobilityTrace,
    policy: &'a mut dyn RoutingPolicy,
    config: &'a TrafficConfig,
    multi: bool,
    size: u64,
    packets: Vec<Packet>,
    /// Buses currently holding a copy of each packet.
    holders: Vec<Vec<BusId>>,
    buffers: Vec<Buffer>,
    /// Next sequence number to examine per directed pair `(carrier, peer)`.
    cursors: HashMap<(BusId, BusId), u64>,
    counters: EngineCounters,
    samples: Vec<BufferSample>,
}

impl<'a> Engine<'a> {
    fn new(
        trace: &'a MobilityTrace,
        policy: &'a mut dyn RoutingPolicy,
        config: &'a TrafficConfig,
        specs: &[PacketSpec],
    ) -> Self {
        let multi = policy.copy_mode() == CopyMode::MultiCopy;
        let packets = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                assert_eq!(s.packet_id.index(), i, "packet ids must be dense");
                Packet {
                    spec: *s,
                    size: config.packet_size,
                    hop_trace: Vec::new(),
                    disposition: Disposition::InFlight,
                    hops: 0,
                    copies: 0,
                }
            })
            .collect();
        Engine {
            trace,
            policy,
            config,
            multi,
            size: u64::from(config.packet_size),
            packets,
            holders: vec![Vec::new(); specs.len()],
            buffers: vec![Buffer::default(); trace.buses.len()],
            cursors: HashMap::new(),
            counters: EngineCounters::default(),
            samples: Vec::new(),
        }
    }

    fn run(&mut self) {
        let trace = self.trace;
        let mut retirements: Vec<(Tick, BusId)> =
            trace.buses.iter().map(|b| (b.retired_at, b.bus_id)).collect();
        retirements.sort_unstable();
        let mut contacts: Vec<(Tick, Tick, BusId, BusId)> = trace
            .contacts
            .iter()
            .map(|c| (c.start, c.end, c.bus_a, c.bus_b))
            .collect();
        contacts.sort_unstable();

        let first_packet = self.packets.first().map_or(Tick::MAX, |p| p.spec.created_at);
        let start = trace.start.min(first_packet);
        let end = trace.end;
        let (mut next_pkt, mut next_contact, mut next_ret) = (0usize, 0usize, 0usize);
        let mut active: Vec<(BusId, BusId, Tick)> = Vec::new();
        let interval = self.config.sample_interval;

        let mut t = start;
        while t <= end {
            while next_pkt < self.packets.len() && self.packets[next_pkt].spec.created_at == t {
                self.generate(next_pkt);
                next_pkt += 1;
            }

            active.retain(|&(_, _, e)| e > t);
            let before = active.len();
            while next_contact < contacts.len() && contacts[next_contact].0 == t {
                let (_, e, a, b) = contacts[next_contact];
                active.push((a, b, e));
                next_contact += 1;
            }
            if active.len() != before {
                active.sort_unstable();
            }
            for &(a, b, _) in &active {
                self.process_contact(a, b, t);
            }

            while next_ret < retirements.len() && retirements[next_ret].0 == t {
                self.retire(retirements[next_ret].1, t);
                next_ret += 1;
            }

            if t.is_multiple_of(interval) {
                self.sample(t);
            }
            if active.is_empty()
                && next_pkt >= self.packets.len()
                && next_ret >= retirements.len()
                && next_contact >= contacts.len()
            {
                break;
            }
            t += 1;
        }
    }

    fn generate(&mut self, i: usize) {
        let spec = self.packets[i].spec;
        let t = spec.created_at;
        if spec.dest_line == spec.source_line {
            self.policy.on_packet_created(spec.packet_id, spec.source_bus);
            self.deliver(i, spec.source_bus, t, 0);
            return;
        }
        let buf = &self.buffers[spec.source_bus.index()];
        if buf.occupancy + self.size > self.config.buffer_capacity {
            self.packets[i].disposition = Disposition::Dropped {
                reason: DropReason::RejectedAtSource,
                tick: t,
            };
            return;
        }
        self.store(spec.source_bus, i, 0, t, false);
        self.policy.on_packet_created(spec.packet_id, spec.source_bus);
    }

    fn store(&mut self, bus: BusId, pkt: usize, hops: u32, t: Tick, moved_in: bool) {
        let slot = Slot {
            pkt: pkt as u32,
            hops,
            arrived: t,
            moved_in,
        };
        self.buffers[bus.index()].push(slot, self.size);
        self.holders[pkt].push(bus);
        self.counters.stored_bytes += self.size;
        self.counters.max_total_bytes = self.counters.max_total_bytes.max(self.counters.stored_bytes);
    }

    fn release(&mut self, bus: BusId, pkt: usize) {
        let h = &mut self.holders[pkt];
        if let Some(k) = h.iter().position(|&b| b == bus) {
            h.swap_remove(k);
        }
    }

    fn deliver(&mut self, i: usize, bus: BusId, t: Tick, hops: u32) {
        let p = &mut self.packets[i];
        if matches!(p.disposition, Disposition::Delivered { .. }) {
            return;
        }
        p.disposition = Disposition::Delivered { tick: t };
        p.hops = hops;
        self.policy.on_delivery(p.spec.packet_id, bus, t);
    }

    fn process_contact(&mut self, a: BusId, b: BusId, t: Tick) {
        let per_tick = self.config.packets_per_second();
        let dirs = [(a, b), (b, a)];
        let mut budget = [per_tick; 2];
        let mut open = [true; 2];
        let mut turn = 0usize;
        while open[0] || open[1] {
            let d = turn % 2;
            turn += 1;
            if !open[d] {
                continue;
            }
            if budget[d] == 0 {
                open[d] = false;
                continue;
            }
            match self.try_send(dirs[d].0, dirs[d].1, t) {
                Send::Sent => budget[d] -= 1,
                Send::Blocked | Send::Exhausted => open[d] = false,
            }
        }
    }

    fn try_send(&mut self, from: BusId, to: BusId, t: Tick) -> Send {
        let from_line = self.trace.line_of(from);
        let to_line = self.trace.line_of(to);
        let buf = &self.buffers[from.index()];
        let cursor = self.cursors.get(&(from, to)).copied().unwrap_or(0);
        let mut seq = cursor.max(buf.first_seq());
        let end = buf.end_seq();
        let encounter = Encounter {
            tick: t,
            carrier: from,
            carrier_line: from_line,
            peer: to,
            peer_line: to_line,
        };
        let mut found: Option<(u64, Slot, PolicyDecision)> = None;
        while seq < end {
            let Some(&slot) = buf.get(seq) else {
                seq += 1;
                continue;
            };
            if slot.moved_in && slot.arrived == t {
                // arrivals of this tick are not forwarded again before the next
                break;
            }
            let p = &self.packets[slot.pkt as usize];
            let view = PacketView {
                id: p.spec.packet_id,
                source_line: p.spec.source_line,
                dest_line: p.spec.dest_line,
                created_at: p.spec.created_at,
            };
            let decision = self.policy.decide(&view, &encounter);
            let acts = match decision.action {
                Action::Hold => false,
                Action::Forward => true,
                Action::Replicate => !self.holders[slot.pkt as usize].contains(&to),
            };
            if acts {
                found = Some((seq, slot, decision));
                break;
            }
            seq += 1;
        }
        let Some((seq, slot, decision)) = found else {
            self.cursors.insert((from, to), seq);
            return if seq < end { Send::Blocked } else { Send::Exhausted };
        };

        let i = slot.pkt as usize;
        let at_destination = to_line == self.packets[i].spec.dest_line;
        if !at_destination
            && self.buffers[to.index()].occupancy + self.size > self.config.buffer_capacity
        {
            self.cursors.insert((from, to), seq);
            return Send::Blocked;
        }
        self.cursors.insert((from, to), seq + 1);
        self.counters.transfers += 1;
        let hops = slot.hops + 1;
        let copy = decision.action == Action::Replicate;
        if copy {
            self.packets[i].copies += 1;
        } else {
            self.buffers[from.index()].remove(seq, self.size);
            self.counters.stored_bytes -= self.size;
            self.release(from, i);
            self.packets[i].hop_trace.push(Hop {
                tick: t,
                from,
                to,
                kind: HopKind::Contact,
                justification: decision.justification,
            });
        }
        let id = PacketId(slot.pkt);
        if at_destination {
            self.policy.on_packet_received(id, to);
            self.deliver(i, to, t, hops);
        } else {
            self.store(to, i, hops, t, true);
            self.policy.on_packet_received(id, to);
            if !copy {
                self.packets[i].hops = hops;
            }
        }
        Send::Sent
    }

    fn retire(&mut self, bus: BusId, t: Tick) {
        let successor = self
            .trace
            .bus(bus)
            .handoff_to
            .filter(|&s| self.trace.bus(s).present_at(t));
        let slots = self.buffers[bus.index()].drain();
        self.counters.stored_bytes -= slots.len() as u64 * self.size;
        for slot in slots {
            let i = slot.pkt as usize;
            self.release(bus, i);
            let lost = match successor {
                None => Some(DropReason::EndOfDay),
                Some(s) if self.holders[i].contains(&s) => {
                    // the successor already has a copy
                    self.counters.merged += 1;
                    None
                }
                Some(s) => {
                    if self.buffers[s.index()].occupancy + self.size
                        > self.config.buffer_capacity
                    {
                        Some(DropReason::NoSuccessorBus)
                    } else {
                        let hops = slot.hops + 1;
                        self.store(s, i, hops, t, true);
                        self.policy.on_packet_received(PacketId(slot.pkt), s);
                        self.counters.handoffs += 1;
                        if !self.multi {
                            self.packets[i].hops = hops;
                            self.packets[i].hop_trace.push(Hop {
                                tick: t,
                                from: bus,
                                to: s,
                                kind: HopKind::Handoff,
                                justification: Justification::None,
                            });
                        }
                        None
                    }
                }
            };
            if let Some(reason) = lost {
                let p = &mut self.packets[i];
                if self.holders[i].is_empty() && p.disposition == Disposition::InFlight {
                    p.disposition = Disposition::Dropped { reason, tick: t };
                }
            }
        }
    }

    fn sample(&mut self, t: Tick) {
        let mut total = 0u64;
        let mut max_bus = 0u64;
        let mut nonempty = 0u32;
        let mut stored = 0u64;
        for b in &self.buffers {
            total += b.occupancy;
            max_bus = max_bus.max(b.occupancy);
            stored += b.len as u64;
            if b.len > 0 {
                nonempty += 1;
            }
        }
        self.samples.push(BufferSample {
            tick: t,
            total_bytes: total,
            max_bus_bytes: max_bus,
            buses_holding: nonempty,
            packets_stored: stored,
        });
    }

    fn finish(self) -> TrafficOutcome {
        let per_bus_max: Vec<u64> = self.buffers.iter().map(|b| b.max_occupancy).collect();
        let report = MetricsReport::compute(
            self.policy.name(),
            self.config,
            &self.packets,
            &per_bus_max,
            self.counters,
            self.multi,
        );
        TrafficOutcome {
            packets: self.packets,
            report,
            buffer_series: self.samples,
        }
    }
}
