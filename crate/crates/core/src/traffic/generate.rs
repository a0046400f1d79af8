use rand::Rng;

use super::{PacketSpec, TrafficConfig};
use crate::mobility::MobilityTrace;
use crate::rng::{substream, Stream};
use crate::{BusId, LineId, PacketId, Tick};

/// Periodic generation: every present bus emits one packet each
/// `3600 / rate` seconds inside the traffic window, starting at a random
/// per-bus phase. Destinations are uniform over `lines`, minus the source's
/// own line unless the config allows it. Packet ids follow `(tick, bus)`.
pub fn generate_traffic(
    trace: &MobilityTrace,
    lines: &[LineId],
    config: &TrafficConfig,
    seed: u64,
) -> Vec<PacketSpec> {
    let interval = 3600.0 / config.rate_per_hour;
    let mut phases = substream(seed, Stream::TrafficPhase);
    let mut events: Vec<(Tick, BusId)> = Vec::new();
    for bus in &trace.buses {
        let phase: f64 = phases.random_range(0.0..interval);
        let mut k = 0u64;
        loop {
            let at = f64::from(config.window_start) + phase + k as f64 * interval;
            let tick = at.floor() as Tick;
            if tick >= config.window_end {
                break;
            }
            if bus.present_at(tick) {
                events.push((tick, bus.bus_id));
            }
            k += 1;
        }
    }
    events.sort_unstable();

    let mut lines = lines.to_vec();
    lines.sort_unstable();
    lines.dedup();
    let mut dests = substream(seed, Stream::TrafficDestination);
    let mut out = Vec::with_capacity(events.len());
    let mut warned = false;
    for (tick, bus) in events {
        let own = trace.line_of(bus);
        let candidates: Vec<LineId> = if config.include_own_line {
            lines.clone()
        } else {
            lines.iter().copied().filter(|&l| l != own).collect()
        };
        if candidates.is_empty() {
            if !warned {
                log::warn!("no destination line besides the source line; those buses generate nothing");
                warned = true;
            }
            continue;
        }
        let dest_line = candidates[dests.random_range(0..candidates.len())];
        out.push(PacketSpec {
            packet_id: PacketId(out.len() as u32),
            created_at: tick,
            source_bus: bus,
            source_line: own,
            dest_line,
        });
    }
    out
}
