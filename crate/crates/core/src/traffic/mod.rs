//! Data traffic over a mobility trace.
//!
//! Every tick runs, in order: packet generation, contact processing (pairs in
//! `(min bus, max bus)` order) and end-of-line handoffs of the buses retiring
//! at that tick. Each directed link may carry `packets_per_second` packets per
//! tick; the two directions of a contact take turns packet by packet. Buffers
//! are FIFO and bounded.

mod buffer;
mod engine;
mod generate;
mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mobility::MobilityTrace;
use crate::routing::{build_policy, PolicyTables, RoutingError};
use crate::{BusId, LineId, PacketId, Tick};

pub use engine::simulate;
pub use generate::generate_traffic;
pub use report::{
    delay_cdf, write_buffer_series, write_delay_cdf, write_packet_log, BufferReport,
    BufferSample, CdfRow, DelayStats, MetricsReport, ReplicaStats, TimeBucket,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    pub bandwidth_bps: u64,
    pub packet_size: u32,
    pub buffer_capacity: u64,
    /// Packets per bus per hour.
    pub rate_per_hour: f64,
    pub window_start: Tick,
    pub window_end: Tick,
    /// Allow a packet's destination to be its source's own line.
    pub include_own_line: bool,
    /// Period of the buffer occupancy samples, seconds.
    pub sample_interval: u32,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            bandwidth_bps: 10_000_000,
            packet_size: 64 * 1024,
            buffer_capacity: 512 * 1024 * 1024,
            rate_per_hour: 12.0,
            window_start: 8 * 3600,
            window_end: 18 * 3600,
            include_own_line: false,
            sample_interval: 300,
        }
    }
}

impl TrafficConfig {
    pub fn packets_per_second(&self) -> u64 {
        self.bandwidth_bps / (u64::from(self.packet_size) * 8)
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |m: &str| Err(TrafficError::InvalidConfig(m.to_string()));
        if self.packet_size == 0 || self.buffer_capacity == 0 {
            return bad("packet size and buffer capacity must be positive");
        }
        if self.packets_per_second() == 0 {
            return bad("bandwidth is below one packet per second");
        }
        if !(self.rate_per_hour > 0.0) || !self.rate_per_hour.is_finite() {
            return bad("traffic rate must be positive");
        }
        if self.window_end <= self.window_start {
            return bad("traffic window is empty");
        }
        if self.sample_interval == 0 {
            return bad("sample interval must be positive");
        }
        Ok(())
    }
}

/// A packet as generated, before simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub packet_id: PacketId,
    pub created_at: Tick,
    pub source_bus: BusId,
    pub source_line: LineId,
    pub dest_line: LineId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// The carrier retired with nobody waiting at the head.
    EndOfDay,
    /// The successor at the head had no room for the handed-off packet.
    NoSuccessorBus,
    /// The source buffer was full when the packet was generated.
    RejectedAtSource,
}

impl DropReason {
    pub const ALL: [DropReason; 3] = [
        DropReason::EndOfDay,
        DropReason::NoSuccessorBus,
        DropReason::RejectedAtSource,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::EndOfDay => "end_of_day",
            DropReason::NoSuccessorBus => "no_successor_bus",
            DropReason::RejectedAtSource => "rejected_at_source",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum Disposition {
    InFlight,
    Delivered { tick: Tick },
    Dropped { reason: DropReason, tick: Tick },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopKind {
    Contact,
    Handoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub tick: Tick,
    pub from: BusId,
    pub to: BusId,
    pub kind: HopKind,
    pub justification: crate::routing::Justification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub spec: PacketSpec,
    pub size: u32,
    /// Every move of a single-copy packet; empty under multi-copy policies.
    pub hop_trace: Vec<Hop>,
    pub disposition: Disposition,
    /// Hops taken by the copy that was delivered (or by the packet so far).
    pub hops: u32,
    /// Copies created beyond the original (multi-copy policies).
    pub copies: u32,
}

impl Packet {
    pub fn delay(&self) -> Option<Tick> {
        match self.disposition {
            Disposition::Delivered { tick } => Some(tick - self.spec.created_at),
            _ => None,
        }
    }
}

/// Packets plus the metrics derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficOutcome {
    pub packets: Vec<Packet>,
    pub report: MetricsReport,
    pub buffer_series: Vec<BufferSample>,
}

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("routing tables were built from trace {tables}, not from this trace ({trace})")]
    VersionMismatch { trace: String, tables: String },
    #[error(transparent)]
    Policy(#[from] RoutingError),
    #[error("invalid traffic config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Generates the traffic for `seed` and runs the named policy over it.
pub fn run_traffic(
    trace: &MobilityTrace,
    tables: &PolicyTables,
    policy: &str,
    config: &TrafficConfig,
    seed: u64,
) -> Result<TrafficOutcome, TrafficError> {
    let trace_id = trace.trace_id();
    if trace_id != tables.trace_id {
        return Err(TrafficError::VersionMismatch {
            trace: trace_id,
            tables: tables.trace_id.clone(),
        });
    }
    config.validate()?;
    let mut policy = build_policy(policy, tables, trace.buses.len())?;
    let packets = generate_traffic(trace, &tables.matrix.lines, config, seed);
    Ok(simulate(trace, policy.as_mut(), config, &packets))
}

/// Counts by drop reason, every reason present.
pub fn drop_counts(packets: &[Packet]) -> BTreeMap<DropReason, u64> {
    let mut out: BTreeMap<DropReason, u64> = DropReason::ALL.iter().map(|&r| (r, 0)).collect();
    for p in packets {
        if let Disposition::Dropped { reason, .. } = p.disposition {
            *out.entry(reason).or_default() += 1;
        }
    }
    out
}
