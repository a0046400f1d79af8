//! Bus mobility replay and radio contact detection.
//!
//! The day is simulated in one second ticks. Within a tick, buses reaching
//! the end of their trip are handled first (join the head queue or retire),
//! then due departures are dispatched, then contacts are detected among the
//! buses present (in service or waiting at a head).

mod detect;
mod io;
mod sim;
mod street;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provenance::hash_json;
use crate::{BusId, LineId, PathId, Tick};

pub use detect::{detect_contacts, detect_contacts_all_pairs};
pub use io::{
    read_bus_events, read_contacts, read_provenance, read_trace, write_bus_events, write_contacts,
    write_population, BusEventRow, ContactRow, PositionWriter,
};
pub use sim::{
    end_of_line_transition, run_mobility, run_mobility_with, BusSnapshot, HeadQueue,
    Transition,
};
pub use street::StreetMap;

pub const TRACE_FORMAT: &str = "busnet-trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilityConfig {
    pub radio_range: f64,
    pub corridor_half_width: f64,
    pub noise_max: u32,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            radio_range: 100.0,
            corridor_half_width: 15.0,
            noise_max: 600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusStatus {
    InService,
    WaitingAtHead,
    Retired,
}

/// Two buses in mutual radio contact during `[start, end)`; `bus_a < bus_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContactEvent {
    pub start: Tick,
    pub end: Tick,
    pub bus_a: BusId,
    pub bus_b: BusId,
    pub line_a: LineId,
    pub line_b: LineId,
}

impl ContactEvent {
    pub fn duration(&self) -> u32 {
        self.end - self.start
    }

    pub fn other(&self, bus: BusId) -> Option<(BusId, LineId)> {
        if bus == self.bus_a {
            Some((self.bus_b, self.line_b))
        } else if bus == self.bus_b {
            Some((self.bus_a, self.line_a))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRun {
    pub trip_id: String,
    pub path_id: PathId,
    pub depart: Tick,
    pub arrive: Tick,
}

/// Life of one bus: present during `[spawned_at, retired_at)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusRecord {
    pub bus_id: BusId,
    pub line_id: LineId,
    pub spawned_at: Tick,
    pub retired_at: Tick,
    /// First bus in the head queue when this bus retired, if any.
    pub handoff_to: Option<BusId>,
    pub trips: Vec<TripRun>,
}

impl BusRecord {
    pub fn present_at(&self, t: Tick) -> bool {
        self.spawned_at <= t && t < self.retired_at
    }

    /// Trip cycles `[departure, next departure)`, the last one closed by the
    /// retirement. Time spent waiting at the head belongs to the trip that
    /// brought the bus there.
    pub fn trip_cycles(&self) -> Vec<(Tick, Tick)> {
        self.trips
            .iter()
            .enumerate()
            .map(|(k, tr)| {
                let end = self
                    .trips
                    .get(k + 1)
                    .map_or(self.retired_at, |next| next.depart);
                (tr.depart, end)
            })
            .collect()
    }

    pub fn status_at(&self, t: Tick) -> Option<BusStatus> {
        if t < self.spawned_at {
            return None;
        }
        if t >= self.retired_at {
            return Some(BusStatus::Retired);
        }
        let moving = self.trips.iter().any(|tr| tr.depart <= t && t < tr.arrive);
        Some(if moving {
            BusStatus::InService
        } else {
            BusStatus::WaitingAtHead
        })
    }
}

/// Kinds of entries in the bus event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusEventKind {
    Spawn,
    Depart,
    Arrive,
    Queue,
    Retire,
}

/// Result of a mobility run. Positions are not stored; they follow from the
/// trip runs and the topology (see [`run_mobility_with`] for streaming them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityTrace {
    /// First simulated tick (earliest departure).
    pub start: Tick,
    /// One past the last simulated tick.
    pub end: Tick,
    /// Indexed by `BusId`.
    pub buses: Vec<BusRecord>,
    /// Sorted by `(start, end, bus_a, bus_b)`.
    pub contacts: Vec<ContactEvent>,
}

impl MobilityTrace {
    pub fn bus(&self, id: BusId) -> &BusRecord {
        &self.buses[id.index()]
    }

    pub fn line_of(&self, id: BusId) -> LineId {
        self.buses[id.index()].line_id
    }

    /// Number of present buses for every tick in `[start, end)`.
    pub fn population(&self) -> Vec<u32> {
        let n = (self.end - self.start) as usize;
        let mut diff = vec![0i64; n + 1];
        for b in &self.buses {
            diff[(b.spawned_at - self.start) as usize] += 1;
            diff[(b.retired_at - self.start) as usize] -= 1;
        }
        let mut acc = 0i64;
        diff[..n]
            .iter()
            .map(|d| {
                acc += d;
                acc as u32
            })
            .collect()
    }

    /// Content hash identifying this trace; routing tables built from it
    /// carry the same id.
    pub fn trace_id(&self) -> String {
        hash_json(&(TRACE_FORMAT, self.start, self.end, &self.buses, &self.contacts))
    }

    /// Flattened event log sorted by `(tick, bus)`.
    pub fn events(&self) -> Vec<BusEventRow> {
        let mut out = Vec::new();
        for b in &self.buses {
            let row = |tick, event, path_id: Option<PathId>, trip_id: &str| BusEventRow {
                tick,
                bus_id: b.bus_id,
                line_id: b.line_id,
                event,
                path_id,
                trip_id: trip_id.to_string(),
                handoff_to: None,
            };
            out.push(row(b.spawned_at, BusEventKind::Spawn, None, ""));
            for (k, tr) in b.trips.iter().enumerate() {
                out.push(row(tr.depart, BusEventKind::Depart, Some(tr.path_id), &tr.trip_id));
                out.push(row(tr.arrive, BusEventKind::Arrive, Some(tr.path_id), &tr.trip_id));
                let last = k + 1 == b.trips.len();
                if !last {
                    out.push(row(tr.arrive, BusEventKind::Queue, Some(tr.path_id), ""));
                }
            }
            let mut retire = row(b.retired_at, BusEventKind::Retire, None, "");
            retire.handoff_to = b.handoff_to;
            out.push(retire);
        }
        // stable: keeps each bus's own chronology within a tick
        out.sort_by_key(|r| (r.tick, r.bus_id));
        out
    }

    pub fn total_trips(&self) -> usize {
        self.buses.iter().map(|b| b.trips.len()).sum()
    }
}

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("no admitted line has a departure")]
    NoDepartures,
    #[error("line {line} departure {trip_id} references unknown path {path}")]
    UnknownPath {
        line: LineId,
        trip_id: String,
        path: PathId,
    },
    #[error("stop {0} has no planar coordinates")]
    MissingStop(String),
    #[error("invalid mobility config: {0}")]
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
    #[error("inconsistent trace: {0}")]
    BadTrace(String),
}
