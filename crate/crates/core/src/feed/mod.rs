//! Transit feed extraction.
//!
//! Reads a GTFS-style feed, reconstructs passenger-level lines from the
//! individual trips (grouping reversals and aliases), drops lines that do not
//! form a closed loop, and emits a [`TopologyBundle`] with the timetable and a
//! planar street map for the mobility stage.

mod gtfs;
mod lines;
mod project;
pub mod synthetic;
mod topology;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use gtfs::{parse_feed, select_service, ServiceSelection};
pub use lines::{
    filter_closed_lines, group_lines, Departure, Line, LineSet, MemberPath, Path, PathRole,
    Timing,
};
pub use project::{centroid, project_coordinates, GeoPoint, EARTH_RADIUS_M};
pub use topology::{
    build_topology, extract, CityTopology, ExtractConfig, PlanarStop, RejectedLine,
    TopologyBundle, TOPOLOGY_FORMAT,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopRecord {
    pub stop_id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopTime {
    pub stop_id: String,
    /// Seconds since midnight; may exceed 24h for after-midnight service.
    pub arrival: u32,
    pub departure: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRecord {
    pub trip_id: String,
    pub service_id: String,
    pub route_id: String,
    pub headsign: String,
    pub stop_times: Vec<StopTime>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteRecord {
    pub route_id: String,
    pub short_name: String,
    pub route_type: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalendarRecord {
    pub service_id: String,
    /// Monday first.
    pub days: [bool; 7],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalendarDate {
    pub service_id: String,
    pub date: chrono::NaiveDate,
    pub added: bool,
}

/// Raw trip and stop database as read from a feed directory.
#[derive(Debug, Clone, Default)]
pub struct FeedDatabase {
    pub stops: Vec<StopRecord>,
    pub routes: Vec<RouteRecord>,
    /// Sorted by `trip_id`.
    pub trips: Vec<TripRecord>,
    pub calendar: Vec<CalendarRecord>,
    pub calendar_dates: Vec<CalendarDate>,
    pub diagnostics: Diagnostics,
}

/// Counters for everything that was skipped or repaired on the way from the
/// feed to the topology. Rendered as a plaintext summary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub malformed_rows: BTreeMap<String, usize>,
    pub trips_unknown_stop: usize,
    pub trips_without_stop_times: usize,
    pub trips_too_short: usize,
    pub trips_non_monotonic: usize,
    pub orphan_stop_times: usize,
    pub interpolated_times: usize,
    pub trips_selected: usize,
    pub repaired_offsets: usize,
    pub lines_admitted: usize,
    pub lines_rejected: usize,
}

impl Diagnostics {
    pub(crate) fn malformed(&mut self, table: &str) {
        *self.malformed_rows.entry(table.to_string()).or_default() += 1;
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "feed diagnostics")?;
        if self.malformed_rows.is_empty() {
            writeln!(f, "  malformed rows: 0")?;
        }
        for (table, n) in &self.malformed_rows {
            writeln!(f, "  malformed rows in {table}: {n}")?;
        }
        writeln!(f, "  trips dropped (unknown stop): {}", self.trips_unknown_stop)?;
        writeln!(f, "  trips dropped (no stop times): {}", self.trips_without_stop_times)?;
        writeln!(f, "  trips dropped (fewer than 2 stops): {}", self.trips_too_short)?;
        writeln!(f, "  trips dropped (non-monotonic times): {}", self.trips_non_monotonic)?;
        writeln!(f, "  stop times for unknown trips: {}", self.orphan_stop_times)?;
        writeln!(f, "  interpolated stop times: {}", self.interpolated_times)?;
        writeln!(f, "  trips on selected service: {}", self.trips_selected)?;
        writeln!(f, "  zero-length hops repaired: {}", self.repaired_offsets)?;
        writeln!(f, "  lines admitted: {}", self.lines_admitted)?;
        write!(f, "  lines rejected (open): {}", self.lines_rejected)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeedError {
    #[error("missing mandatory table {0}")]
    MissingTable(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{table}: {message}")]
    BadTable { table: String, message: String },
    #[error("no trips")]
    NoTrips,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("stop {0} is referenced by a path but has no coordinates")]
    MissingStop(String),
}
