#![allow(dead_code)]
pub mod gtfs;

use std::collections::BTreeMap;

use busnet::feed::{build_topology, Diagnostics, StopTime, TopologyBundle, TripRecord};
use busnet::geometry::Point;
use busnet::mobility::{BusRecord, ContactEvent, MobilityTrace, TripRun};
use busnet::{BusId, LineId, PathId};

/// `(stop, arrival, departure)`
pub type Call = (&'static str, u32, u32);

pub fn trip(id: &str, route: &str, calls: &[Call]) -> TripRecord {
    TripRecord {
        trip_id: id.to_string(),
        service_id: "wk".into(),
        route_id: route.to_string(),
        headsign: String::new(),
        stop_times: calls
            .iter()
            .map(|&(s, a, d)| StopTime {
                stop_id: s.to_string(),
                arrival: a,
                departure: d,
            })
            .collect(),
    }
}

pub fn bundle(trips: &[TripRecord], stops: &[(&str, f64, f64)]) -> TopologyBundle {
    let stops: BTreeMap<String, Point> = stops
        .iter()
        .map(|&(id, x, y)| (id.to_string(), Point::new(x, y)))
        .collect();
    build_topology(trips, &stops, 0.8, "fixture", None, &mut Diagnostics::default()).unwrap()
}

/// Two-stop shuttle run in both directions: `A` at the origin, `B` at
/// `(len, 0)`, one `(direction, start)` entry per trip.
pub fn shuttle(len: f64, duration: u32, trips: &[(bool, u32)]) -> TopologyBundle {
    let recs: Vec<TripRecord> = trips
        .iter()
        .enumerate()
        .map(|(k, &(forward, s))| {
            let (a, b) = if forward { ("A", "B") } else { ("B", "A") };
            trip(&format!("t{k:02}"), "r", &[(a, s, s), (b, s + duration, s + duration)])
        })
        .collect();
    bundle(&recs, &[("A", 0.0, 0.0), ("B", len, 0.0)])
}

pub fn bus(id: u32, line: u32, departs: &[u32], retire: u32) -> BusRecord {
    BusRecord {
        bus_id: BusId(id),
        line_id: LineId(line),
        spawned_at: departs[0],
        retired_at: retire,
        handoff_to: None,
        trips: departs
            .iter()
            .map(|&d| TripRun {
                trip_id: format!("b{id}@{d}"),
                path_id: PathId(line),
                depart: d,
                arrive: d + 50,
            })
            .collect(),
    }
}

pub fn contact(a: u32, b: u32, la: u32, lb: u32, start: u32, end: u32) -> ContactEvent {
    ContactEvent {
        start,
        end,
        bus_a: BusId(a),
        bus_b: BusId(b),
        line_a: LineId(la),
        line_b: LineId(lb),
    }
}

/// Line 0: bus 0 runs 3 trips and meets line 1 on two of them (twice on the
/// first), bus 1 runs 2 trips and meets line 1 on one. Line 1: bus 2 with 4
/// trips meeting line 0 on three, bus 3 with 1 trip and no contact.
pub fn hand_tally_trace() -> MobilityTrace {
    MobilityTrace {
        start: 0,
        end: 1000,
        buses: vec![
            bus(0, 0, &[0, 100, 200], 300),
            bus(1, 0, &[0, 150], 300),
            bus(2, 1, &[0, 100, 200, 300], 400),
            bus(3, 1, &[500], 1000),
        ],
        contacts: vec![
            contact(0, 2, 0, 1, 10, 20),
            contact(0, 2, 0, 1, 40, 45),
            contact(0, 2, 0, 1, 250, 260),
            contact(1, 2, 0, 1, 160, 170),
            contact(0, 1, 0, 0, 0, 5),
        ],
    }
}
