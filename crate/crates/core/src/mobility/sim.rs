use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};

use rand::Rng;

use super::detect::detect_into;
use super::street::StreetMap;
use super::{BusRecord, BusStatus, ContactEvent, MobilityConfig, MobilityError, MobilityTrace, TripRun};
use crate::feed::{Timing, TopologyBundle};
use crate::geometry::Point;
use crate::rng::{substream, Stream};
use crate::{BusId, LineId, Tick};

/// Buses waiting at one (line, stop) head, front first.
pub type HeadQueue = VecDeque<BusId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Wait,
    /// The bus goes out of service; its data goes to `handoff_to`.
    Retire { handoff_to: Option<BusId> },
}

/// Decides what a bus reaching the end of its trip does.
///
/// It retires when two buses already wait, or when the buses already queued
/// cover every remaining departure from this head (`future_departures`);
/// otherwise it joins the queue. Either way the queue ends up with at most two
/// buses.
pub fn end_of_line_transition(
    bus: BusId,
    queue: &mut HeadQueue,
    future_departures: usize,
) -> Transition {
    if queue.len() >= 2 || future_departures <= queue.len() {
        Transition::Retire {
            handoff_to: queue.front().copied(),
        }
    } else {
        queue.push_back(bus);
        Transition::Wait
    }
}

/// A present bus as seen by position observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusSnapshot {
    pub bus: BusId,
    pub line: LineId,
    pub position: Point,
    pub status: BusStatus,
}

struct Run<'a> {
    start: Tick,
    timings: &'a [Timing],
    points: &'a [Point],
    cursor: usize,
}

impl Run<'_> {
    fn position(&mut self, t: Tick) -> Point {
        let o = t - self.start;
        let n = self.timings.len();
        while self.cursor + 1 < n && self.timings[self.cursor + 1].arrive <= o {
            self.cursor += 1;
        }
        let k = self.cursor;
        let here = self.timings[k];
        if o <= here.depart || k + 1 == n {
            return self.points[k];
        }
        let next = self.timings[k + 1];
        let frac = f64::from(o - here.depart) / f64::from(next.arrive - here.depart);
        self.points[k].lerp(self.points[k + 1], frac)
    }
}

struct SimBus<'a> {
    line: LineId,
    status: BusStatus,
    at: Point,
    run: Option<Run<'a>>,
}

struct Dispatch {
    time: Tick,
    line: usize,
    dep: usize,
}

pub fn run_mobility(
    bundle: &TopologyBundle,
    config: &MobilityConfig,
    seed: u64,
) -> Result<MobilityTrace, MobilityError> {
    run_mobility_with(bundle, config, seed, |_, _| {})
}

/// Runs the day, calling `observer` once per tick with the present buses in
/// bus id order.
pub fn run_mobility_with<F>(
    bundle: &TopologyBundle,
    config: &MobilityConfig,
    seed: u64,
    mut observer: F,
) -> Result<MobilityTrace, MobilityError>
where
    F: FnMut(Tick, &[BusSnapshot]),
{
    if !(config.radio_range > 0.0) || !(config.corridor_half_width > 0.0) {
        return Err(MobilityError::InvalidConfig(
            "radio range and corridor half-width must be positive".into(),
        ));
    }
    let stop_points = bundle.stop_points();
    let mut path_points: HashMap<crate::PathId, Vec<Point>> = HashMap::new();
    for p in &bundle.paths {
        let pts = p
            .stops
            .iter()
            .map(|s| {
                stop_points
                    .get(s.as_str())
                    .copied()
                    .ok_or_else(|| MobilityError::MissingStop(s.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        path_points.insert(p.path_id, pts);
    }

    let mut noise = substream(seed, Stream::DepartureNoise);
    let mut dispatch = Vec::new();
    let mut future: HashMap<(usize, &str), usize> = HashMap::new();
    for (li, line) in bundle.lines.iter().enumerate() {
        for (di, dep) in line.departures.iter().enumerate() {
            let path = bundle
                .path(dep.path_id)
                .filter(|_| line.members.iter().any(|m| m.path_id == dep.path_id))
                .ok_or_else(|| MobilityError::UnknownPath {
                    line: line.line_id,
                    trip_id: dep.trip_id.clone(),
                    path: dep.path_id,
                })?;
            let delay = if config.noise_max > 0 {
                noise.random_range(0..=config.noise_max)
            } else {
                0
            };
            dispatch.push(Dispatch {
                time: dep.start + delay,
                line: li,
                dep: di,
            });
            *future.entry((li, path.first_stop())).or_default() += 1;
        }
    }
    if dispatch.is_empty() {
        return Err(MobilityError::NoDepartures);
    }
    dispatch.sort_by_key(|d| (d.time, d.line, d.dep));

    let streets = StreetMap::new(
        bundle.topology.street_segments.clone(),
        config.corridor_half_width,
        config.radio_range,
    );
    let mut queues: HashMap<(usize, &str), HeadQueue> = HashMap::new();
    let mut buses: Vec<SimBus> = Vec::new();
    let mut bus_line_idx: Vec<usize> = Vec::new();
    let mut records: Vec<BusRecord> = Vec::new();
    let mut present: Vec<u32> = Vec::new();
    let mut arrivals: BinaryHeap<Reverse<(Tick, u32)>> = BinaryHeap::new();
    let mut open: BTreeMap<(u32, u32), Tick> = BTreeMap::new();
    let mut contacts: Vec<ContactEvent> = Vec::new();
    let mut prev_pairs: Vec<(u32, u32)> = Vec::new();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut cells = Vec::new();
    let mut snapshots: Vec<BusSnapshot> = Vec::new();
    let mut positions: Vec<Point> = Vec::new();

    let start = dispatch[0].time;
    let mut t = start;
    let mut next = 0usize;
    loop {
        while let Some(&Reverse((at, b))) = arrivals.peek() {
            if at != t {
                break;
            }
            arrivals.pop();
            let li = bus_line_idx[b as usize];
            let trip = records[b as usize].trips.last().expect("arriving bus has a trip");
            let path = bundle.path(trip.path_id).expect("checked at dispatch");
            let head = (li, path.last_stop());
            let remaining = future.get(&head).copied().unwrap_or(0);
            let queue = queues.entry(head).or_default();
            let bus = &mut buses[b as usize];
            bus.run = None;
            bus.at = *path_points[&path.path_id].last().expect("nonempty path");
            match end_of_line_transition(BusId(b), queue, remaining) {
                Transition::Wait => bus.status = BusStatus::WaitingAtHead,
                Transition::Retire { handoff_to } => {
                    bus.status = BusStatus::Retired;
                    let rec = &mut records[b as usize];
                    rec.retired_at = t;
                    rec.handoff_to = handoff_to;
                    let pos = present.binary_search(&b).expect("retiring bus is present");
                    present.remove(pos);
                }
            }
        }

        while next < dispatch.len() && dispatch[next].time == t {
            let d = &dispatch[next];
            next += 1;
            let line = &bundle.lines[d.line];
            let dep = &line.departures[d.dep];
            let path = bundle.path(dep.path_id).expect("checked above");
            let head = (d.line, path.first_stop());
            if let Some(c) = future.get_mut(&head) {
                *c -= 1;
            }
            let b = match queues.get_mut(&head).and_then(|q| q.pop_front()) {
                Some(b) => b.0,
                None => {
                    let b = buses.len() as u32;
                    buses.push(SimBus {
                        line: line.line_id,
                        status: BusStatus::InService,
                        at: path_points[&path.path_id][0],
                        run: None,
                    });
                    bus_line_idx.push(d.line);
                    records.push(BusRecord {
                        bus_id: BusId(b),
                        line_id: line.line_id,
                        spawned_at: t,
                        retired_at: Tick::MAX,
                        handoff_to: None,
                        trips: Vec::new(),
                    });
                    present.push(b);
                    b
                }
            };
            let timings = dep.timings(path);
            let arrive = t + timings.last().expect("nonempty path").arrive;
            let bus = &mut buses[b as usize];
            bus.status = BusStatus::InService;
            bus.run = Some(Run {
                start: t,
                timings,
                points: &path_points[&path.path_id],
                cursor: 0,
            });
            records[b as usize].trips.push(TripRun {
                trip_id: dep.trip_id.clone(),
                path_id: dep.path_id,
                depart: t,
                arrive,
            });
            arrivals.push(Reverse((arrive, b)));
        }

        if present.is_empty() && next == dispatch.len() && arrivals.is_empty() {
            break;
        }

        snapshots.clear();
        positions.clear();
        for &b in &present {
            let bus = &mut buses[b as usize];
            let pos = match bus.run.as_mut() {
                Some(run) => run.position(t),
                None => bus.at,
            };
            positions.push(pos);
            snapshots.push(BusSnapshot {
                bus: BusId(b),
                line: bus.line,
                position: pos,
                status: bus.status,
            });
        }
        observer(t, &snapshots);

        detect_into(&positions, &streets, config.radio_range, &mut cells, &mut pairs);
        for p in pairs.iter_mut() {
            *p = (present[p.0 as usize], present[p.1 as usize]);
        }
        update_open(&prev_pairs, &pairs, t, &mut open, &mut contacts, &buses);
        std::mem::swap(&mut prev_pairs, &mut pairs);
        t += 1;
    }
    update_open(&prev_pairs, &[], t, &mut open, &mut contacts, &buses);
    debug_assert!(open.is_empty());
    contacts.sort_unstable();

    Ok(MobilityTrace {
        start,
        end: t,
        buses: records,
        contacts,
    })
}

/// Opens events for new pairs and closes those that disappeared. Both pair
/// lists are sorted.
fn update_open(
    prev: &[(u32, u32)],
    cur: &[(u32, u32)],
    t: Tick,
    open: &mut BTreeMap<(u32, u32), Tick>,
    out: &mut Vec<ContactEvent>,
    buses: &[SimBus],
) {
    let (mut i, mut j) = (0, 0);
    while i < prev.len() || j < cur.len() {
        let take_prev = j == cur.len() || (i < prev.len() && prev[i] < cur[j]);
        let take_cur = i == prev.len() || (j < cur.len() && cur[j] < prev[i]);
        if take_prev {
            let (a, b) = prev[i];
            let start = open.remove(&(a, b)).expect("open event");
            out.push(ContactEvent {
                start,
                end: t,
                bus_a: BusId(a),
                bus_b: BusId(b),
                line_a: buses[a as usize].line,
                line_b: buses[b as usize].line,
            });
            i += 1;
        } else if take_cur {
            open.insert(cur[j], t);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
}
