//! CSV forms of a mobility trace.
//!
//! * `bus_events.csv`: `tick,bus_id,line_id,event,path_id,trip_id,handoff_to`
//! * `contacts.csv`: `bus_a,bus_b,line_a,line_b,start,end` (end exclusive)
//! * `population.csv`: `tick,population`
//! * `positions.csv`: `tick,bus_id,line_id,x,y,status`
//!
//! Every file may start with a `# config_hash=.. seed=.. topology_hash=..`
//! provenance line. The bus events and contacts are enough to rebuild the
//! trace exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sim::BusSnapshot;
use super::{BusEventKind, BusRecord, BusStatus, ContactEvent, MobilityError, MobilityTrace, TripRun};
use crate::provenance::Provenance;
use crate::{BusId, LineId, PathId, Tick};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusEventRow {
    pub tick: Tick,
    pub bus_id: BusId,
    pub line_id: LineId,
    pub event: BusEventKind,
    pub path_id: Option<PathId>,
    pub trip_id: String,
    pub handoff_to: Option<BusId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactRow {
    pub bus_a: BusId,
    pub bus_b: BusId,
    pub line_a: LineId,
    pub line_b: LineId,
    pub start: Tick,
    pub end: Tick,
}

impl From<&ContactEvent> for ContactRow {
    fn from(e: &ContactEvent) -> Self {
        ContactRow {
            bus_a: e.bus_a,
            bus_b: e.bus_b,
            line_a: e.line_a,
            line_b: e.line_b,
            start: e.start,
            end: e.end,
        }
    }
}

impl From<ContactRow> for ContactEvent {
    fn from(r: ContactRow) -> Self {
        ContactEvent {
            start: r.start,
            end: r.end,
            bus_a: r.bus_a,
            bus_b: r.bus_b,
            line_a: r.line_a,
            line_b: r.line_b,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> MobilityError {
    MobilityError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> MobilityError {
    MobilityError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path, prov: Option<&Provenance>) -> Result<csv::Writer<BufWriter<File>>, MobilityError> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    if let Some(p) = prov {
        w.write_all(p.csv_comment().as_bytes())
            .map_err(|e| io_err(path, e))?;
    }
    Ok(csv::Writer::from_writer(w))
}

fn write_rows<T: Serialize, I: IntoIterator<Item = T>>(
    path: &Path,
    prov: Option<&Provenance>,
    rows: I,
) -> Result<(), MobilityError> {
    let mut w = create(path, prov)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_bus_events(
    path: &Path,
    trace: &MobilityTrace,
    prov: Option<&Provenance>,
) -> Result<(), MobilityError> {
    write_rows(path, prov, trace.events())
}

pub fn write_contacts(
    path: &Path,
    trace: &MobilityTrace,
    prov: Option<&Provenance>,
) -> Result<(), MobilityError> {
    write_rows(path, prov, trace.contacts.iter().map(ContactRow::from))
}

pub fn write_population(
    path: &Path,
    trace: &MobilityTrace,
    prov: Option<&Provenance>,
) -> Result<(), MobilityError> {
    #[derive(Serialize)]
    struct Row {
        tick: Tick,
        population: u32,
    }
    let pop = trace.population();
    write_rows(
        path,
        prov,
        pop.iter().enumerate().map(|(i, &p)| Row {
            tick: trace.start + i as Tick,
            population: p,
        }),
    )
}

/// Streams bus positions to CSV every `stride` ticks; plug
/// [`PositionWriter::observe`] into `run_mobility_with`.
pub struct PositionWriter {
    path: String,
    stride: u32,
    writer: csv::Writer<BufWriter<File>>,
    error: Option<MobilityError>,
}

#[derive(Serialize)]
struct PositionRow {
    tick: Tick,
    bus_id: BusId,
    line_id: LineId,
    x: f64,
    y: f64,
    status: BusStatus,
}

impl PositionWriter {
    pub fn create(path: &Path, stride: u32, prov: Option<&Provenance>) -> Result<Self, MobilityError> {
        Ok(PositionWriter {
            path: path.display().to_string(),
            stride: stride.max(1),
            writer: create(path, prov)?,
            error: None,
        })
    }

    pub fn observe(&mut self, t: Tick, buses: &[BusSnapshot]) {
        if self.error.is_some() || !t.is_multiple_of(self.stride) {
            return;
        }
        for b in buses {
            let row = PositionRow {
                tick: t,
                bus_id: b.bus,
                line_id: b.line,
                x: (b.position.x * 100.0).round() / 100.0,
                y: (b.position.y * 100.0).round() / 100.0,
                status: b.status,
            };
            if let Err(e) = self.writer.serialize(row) {
                self.error = Some(MobilityError::Csv {
                    path: self.path.clone(),
                    source: e,
                });
                return;
            }
        }
    }

    pub fn finish(mut self) -> Result<(), MobilityError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer.flush().map_err(|e| MobilityError::Io {
            path: self.path.clone(),
            source: e,
        })
    }
}

/// Reads the leading provenance comment, if any.
pub fn read_provenance(path: &Path) -> Result<Option<Provenance>, MobilityError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut first = String::new();
    BufReader::new(f)
        .read_line(&mut first)
        .map_err(|e| io_err(path, e))?;
    Ok(Provenance::parse_csv_comment(&first))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, MobilityError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(BufReader::new(f));
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| csv_err(path, e))
}

pub fn read_bus_events(path: &Path) -> Result<Vec<BusEventRow>, MobilityError> {
    read_rows(path)
}

pub fn read_contacts(path: &Path) -> Result<Vec<ContactEvent>, MobilityError> {
    Ok(read_rows::<ContactRow>(path)?
        .into_iter()
        .map(ContactEvent::from)
        .collect())
}

/// Rebuilds a trace from `bus_events.csv` and `contacts.csv` in `dir`.
pub fn read_trace(dir: &Path) -> Result<(MobilityTrace, Option<Provenance>), MobilityError> {
    let events_path = dir.join("bus_events.csv");
    let prov = read_provenance(&events_path)?;
    let events = read_bus_events(&events_path)?;
    let mut contacts = read_contacts(&dir.join("contacts.csv"))?;
    let trace = trace_from_parts(events, std::mem::take(&mut contacts))?;
    Ok((trace, prov))
}

fn trace_from_parts(
    events: Vec<BusEventRow>,
    mut contacts: Vec<ContactEvent>,
) -> Result<MobilityTrace, MobilityError> {
    let bad = |m: String| MobilityError::BadTrace(m);
    let mut buses: Vec<BusRecord> = Vec::new();
    for ev in events {
        let idx = ev.bus_id.index();
        if ev.event == BusEventKind::Spawn {
            if idx != buses.len() {
                return Err(bad(format!("bus {} spawned out of order", ev.bus_id)));
            }
            buses.push(BusRecord {
                bus_id: ev.bus_id,
                line_id: ev.line_id,
                spawned_at: ev.tick,
                retired_at: Tick::MAX,
                handoff_to: None,
                trips: Vec::new(),
            });
            continue;
        }
        let rec = buses
            .get_mut(idx)
            .ok_or_else(|| bad(format!("event for unknown bus {}", ev.bus_id)))?;
        match ev.event {
            BusEventKind::Spawn => unreachable!(),
            BusEventKind::Depart => rec.trips.push(TripRun {
                trip_id: ev.trip_id,
                path_id: ev
                    .path_id
                    .ok_or_else(|| bad(format!("departure of {} without path", ev.bus_id)))?,
                depart: ev.tick,
                arrive: ev.tick,
            }),
            BusEventKind::Arrive => {
                let trip = rec
                    .trips
                    .last_mut()
                    .ok_or_else(|| bad(format!("arrival of {} without departure", ev.bus_id)))?;
                trip.arrive = ev.tick;
            }
            BusEventKind::Queue => {}
            BusEventKind::Retire => {
                rec.retired_at = ev.tick;
                rec.handoff_to = ev.handoff_to;
            }
        }
    }
    if let Some(b) = buses.iter().find(|b| b.retired_at == Tick::MAX) {
        return Err(bad(format!("bus {} never retires", b.bus_id)));
    }
    let start = buses.iter().map(|b| b.spawned_at).min().unwrap_or(0);
    let end = buses.iter().map(|b| b.retired_at).max().unwrap_or(0);
    for c in &contacts {
        let known = |b: BusId, l: LineId| buses.get(b.index()).is_some_and(|r| r.line_id == l);
        if !(c.bus_a < c.bus_b && c.start < c.end && c.end <= end)
            || !known(c.bus_a, c.line_a)
            || !known(c.bus_b, c.line_b)
        {
            return Err(bad(format!("contact {c:?} is inconsistent with the bus log")));
        }
    }
    contacts.sort_unstable();
    Ok(MobilityTrace {
        start,
        end,
        buses,
        contacts,
    })
}
