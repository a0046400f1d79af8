use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};

use super::{
    CalendarDate, CalendarRecord, Diagnostics, FeedDatabase, FeedError, RouteRecord, StopRecord,
    StopTime, TripRecord,
};

struct Table {
    name: &'static str,
    columns: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn col(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    fn require(&self, name: &str) -> Result<usize, FeedError> {
        self.col(name).ok_or_else(|| FeedError::BadTable {
            table: self.name.to_string(),
            message: format!("missing column {name}"),
        })
    }
}

fn field(row: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
    idx.and_then(|i| row.get(i))
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn read_table(dir: &Path, name: &'static str, mandatory: bool) -> Result<Option<Table>, FeedError> {
    let path = dir.join(name);
    if !path.exists() {
        return if mandatory {
            Err(FeedError::MissingTable(name.to_string()))
        } else {
            Ok(None)
        };
    }
    let text = fs::read_to_string(&path).map_err(|source| FeedError::Io {
        path: path.clone(),
        source,
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| FeedError::BadTable {
        table: name.to_string(),
        message: e.to_string(),
    })?;
    let columns = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_string(), i))
        .collect();
    let mut rows = Vec::new();
    let mut bad = 0usize;
    for rec in rdr.records() {
        match rec {
            Ok(r) => rows.push(r),
            Err(_) => bad += 1,
        }
    }
    let table = Table {
        name,
        columns,
        rows,
    };
    if bad > 0 {
        log::warn!("{name}: {bad} unreadable rows");
    }
    Ok(Some(table))
}

/// Parses `H:MM:SS` (hours may exceed 23) into seconds since midnight.
pub(crate) fn parse_time(s: &str) -> Option<u32> {
    let mut it = s.trim().split(':');
    let h: u32 = it.next()?.trim().parse().ok()?;
    let m: u32 = it.next()?.parse().ok()?;
    let sec: u32 = it.next()?.parse().ok()?;
    if it.next().is_some() || m >= 60 || sec >= 60 {
        return None;
    }
    Some(h * 3600 + m * 60 + sec)
}

/// Reads a feed directory (stops, routes, trips, stop_times and calendar or
/// calendar_dates). Rows that cannot be parsed are skipped and counted; trips
/// that reference unknown stops or whose times cannot be completed are
/// dropped and counted.
pub fn parse_feed(dir: &Path) -> Result<FeedDatabase, FeedError> {
    let mut diag = Diagnostics::default();

    let stops_t = read_table(dir, "stops.txt", true)?.unwrap();
    let routes_t = read_table(dir, "routes.txt", true)?.unwrap();
    let trips_t = read_table(dir, "trips.txt", true)?.unwrap();
    let st_t = read_table(dir, "stop_times.txt", true)?.unwrap();
    let cal_t = read_table(dir, "calendar.txt", false)?;
    let cal_dates_t = read_table(dir, "calendar_dates.txt", false)?;
    if cal_t.is_none() && cal_dates_t.is_none() {
        return Err(FeedError::MissingTable("calendar.txt".into()));
    }

    let stops = parse_stops(&stops_t, &mut diag)?;
    let routes = parse_routes(&routes_t, &mut diag)?;
    let calendar = match &cal_t {
        Some(t) => parse_calendar(t, &mut diag)?,
        None => Vec::new(),
    };
    let calendar_dates = match &cal_dates_t {
        Some(t) => parse_calendar_dates(t, &mut diag)?,
        None => Vec::new(),
    };

    let trip_id_col = trips_t.require("trip_id")?;
    let route_col = trips_t.require("route_id")?;
    let service_col = trips_t.require("service_id")?;
    let headsign_col = trips_t.col("trip_headsign");
    let mut trip_meta: BTreeMap<String, (String, String, String)> = BTreeMap::new();
    for row in &trips_t.rows {
        match (
            field(row, Some(trip_id_col)),
            field(row, Some(route_col)),
            field(row, Some(service_col)),
        ) {
            (Some(t), Some(r), Some(s)) => {
                let h = field(row, headsign_col).unwrap_or("").to_string();
                trip_meta.insert(t.to_string(), (s.to_string(), r.to_string(), h));
            }
            _ => diag.malformed("trips.txt"),
        }
    }

    let st_trip = st_t.require("trip_id")?;
    let st_stop = st_t.require("stop_id")?;
    let st_seq = st_t.require("stop_sequence")?;
    let st_arr = st_t.col("arrival_time");
    let st_dep = st_t.col("departure_time");
    // (sequence, stop, arrival, departure)
    type RawStopTime = (u32, String, Option<u32>, Option<u32>);
    let mut by_trip: HashMap<String, Vec<RawStopTime>> = HashMap::new();
    for row in &st_t.rows {
        let (Some(trip), Some(stop), Some(seq)) = (
            field(row, Some(st_trip)),
            field(row, Some(st_stop)),
            field(row, Some(st_seq)).and_then(|s| s.parse::<u32>().ok()),
        ) else {
            diag.malformed("stop_times.txt");
            continue;
        };
        let arr = field(row, st_arr);
        let dep = field(row, st_dep);
        let arr_v = arr.map(parse_time);
        let dep_v = dep.map(parse_time);
        if matches!(arr_v, Some(None)) || matches!(dep_v, Some(None)) {
            diag.malformed("stop_times.txt");
            continue;
        }
        if !trip_meta.contains_key(trip) {
            diag.orphan_stop_times += 1;
            continue;
        }
        by_trip.entry(trip.to_string()).or_default().push((
            seq,
            stop.to_string(),
            arr_v.flatten(),
            dep_v.flatten(),
        ));
    }
    if by_trip.is_empty() {
        return Err(FeedError::NoTrips);
    }

    let known_stops: HashSet<&str> = stops.iter().map(|s| s.stop_id.as_str()).collect();
    let mut trips = Vec::new();
    for (trip_id, (service_id, route_id, headsign)) in trip_meta {
        let Some(mut raw) = by_trip.remove(&trip_id) else {
            diag.trips_without_stop_times += 1;
            continue;
        };
        raw.sort_by_key(|r| r.0);
        if raw.iter().any(|r| !known_stops.contains(r.1.as_str())) {
            diag.trips_unknown_stop += 1;
            continue;
        }
        if raw.len() < 2 {
            diag.trips_too_short += 1;
            continue;
        }
        let Some(stop_times) = complete_times(&raw, &mut diag) else {
            diag.trips_without_stop_times += 1;
            continue;
        };
        if !times_monotonic(&stop_times) {
            diag.trips_non_monotonic += 1;
            continue;
        }
        trips.push(TripRecord {
            trip_id,
            service_id,
            route_id,
            headsign,
            stop_times,
        });
    }
    if trips.is_empty() {
        return Err(FeedError::NoTrips);
    }

    Ok(FeedDatabase {
        stops,
        routes,
        trips,
        calendar,
        calendar_dates,
        diagnostics: diag,
    })
}

/// Fills blank intermediate times by linear interpolation over the stop index.
/// The first and last stop must carry a time.
fn complete_times(
    raw: &[(u32, String, Option<u32>, Option<u32>)],
    diag: &mut Diagnostics,
) -> Option<Vec<StopTime>> {
    let known: Vec<Option<(u32, u32)>> = raw
        .iter()
        .map(|(_, _, a, d)| match (a, d) {
            (Some(a), Some(d)) => Some((*a, *d)),
            (Some(a), None) => Some((*a, *a)),
            (None, Some(d)) => Some((*d, *d)),
            (None, None) => None,
        })
        .collect();
    known.first()?.as_ref()?;
    known.last()?.as_ref()?;
    let mut out = Vec::with_capacity(raw.len());
    let mut prev_known = 0usize;
    for (i, k) in known.iter().enumerate() {
        let (arrival, departure) = match k {
            Some(v) => {
                prev_known = i;
                *v
            }
            None => {
                let next = (i + 1..known.len()).find(|&j| known[j].is_some())?;
                let (_, d0) = known[prev_known]?;
                let (a1, _) = known[next]?;
                let frac = (i - prev_known) as f64 / (next - prev_known) as f64;
                let t = d0 as f64 + (a1 as f64 - d0 as f64) * frac;
                diag.interpolated_times += 1;
                let t = t.round().max(0.0) as u32;
                (t, t)
            }
        };
        out.push(StopTime {
            stop_id: raw[i].1.clone(),
            arrival,
            departure,
        });
    }
    Some(out)
}

fn times_monotonic(st: &[StopTime]) -> bool {
    st.iter().all(|s| s.departure >= s.arrival)
        && st.windows(2).all(|w| w[1].arrival >= w[0].departure)
}

fn parse_stops(t: &Table, diag: &mut Diagnostics) -> Result<Vec<StopRecord>, FeedError> {
    let id = t.require("stop_id")?;
    let lat = t.require("stop_lat")?;
    let lon = t.require("stop_lon")?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in &t.rows {
        let parsed = (
            field(row, Some(id)),
            field(row, Some(lat)).and_then(|v| v.parse::<f64>().ok()),
            field(row, Some(lon)).and_then(|v| v.parse::<f64>().ok()),
        );
        match parsed {
            (Some(id), Some(lat), Some(lon))
                if (-90.0..=90.0).contains(&lat)
                    && (-180.0..=180.0).contains(&lon)
                    && seen.insert(id.to_string()) =>
            {
                out.push(StopRecord {
                    stop_id: id.to_string(),
                    lat,
                    lon,
                })
            }
            _ => diag.malformed("stops.txt"),
        }
    }
    out.sort_by(|a, b| a.stop_id.cmp(&b.stop_id));
    Ok(out)
}

fn parse_routes(t: &Table, diag: &mut Diagnostics) -> Result<Vec<RouteRecord>, FeedError> {
    let id = t.require("route_id")?;
    let short = t.col("route_short_name");
    let long = t.col("route_long_name");
    let kind = t.col("route_type");
    let mut out = Vec::new();
    for row in &t.rows {
        let Some(route_id) = field(row, Some(id)) else {
            diag.malformed("routes.txt");
            continue;
        };
        out.push(RouteRecord {
            route_id: route_id.to_string(),
            short_name: field(row, short)
                .or_else(|| field(row, long))
                .unwrap_or(route_id)
                .to_string(),
            route_type: field(row, kind).and_then(|v| v.parse().ok()),
        });
    }
    Ok(out)
}

fn parse_calendar(t: &Table, diag: &mut Diagnostics) -> Result<Vec<CalendarRecord>, FeedError> {
    const DAYS: [&str; 7] = [
        "monday",
        "tuesday",
        "wednesday",
        "thursday",
        "friday",
        "saturday",
        "sunday",
    ];
    let id = t.require("service_id")?;
    let cols = DAYS
        .iter()
        .map(|d| t.require(d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    'rows: for row in &t.rows {
        let Some(service_id) = field(row, Some(id)) else {
            diag.malformed("calendar.txt");
            continue;
        };
        let mut days = [false; 7];
        for (d, &c) in cols.iter().enumerate() {
            match field(row, Some(c)) {
                Some("1") => days[d] = true,
                Some("0") => {}
                _ => {
                    diag.malformed("calendar.txt");
                    continue 'rows;
                }
            }
        }
        out.push(CalendarRecord {
            service_id: service_id.to_string(),
            days,
        });
    }
    Ok(out)
}

fn parse_calendar_dates(
    t: &Table,
    diag: &mut Diagnostics,
) -> Result<Vec<CalendarDate>, FeedError> {
    let id = t.require("service_id")?;
    let date = t.require("date")?;
    let kind = t.require("exception_type")?;
    let mut out = Vec::new();
    for row in &t.rows {
        let parsed = (
            field(row, Some(id)),
            field(row, Some(date)).and_then(|d| NaiveDate::parse_from_str(d, "%Y%m%d").ok()),
            field(row, Some(kind)),
        );
        match parsed {
            (Some(s), Some(d), Some(k @ ("1" | "2"))) => out.push(CalendarDate {
                service_id: s.to_string(),
                date: d,
                added: k == "1",
            }),
            _ => diag.malformed("calendar_dates.txt"),
        }
    }
    Ok(out)
}

/// Which service context of a multi-day feed is simulated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServiceSelection {
    /// Every service whose weekly calendar runs on this weekday. Feeds with
    /// only `calendar_dates.txt` use the earliest listed date on that weekday.
    Weekday(Weekday),
    /// Explicit service ids.
    Services(Vec<String>),
    /// Every trip in the feed.
    All,
}

impl Default for ServiceSelection {
    fn default() -> Self {
        ServiceSelection::Weekday(Weekday::Mon)
    }
}

impl fmt::Display for ServiceSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceSelection::Weekday(d) => write!(f, "{}", weekday_name(*d)),
            ServiceSelection::Services(ids) => write!(f, "service:{}", ids.join(",")),
            ServiceSelection::All => write!(f, "all"),
        }
    }
}

fn weekday_name(d: Weekday) -> &'static str {
    match d {
        Weekday::Mon => "monday",
        Weekday::Tue => "tuesday",
        Weekday::Wed => "wednesday",
        Weekday::Thu => "thursday",
        Weekday::Fri => "friday",
        Weekday::Sat => "saturday",
        Weekday::Sun => "sunday",
    }
}

impl FromStr for ServiceSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(ServiceSelection::All);
        }
        if let Some(ids) = s.strip_prefix("service:") {
            let ids: Vec<String> = ids
                .split(',')
                .map(|i| i.trim().to_string())
                .filter(|i| !i.is_empty())
                .collect();
            if ids.is_empty() {
                return Err("empty service id list".into());
            }
            return Ok(ServiceSelection::Services(ids));
        }
        s.parse::<Weekday>()
            .map(ServiceSelection::Weekday)
            .map_err(|_| format!("unknown service selection '{s}' (weekday, 'all' or 'service:ID,..')"))
    }
}

/// Keeps the trips running on the selected service context.
pub fn select_service(db: &FeedDatabase, selection: &ServiceSelection) -> Vec<TripRecord> {
    let services: Option<BTreeSet<&str>> = match selection {
        ServiceSelection::All => None,
        ServiceSelection::Services(ids) => Some(ids.iter().map(String::as_str).collect()),
        ServiceSelection::Weekday(day) => {
            let idx = day.num_days_from_monday() as usize;
            let mut set: BTreeSet<&str> = db
                .calendar
                .iter()
                .filter(|c| c.days[idx])
                .map(|c| c.service_id.as_str())
                .collect();
            if db.calendar.is_empty() {
                let first = db
                    .calendar_dates
                    .iter()
                    .filter(|d| d.added && d.date.weekday() == *day)
                    .map(|d| d.date)
                    .min();
                if let Some(date) = first {
                    set.extend(
                        db.calendar_dates
                            .iter()
                            .filter(|d| d.added && d.date == date)
                            .map(|d| d.service_id.as_str()),
                    );
                }
            }
            Some(set)
        }
    };
    db.trips
        .iter()
        .filter(|t| {
            services
                .as_ref()
                .is_none_or(|s| s.contains(t.service_id.as_str()))
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_parsing() {
        assert_eq!(parse_time("08:00:00"), Some(8 * 3600));
        assert_eq!(parse_time(" 7:05:09"), Some(7 * 3600 + 5 * 60 + 9));
        assert_eq!(parse_time("25:10:00"), Some(25 * 3600 + 600));
        assert_eq!(parse_time("08:61:00"), None);
        assert_eq!(parse_time("garbage"), None);
    }

    #[test]
    fn service_selection_parsing() {
        assert_eq!(
            "monday".parse::<ServiceSelection>().unwrap(),
            ServiceSelection::Weekday(Weekday::Mon)
        );
        assert_eq!("all".parse::<ServiceSelection>().unwrap(), ServiceSelection::All);
        assert_eq!(
            "service:WK,WK2".parse::<ServiceSelection>().unwrap(),
            ServiceSelection::Services(vec!["WK".into(), "WK2".into()])
        );
        assert!("someday".parse::<ServiceSelection>().is_err());
        let s = ServiceSelection::Services(vec!["A".into()]);
        assert_eq!(s.to_string().parse::<ServiceSelection>().unwrap(), s);
    }

    #[test]
    fn blank_intermediate_times_are_interpolated() {
        let raw = vec![
            (1, "a".to_string(), Some(100), Some(100)),
            (2, "b".to_string(), None, None),
            (3, "c".to_string(), Some(200), Some(210)),
        ];
        let mut d = Diagnostics::default();
        let st = complete_times(&raw, &mut d).unwrap();
        assert_eq!(st[1].arrival, 150);
        assert_eq!(d.interpolated_times, 1);
        let open_end = vec![
            (1, "a".to_string(), Some(100), Some(100)),
            (2, "b".to_string(), None, None),
        ];
        assert!(complete_times(&open_end, &mut d).is_none());
    }
}
