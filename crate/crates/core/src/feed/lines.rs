use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{FeedError, TripRecord};
use crate::{LineId, PathId};

/// Arrival and departure offset of one stop, in seconds from trip start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub arrive: u32,
    pub depart: u32,
}

/// A distinct stop sequence. `timings` are those of the first trip (by
/// `trip_id`) that runs it; departures with a different schedule carry their
/// own timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub path_id: PathId,
    pub stops: Vec<String>,
    pub timings: Vec<Timing>,
}

impl Path {
    pub fn first_stop(&self) -> &str {
        &self.stops[0]
    }

    pub fn last_stop(&self) -> &str {
        self.stops.last().expect("paths have at least two stops")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathRole {
    Canonical,
    Reversal,
    Alias,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberPath {
    pub path_id: PathId,
    pub role: PathRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Departure {
    pub trip_id: String,
    pub path_id: PathId,
    /// Scheduled start, seconds since midnight.
    pub start: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

impl Departure {
    pub fn timings<'a>(&'a self, path: &'a Path) -> &'a [Timing] {
        self.timings.as_deref().unwrap_or(&path.timings)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub line_id: LineId,
    pub label: String,
    pub members: Vec<MemberPath>,
    /// Sorted by `(start, trip_id)`.
    pub departures: Vec<Departure>,
    pub is_closed: bool,
    /// Mean scheduled trip duration in seconds.
    pub mean_trip_time: f64,
}

impl Line {
    pub fn canonical(&self) -> PathId {
        self.members[0].path_id
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineSet {
    /// Indexed by `PathId`.
    pub paths: Vec<Path>,
    pub lines: Vec<Line>,
    pub repaired_offsets: usize,
    pub skipped_trips: usize,
}

/// Offsets from the first arrival, with zero-length and negative hops
/// repaired to a one second minimum so interpolated speeds stay finite.
fn trip_timings(trip: &TripRecord, repaired: &mut usize) -> Vec<Timing> {
    let start = trip.stop_times[0].arrival;
    let mut out: Vec<Timing> = Vec::with_capacity(trip.stop_times.len());
    for st in &trip.stop_times {
        let mut arrive = st.arrival.saturating_sub(start);
        let mut depart = st.departure.saturating_sub(start).max(arrive);
        if let Some(prev) = out.last() {
            if arrive <= prev.depart {
                let shift = prev.depart + 1 - arrive;
                arrive += shift;
                depart = depart.max(arrive);
                *repaired += 1;
            }
        }
        depart = depart.max(arrive);
        out.push(Timing { arrive, depart });
    }
    out
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let sa: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let sb: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn same_ends(a: &[String], b: &[String]) -> bool {
    let ea = BTreeSet::from([&a[0], a.last().unwrap()]);
    let eb = BTreeSet::from([&b[0], b.last().unwrap()]);
    ea == eb
}

/// Groups trips into lines. Trips are processed in `trip_id` order; each
/// distinct stop sequence becomes a path, and each path joins the first line
/// it reverses (same stops in reverse order), otherwise the line whose
/// canonical path shares both end-of-line stops with Jaccard similarity of
/// the stop sets at least `alias_threshold` (best similarity, then lowest
/// line id), otherwise it founds a new line.
pub fn group_lines(trips: &[TripRecord], alias_threshold: f64) -> Result<LineSet, FeedError> {
    if trips.is_empty() {
        return Err(FeedError::NoTrips);
    }
    if !(alias_threshold > 0.0 && alias_threshold <= 1.0) {
        return Err(FeedError::InvalidConfig(format!(
            "alias threshold {alias_threshold} outside (0, 1]"
        )));
    }
    let mut sorted: Vec<&TripRecord> = trips.iter().collect();
    sorted.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));

    let mut set = LineSet::default();
    let mut path_by_stops: HashMap<Vec<String>, PathId> = HashMap::new();
    let mut trip_paths: Vec<(&TripRecord, PathId, Vec<Timing>)> = Vec::new();
    for trip in sorted {
        if trip.stop_times.len() < 2 {
            set.skipped_trips += 1;
            continue;
        }
        let stops: Vec<String> = trip.stop_times.iter().map(|s| s.stop_id.clone()).collect();
        let timings = trip_timings(trip, &mut set.repaired_offsets);
        let next_id = PathId(set.paths.len() as u32);
        let path_id = *path_by_stops.entry(stops.clone()).or_insert_with(|| {
            set.paths.push(Path {
                path_id: next_id,
                stops,
                timings: timings.clone(),
            });
            next_id
        });
        trip_paths.push((trip, path_id, timings));
    }
    if set.paths.is_empty() {
        return Err(FeedError::NoTrips);
    }

    let mut line_of_path: Vec<usize> = Vec::with_capacity(set.paths.len());
    for path in &set.paths {
        let reversed: Vec<String> = path.stops.iter().rev().cloned().collect();
        let reversal_of = set.lines.iter().position(|l: &Line| {
            l.members
                .iter()
                .any(|m| set.paths[m.path_id.index()].stops == reversed)
        });
        if let Some(li) = reversal_of {
            set.lines[li].members.push(MemberPath {
                path_id: path.path_id,
                role: PathRole::Reversal,
            });
            line_of_path.push(li);
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (li, line) in set.lines.iter().enumerate() {
            let canon = &set.paths[line.canonical().index()].stops;
            if !same_ends(canon, &path.stops) {
                continue;
            }
            let j = jaccard(canon, &path.stops);
            if j >= alias_threshold && best.is_none_or(|(_, bj)| j > bj) {
                best = Some((li, j));
            }
        }
        if let Some((li, _)) = best {
            set.lines[li].members.push(MemberPath {
                path_id: path.path_id,
                role: PathRole::Alias,
            });
            line_of_path.push(li);
            continue;
        }
        let line_id = LineId(set.lines.len() as u32);
        set.lines.push(Line {
            line_id,
            label: String::new(),
            members: vec![MemberPath {
                path_id: path.path_id,
                role: PathRole::Canonical,
            }],
            departures: Vec::new(),
            is_closed: false,
            mean_trip_time: 0.0,
        });
        line_of_path.push(set.lines.len() - 1);
    }

    for (trip, path_id, timings) in trip_paths {
        let line = &mut set.lines[line_of_path[path_id.index()]];
        if line.label.is_empty() {
            line.label = trip.route_id.clone();
        }
        let own = (timings != set.paths[path_id.index()].timings).then_some(timings);
        line.departures.push(Departure {
            trip_id: trip.trip_id.clone(),
            path_id,
            start: trip.stop_times[0].arrival,
            timings: own,
        });
    }
    for line in &mut set.lines {
        line.departures
            .sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.trip_id.cmp(&b.trip_id)));
        let total: f64 = line
            .departures
            .iter()
            .map(|d| d.timings(&set.paths[d.path_id.index()]).last().unwrap().arrive as f64)
            .sum();
        line.mean_trip_time = total / line.departures.len() as f64;
        line.is_closed = is_closed(line, &set.paths);
    }
    Ok(set)
}

/// A line is closed when its member paths, read as directed edges from first
/// to last stop, contain a cycle: buses finishing one path can start another
/// and eventually come back. Loops and canonical/reversal pairs qualify.
fn is_closed(line: &Line, paths: &[Path]) -> bool {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for m in &line.members {
        let p = &paths[m.path_id.index()];
        adj.entry(p.first_stop()).or_default().push(p.last_stop());
        adj.entry(p.last_stop()).or_default();
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<&str, u8> = adj.keys().map(|k| (*k, 0)).collect();
    fn dfs<'a>(
        n: &'a str,
        adj: &BTreeMap<&'a str, Vec<&'a str>>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> bool {
        state.insert(n, 1);
        for &m in &adj[n] {
            let sm = state[m];
            match sm {
                1 => return true,
                0 if dfs(m, adj, state) => return true,
                _ => {}
            }
        }
        state.insert(n, 2);
        false
    }
    let nodes: Vec<&str> = adj.keys().copied().collect();
    nodes
        .into_iter()
        .any(|n| state[n] == 0 && dfs(n, &adj, &mut state))
}

/// Splits lines into closed (admitted) and open (rejected) ones.
pub fn filter_closed_lines(lines: Vec<Line>) -> (Vec<Line>, Vec<Line>) {
    lines.into_iter().partition(|l| l.is_closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feed::StopTime;

    fn trip(id: &str, stops: &[&str], start: u32) -> TripRecord {
        TripRecord {
            trip_id: id.into(),
            service_id: "WK".into(),
            route_id: format!("r{}", &id[..1]),
            headsign: String::new(),
            stop_times: stops
                .iter()
                .enumerate()
                .map(|(i, s)| StopTime {
                    stop_id: s.to_string(),
                    arrival: start + 60 * i as u32,
                    departure: start + 60 * i as u32,
                })
                .collect(),
        }
    }

    #[test]
    fn reversal_joins_the_line() {
        let set = group_lines(
            &[trip("a1", &["A", "B", "C"], 0), trip("a2", &["C", "B", "A"], 600)],
            0.8,
        )
        .unwrap();
        assert_eq!(set.lines.len(), 1);
        let roles: Vec<PathRole> = set.lines[0].members.iter().map(|m| m.role).collect();
        assert_eq!(roles, vec![PathRole::Canonical, PathRole::Reversal]);
        assert!(set.lines[0].is_closed);
    }

    #[test]
    fn identical_paths_share_one_member() {
        let set = group_lines(
            &[trip("a1", &["A", "B", "C"], 0), trip("a2", &["A", "B", "C"], 900)],
            0.8,
        )
        .unwrap();
        assert_eq!(set.lines.len(), 1);
        assert_eq!(set.lines[0].members.len(), 1);
        assert_eq!(set.lines[0].departures.len(), 2);
        assert!(!set.lines[0].is_closed);
    }

    #[test]
    fn alias_by_jaccard() {
        // 10 stops; the alias swaps S5 for X5: |inter| = 9, |union| = 11 -> 0.818
        let canon = ["A", "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "Z"];
        let alias = ["A", "S1", "S2", "S3", "S4", "X5", "S6", "S7", "S8", "Z"];
        let trips = [trip("a1", &canon, 0), trip("a2", &alias, 100)];
        let set = group_lines(&trips, 0.8).unwrap();
        assert_eq!(set.lines.len(), 1);
        assert_eq!(set.lines[0].members[1].role, PathRole::Alias);
        // higher threshold splits them
        let set = group_lines(&trips, 0.85).unwrap();
        assert_eq!(set.lines.len(), 2);
    }

    #[test]
    fn alias_exact_point_nine() {
        // 10-stop path; alias drops one stop: |inter| = 9, |union| = 10 -> 0.9
        let canon = ["A", "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "Z"];
        let alias = ["A", "S1", "S2", "S3", "S4", "S6", "S7", "S8", "Z"];
        assert!((jaccard(&to_vec(&canon), &to_vec(&alias)) - 0.9).abs() < 1e-12);
        let set = group_lines(&[trip("a1", &canon, 0), trip("a2", &alias, 100)], 0.8).unwrap();
        assert_eq!(set.lines.len(), 1);
        assert_eq!(set.lines[0].members[1].role, PathRole::Alias);
    }

    fn to_vec(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn alias_requires_same_end_of_line_stops() {
        let canon = ["A", "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "Z"];
        let other = ["A", "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "Y"];
        let set = group_lines(&[trip("a1", &canon, 0), trip("a2", &other, 100)], 0.5).unwrap();
        assert_eq!(set.lines.len(), 2);
    }

    #[test]
    fn alias_tie_break_prefers_higher_similarity_then_lower_id() {
        let l0 = ["A", "B", "C", "D", "Z"];
        let l1 = ["A", "B", "C", "E", "Z"];
        // same stop set as l1 (Jaccard 1.0), 4/6 against l0
        let cand = ["A", "C", "B", "E", "Z"];
        let set = group_lines(
            &[trip("a", &l0, 0), trip("b", &l1, 0), trip("c", &cand, 0)],
            0.5,
        )
        .unwrap();
        // l1 and l0 are aliases of each other at 0.5 (4/6 = 0.67), so both join line 0
        assert_eq!(set.lines.len(), 1);
        let set = group_lines(
            &[trip("a", &l0, 0), trip("b", &l1, 0), trip("c", &cand, 0)],
            0.9,
        )
        .unwrap();
        assert_eq!(set.lines.len(), 2);
        // cand (set {A,B,C,E,Z}) equals l1's set exactly -> joins line 1
        assert_eq!(set.lines[1].members.len(), 2);
    }

    #[test]
    fn loops_are_closed_one_way_shuttles_are_open() {
        let set = group_lines(
            &[
                trip("a1", &["A", "B", "C", "A"], 0),
                trip("b1", &["S", "T", "U"], 0),
                trip("b2", &["S", "T", "U"], 1800),
            ],
            0.8,
        )
        .unwrap();
        let (admitted, rejected) = filter_closed_lines(set.lines);
        assert_eq!(admitted.len(), 1);
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].label, "rb");
    }

    #[test]
    fn zero_length_hops_are_repaired() {
        let mut t = trip("a1", &["A", "B", "C"], 100);
        t.stop_times[1].arrival = 100;
        t.stop_times[1].departure = 100;
        let set = group_lines(&[t], 0.8).unwrap();
        assert_eq!(set.repaired_offsets, 1);
        let tm = &set.paths[0].timings;
        assert_eq!(tm[1].arrive, 1);
        assert!(tm.windows(2).all(|w| w[1].arrive > w[0].depart));
        assert_eq!(set.lines[0].mean_trip_time, 120.0);
    }

    #[test]
    fn mean_trip_time_uses_each_departure() {
        let a = trip("a1", &["A", "B", "C"], 0);
        let mut b = trip("a2", &["A", "B", "C"], 1000);
        b.stop_times[2].arrival += 60;
        b.stop_times[2].departure += 60;
        let set = group_lines(&[a, b], 0.8).unwrap();
        let line = &set.lines[0];
        assert_eq!(line.mean_trip_time, 150.0);
        assert!(line.departures[0].timings.is_none());
        assert!(line.departures[1].timings.is_some());
    }

    #[test]
    fn rejects_bad_threshold_and_empty_input() {
        assert!(group_lines(&[], 0.8).is_err());
        assert!(group_lines(&[trip("a", &["A", "B"], 0)], 0.0).is_err());
        assert!(group_lines(&[trip("a", &["A", "B"], 0)], 1.5).is_err());
    }
}
