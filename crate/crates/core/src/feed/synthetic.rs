//! Desk-scale synthetic cities.
//!
//! A city is a Manhattan grid of intersections, each one a stop. Lines come in
//! three shapes: cross-city lines running edge to edge with one jog (served in
//! both directions), rings around the centre and small peripheral loops. Every
//! generated line is closed by construction.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::topology::{build_topology, TopologyBundle};
use super::{Diagnostics, FeedError, StopTime, TripRecord};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeMix {
    pub cross: f64,
    pub ring: f64,
    pub peripheral: f64,
}

impl Default for ShapeMix {
    fn default() -> Self {
        ShapeMix {
            cross: 0.5,
            ring: 0.2,
            peripheral: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCitySpec {
    pub grid_cols: u32,
    pub grid_rows: u32,
    /// Distance between neighbouring intersections, meters.
    pub block_m: f64,
    pub lines: u32,
    pub shape_mix: ShapeMix,
    /// Off-peak headway per direction, seconds.
    pub headway_s: u32,
    /// Headway inside rush windows; 0 disables rush hours.
    pub rush_headway_s: u32,
    pub rush_windows: Vec<(u32, u32)>,
    /// First and last scheduled departure window, seconds since midnight.
    pub service_start: u32,
    pub service_end: u32,
    pub speed_mps: f64,
    pub dwell_s: u32,
    /// Seed for the line layout and timetable phases (not the run seed).
    pub layout_seed: u64,
}

impl Default for SyntheticCitySpec {
    fn default() -> Self {
        SyntheticCitySpec {
            grid_cols: 26,
            grid_rows: 26,
            block_m: 400.0,
            lines: 50,
            shape_mix: ShapeMix::default(),
            headway_s: 1800,
            rush_headway_s: 900,
            rush_windows: vec![(7 * 3600, 9 * 3600), (17 * 3600, 19 * 3600)],
            service_start: 5 * 3600 + 1800,
            service_end: 22 * 3600,
            speed_mps: 7.0,
            dwell_s: 20,
            layout_seed: 1,
        }
    }
}

impl SyntheticCitySpec {
    /// A larger grid with few lines and long headways: low line density.
    pub fn sparse() -> Self {
        SyntheticCitySpec {
            grid_cols: 34,
            grid_rows: 34,
            block_m: 450.0,
            lines: 16,
            headway_s: 1800,
            rush_headway_s: 900,
            ..SyntheticCitySpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), FeedError> {
        let bad = |m: &str| Err(FeedError::InvalidConfig(m.to_string()));
        if self.grid_cols < 8 || self.grid_rows < 8 {
            return bad("synthetic grid must be at least 8x8");
        }
        if self.lines < 2 {
            return bad("synthetic city needs at least 2 lines");
        }
        if !(self.block_m > 0.0) || !(self.speed_mps > 0.0) {
            return bad("block length and speed must be positive");
        }
        if self.headway_s == 0 || self.service_end <= self.service_start {
            return bad("headway must be positive and the service window nonempty");
        }
        let m = &self.shape_mix;
        if m.cross < 0.0 || m.ring < 0.0 || m.peripheral < 0.0 || m.cross + m.ring + m.peripheral <= 0.0
        {
            return bad("shape mix weights must be nonnegative with a positive sum");
        }
        Ok(())
    }

    fn headway_at(&self, t: u32) -> u32 {
        if self.rush_headway_s > 0 && self.rush_windows.iter().any(|&(a, b)| t >= a && t < b) {
            self.rush_headway_s
        } else {
            self.headway_s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Cross,
    Ring,
    Peripheral,
}

type Node = (i32, i32);

fn stop_id((c, r): Node) -> String {
    format!("n{c}_{r}")
}

fn straight(from: Node, to: Node) -> Vec<Node> {
    let mut out = vec![from];
    let (mut c, mut r) = from;
    while (c, r) != to {
        c += (to.0 - c).signum();
        if c == to.0 {
            r += (to.1 - r).signum();
        }
        out.push((c, r));
    }
    out
}

fn chain(waypoints: &[Node]) -> Vec<Node> {
    let mut out: Vec<Node> = vec![waypoints[0]];
    for w in waypoints.windows(2) {
        out.extend(straight(w[0], w[1]).into_iter().skip(1));
    }
    out
}

fn rectangle(c0: i32, r0: i32, c1: i32, r1: i32) -> Vec<Node> {
    chain(&[(c0, r0), (c1, r0), (c1, r1), (c0, r1), (c0, r0)])
}

fn shape_counts(spec: &SyntheticCitySpec) -> Vec<Shape> {
    let m = &spec.shape_mix;
    let total = m.cross + m.ring + m.peripheral;
    let n = spec.lines as f64;
    let cross = (n * m.cross / total).round() as u32;
    let ring = ((n * (m.cross + m.ring) / total).round() as u32).saturating_sub(cross);
    let peri = spec.lines.saturating_sub(cross + ring);
    let mut out = Vec::new();
    out.extend(std::iter::repeat_n(Shape::Cross, cross as usize));
    out.extend(std::iter::repeat_n(Shape::Ring, ring as usize));
    out.extend(std::iter::repeat_n(Shape::Peripheral, peri as usize));
    out
}

fn layout(shape: Shape, spec: &SyntheticCitySpec, rng: &mut ChaCha8Rng) -> Vec<Node> {
    let (cols, rows) = (spec.grid_cols as i32, spec.grid_rows as i32);
    match shape {
        Shape::Cross => {
            let horizontal = rng.random_bool(0.5);
            let (len, width) = if horizontal { (cols, rows) } else { (rows, cols) };
            let a = rng.random_range(1..width - 1);
            let b = rng.random_range(1..width - 1);
            let turn = rng.random_range(2..len - 2);
            let pts: Vec<Node> = vec![(0, a), (turn, a), (turn, b), (len - 1, b)];
            let pts: Vec<Node> = if horizontal {
                pts
            } else {
                pts.into_iter().map(|(x, y)| (y, x)).collect()
            };
            chain(&pts)
        }
        Shape::Ring => {
            let (cx, cy) = (cols / 2, rows / 2);
            let max_k = (cols.min(rows) / 2 - 2).max(2);
            let kx = rng.random_range(2..=max_k);
            let ky = rng.random_range(2..=max_k);
            let jx = rng.random_range(-1..=1);
            let jy = rng.random_range(-1..=1);
            rectangle(cx - kx + jx, cy - ky + jy, cx + kx + jx, cy + ky + jy)
        }
        Shape::Peripheral => {
            let w = rng.random_range(2..=4);
            let h = rng.random_range(2..=4);
            let inset = rng.random_range(0..=2);
            let (c0, r0) = match rng.random_range(0..4) {
                0 => (rng.random_range(0..cols - w), inset),
                1 => (rng.random_range(0..cols - w), rows - 1 - h - inset),
                2 => (inset, rng.random_range(0..rows - h)),
                _ => (cols - 1 - w - inset, rng.random_range(0..rows - h)),
            };
            rectangle(c0, r0, c0 + w, r0 + h)
        }
    }
}

fn trip(
    id: String,
    route: &str,
    nodes: &[Node],
    start: u32,
    spec: &SyntheticCitySpec,
) -> TripRecord {
    let hop = (spec.block_m / spec.speed_mps).round().max(1.0) as u32;
    let mut t = start;
    let mut stop_times = Vec::with_capacity(nodes.len());
    for (i, &n) in nodes.iter().enumerate() {
        if i > 0 {
            t += hop;
        }
        let dwell = if i == 0 || i + 1 == nodes.len() {
            0
        } else {
            spec.dwell_s
        };
        stop_times.push(StopTime {
            stop_id: stop_id(n),
            arrival: t,
            departure: t + dwell,
        });
        t += dwell;
    }
    TripRecord {
        trip_id: id,
        service_id: "synthetic".into(),
        route_id: route.to_string(),
        headsign: stop_id(*nodes.last().unwrap()),
        stop_times,
    }
}

/// Builds the trips and planar stops of a synthetic city.
pub fn generate_trips(
    spec: &SyntheticCitySpec,
) -> Result<(Vec<TripRecord>, BTreeMap<String, Point>), FeedError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.layout_seed);
    let mut trips = Vec::new();
    let mut nodes_used = BTreeSet::new();
    let mut ends_used: BTreeSet<(Node, Node)> = BTreeSet::new();
    for (li, shape) in shape_counts(spec).into_iter().enumerate() {
        let mut nodes = layout(shape, spec, &mut rng);
        for _ in 0..32 {
            let ends = (nodes[0].min(*nodes.last().unwrap()), nodes[0].max(*nodes.last().unwrap()));
            if ends_used.insert(ends) {
                break;
            }
            nodes = layout(shape, spec, &mut rng);
        }
        nodes_used.extend(nodes.iter().copied());
        let route = format!("syn{li:03}");
        let phase = rng.random_range(0..spec.headway_s);
        let reversed: Vec<Node> = nodes.iter().rev().copied().collect();
        let mut t = spec.service_start + phase;
        let mut k = 0u32;
        while t < spec.service_end {
            trips.push(trip(format!("{route}-a-{k:04}"), &route, &nodes, t, spec));
            if shape == Shape::Cross {
                trips.push(trip(format!("{route}-b-{k:04}"), &route, &reversed, t, spec));
            }
            t += spec.headway_at(t);
            k += 1;
        }
    }
    let stops = nodes_used
        .into_iter()
        .map(|n| {
            (
                stop_id(n),
                Point::new(n.0 as f64 * spec.block_m, n.1 as f64 * spec.block_m),
            )
        })
        .collect();
    Ok((trips, stops))
}

/// Generates the city and runs it through the regular line grouping.
pub fn generate(spec: &SyntheticCitySpec) -> Result<(TopologyBundle, Diagnostics), FeedError> {
    let (trips, stops) = generate_trips(spec)?;
    let mut diag = Diagnostics {
        trips_selected: trips.len(),
        ..Diagnostics::default()
    };
    let bundle = build_topology(&trips, &stops, 0.8, "synthetic", None, &mut diag)?;
    Ok((bundle, diag))
}
