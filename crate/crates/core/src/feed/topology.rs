use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::gtfs::{parse_feed, select_service, ServiceSelection};
use super::lines::{filter_closed_lines, group_lines, Line, Path};
use super::project::{centroid, project_coordinates, GeoPoint};
use super::{Diagnostics, FeedError, TripRecord};
use crate::geometry::{BoundingBox, Point, Segment};
use crate::provenance::{hash_json, Provenance};
use crate::{LineId, PathId};

pub const TOPOLOGY_FORMAT: &str = "busnet-topology/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarStop {
    pub stop_id: String,
    pub x: f64,
    pub y: f64,
}

impl PlanarStop {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Planar street map: stops in meters and the street segments joining
/// consecutive stops of every admitted path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityTopology {
    /// Sorted by `stop_id`.
    pub stops: Vec<PlanarStop>,
    pub street_segments: Vec<Segment>,
    pub bbox: Option<BoundingBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedLine {
    pub line_id: LineId,
    pub label: String,
    pub departures: usize,
    pub reason: String,
}

/// Everything the mobility stage needs, serialized as `topology.json`.
///
/// Layout: `format` tag, optional `provenance`, `source` description,
/// projection `origin` (absent for synthetic cities), the planar `topology`,
/// the `paths` used by admitted lines (sorted by id), the admitted `lines`
/// with their departures, and the `rejected` open lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyBundle {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub source: String,
    pub origin: Option<GeoPoint>,
    pub topology: CityTopology,
    pub paths: Vec<Path>,
    pub lines: Vec<Line>,
    pub rejected: Vec<RejectedLine>,
}

impl TopologyBundle {
    /// Hash over the simulated content (stops, streets, paths, lines).
    pub fn content_hash(&self) -> String {
        hash_json(&(&self.topology, &self.paths, &self.lines))
    }

    pub fn path(&self, id: PathId) -> Option<&Path> {
        self.paths
            .binary_search_by_key(&id, |p| p.path_id)
            .ok()
            .map(|i| &self.paths[i])
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.lines
            .binary_search_by_key(&id, |l| l.line_id)
            .ok()
            .map(|i| &self.lines[i])
    }

    pub fn line_ids(&self) -> Vec<LineId> {
        self.lines.iter().map(|l| l.line_id).collect()
    }

    pub fn stop_points(&self) -> HashMap<&str, Point> {
        self.topology
            .stops
            .iter()
            .map(|s| (s.stop_id.as_str(), s.point()))
            .collect()
    }

    pub fn mean_trip_times(&self) -> BTreeMap<LineId, f64> {
        self.lines
            .iter()
            .map(|l| (l.line_id, l.mean_trip_time))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub service: ServiceSelection,
    pub alias_threshold: f64,
    /// Keep only routes of these GTFS route types (`None` keeps all).
    pub route_types: Option<Vec<u16>>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            service: ServiceSelection::default(),
            alias_threshold: 0.8,
            route_types: None,
        }
    }
}

/// Groups trips into lines, keeps the closed ones and builds the street map.
/// `stops` gives planar coordinates for every stop id.
pub fn build_topology(
    trips: &[TripRecord],
    stops: &BTreeMap<String, Point>,
    alias_threshold: f64,
    source: &str,
    origin: Option<GeoPoint>,
    diag: &mut Diagnostics,
) -> Result<TopologyBundle, FeedError> {
    let set = group_lines(trips, alias_threshold)?;
    diag.repaired_offsets += set.repaired_offsets;
    diag.trips_too_short += set.skipped_trips;
    let (admitted, rejected) = filter_closed_lines(set.lines);
    diag.lines_admitted = admitted.len();
    diag.lines_rejected = rejected.len();

    let used_paths: BTreeSet<PathId> = admitted
        .iter()
        .flat_map(|l| l.members.iter().map(|m| m.path_id))
        .collect();
    let paths: Vec<Path> = used_paths
        .iter()
        .map(|id| set.paths[id.index()].clone())
        .collect();

    let mut used_stops = BTreeSet::new();
    let mut seen_pairs = HashSet::new();
    let mut segments = Vec::new();
    for line in &admitted {
        for m in &line.members {
            let p = &set.paths[m.path_id.index()];
            for s in &p.stops {
                used_stops.insert(s.clone());
            }
            for w in p.stops.windows(2) {
                let key = if w[0] <= w[1] {
                    (w[0].as_str(), w[1].as_str())
                } else {
                    (w[1].as_str(), w[0].as_str())
                };
                if w[0] == w[1] || !seen_pairs.insert(key) {
                    continue;
                }
                let a = *stops
                    .get(&w[0])
                    .ok_or_else(|| FeedError::MissingStop(w[0].clone()))?;
                let b = *stops
                    .get(&w[1])
                    .ok_or_else(|| FeedError::MissingStop(w[1].clone()))?;
                if a != b {
                    segments.push(Segment::new(a, b));
                }
            }
        }
    }
    let planar: Vec<PlanarStop> = used_stops
        .into_iter()
        .map(|id| {
            let p = *stops
                .get(&id)
                .ok_or_else(|| FeedError::MissingStop(id.clone()))?;
            Ok(PlanarStop {
                stop_id: id,
                x: p.x,
                y: p.y,
            })
        })
        .collect::<Result<_, FeedError>>()?;
    let bbox = BoundingBox::from_points(planar.iter().map(PlanarStop::point));

    Ok(TopologyBundle {
        format: TOPOLOGY_FORMAT.to_string(),
        provenance: None,
        source: source.to_string(),
        origin,
        topology: CityTopology {
            stops: planar,
            street_segments: segments,
            bbox,
        },
        paths,
        lines: admitted,
        rejected: rejected
            .into_iter()
            .map(|l| RejectedLine {
                line_id: l.line_id,
                label: l.label,
                departures: l.departures.len(),
                reason: "open line: member paths never return to a departure stop".into(),
            })
            .collect(),
    })
}

/// Parses a feed directory and builds its topology.
pub fn extract(
    dir: &FsPath,
    config: &ExtractConfig,
) -> Result<(TopologyBundle, Diagnostics), FeedError> {
    let db = parse_feed(dir)?;
    let mut diag = db.diagnostics.clone();
    let mut trips = select_service(&db, &config.service);
    if let Some(types) = &config.route_types {
        let keep: HashSet<&str> = db
            .routes
            .iter()
            .filter(|r| r.route_type.is_some_and(|t| types.contains(&t)))
            .map(|r| r.route_id.as_str())
            .collect();
        trips.retain(|t| keep.contains(t.route_id.as_str()));
    }
    diag.trips_selected = trips.len();
    if trips.is_empty() {
        return Err(FeedError::NoTrips);
    }
    let origin = centroid(db.stops.iter().map(|s| GeoPoint {
        lat: s.lat,
        lon: s.lon,
    }))
    .ok_or(FeedError::NoTrips)?;
    let planar: BTreeMap<String, Point> = db
        .stops
        .iter()
        .map(|s| (s.stop_id.clone(), project_coordinates(s.lat, s.lon, origin)))
        .collect();
    let source = format!(
        "gtfs:{}",
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    );
    let bundle = build_topology(
        &trips,
        &planar,
        config.alias_threshold,
        &source,
        Some(origin),
        &mut diag,
    )?;
    Ok((bundle, diag))
}
