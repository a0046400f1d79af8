mod common;

use std::fs;

use busnet::feed::{
    extract, filter_closed_lines, group_lines, parse_feed, project_coordinates, select_service,
    ExtractConfig, FeedError, GeoPoint, ServiceSelection,
};
use common::gtfs::{demo_feed, open_only_feed, write};
use proptest::prelude::*;

const MINIMAL_STOPS: &str = "stop_id,stop_lat,stop_lon\nA,45.0,9.0\nB,45.0,9.001\nC,45.0,9.002\nD,45.001,9.002\nE,45.002,9.002\n";
const CALENDAR: &str = "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\nWK,1,1,1,1,1,0,0,20240101,20241231\n";

fn minimal(dir: &std::path::Path, stop_times: &str) {
    write(dir, &[
        ("stops.txt", MINIMAL_STOPS.into()),
        ("routes.txt", "route_id,route_type\nR,3\n".into()),
        ("trips.txt", "route_id,service_id,trip_id\nR,WK,t1\nR,WK,t2\n".into()),
        ("stop_times.txt", stop_times.into()),
        ("calendar.txt", CALENDAR.into()),
    ]);
}

#[test]
fn one_route_two_trips_five_stops() {
    let d = tempfile::tempdir().unwrap();
    minimal(
        d.path(),
        "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
         t1,08:00:00,08:00:00,A,1\nt1,08:01:00,08:01:00,B,2\nt1,08:02:00,08:02:00,C,3\n\
         t1,08:03:00,08:03:00,D,4\nt1,08:04:00,08:04:00,E,5\n\
         t2,09:00:00,09:00:00,E,1\nt2,09:01:00,09:01:00,D,2\nt2,09:02:00,09:02:00,C,3\n\
         t2,09:03:00,09:03:00,B,4\nt2,09:04:00,09:04:00,A,5\n",
    );
    let db = parse_feed(d.path()).unwrap();
    assert_eq!((db.trips.len(), db.stops.len()), (2, 5));
    assert_eq!(db.trips[0].stop_times[4].arrival, 8 * 3600 + 240);
    let (bundle, diag) = extract(d.path(), &ExtractConfig::default()).unwrap();
    assert_eq!(bundle.lines.len(), 1);
    assert_eq!(diag.lines_admitted, 1);
}

#[test]
fn empty_stop_times_means_no_trips() {
    let d = tempfile::tempdir().unwrap();
    minimal(d.path(), "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n");
    assert!(matches!(
        extract(d.path(), &ExtractConfig::default()),
        Err(FeedError::NoTrips)
    ));
}

#[test]
fn unknown_stop_drops_the_trip() {
    let d = tempfile::tempdir().unwrap();
    minimal(
        d.path(),
        "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
         t1,08:00:00,08:00:00,A,1\nt1,08:01:00,08:01:00,B,2\n\
         t2,09:00:00,09:00:00,B,1\nt2,09:01:00,09:01:00,ZZ,2\n",
    );
    let db = parse_feed(d.path()).unwrap();
    assert_eq!(db.trips.len(), 1);
    assert_eq!(db.diagnostics.trips_unknown_stop, 1);
}

#[test]
fn missing_table_is_fatal() {
    let d = tempfile::tempdir().unwrap();
    minimal(d.path(), "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n");
    fs::remove_file(d.path().join("trips.txt")).unwrap();
    assert!(matches!(parse_feed(d.path()), Err(FeedError::MissingTable(_))));
}

#[test]
fn demo_feed_lines_and_services() {
    let d = tempfile::tempdir().unwrap();
    demo_feed(d.path());
    let db = parse_feed(d.path()).unwrap();
    let monday = select_service(&db, &ServiceSelection::default());
    assert_eq!(monday.len(), 49);
    let saturday = select_service(&db, &"saturday".parse().unwrap());
    assert_eq!(saturday.len(), 2);
    assert_eq!(select_service(&db, &ServiceSelection::All).len(), 51);

    let set = group_lines(&monday, 0.8).unwrap();
    // every selected trip departs exactly once across the lines
    let mut deps: Vec<String> = set
        .lines
        .iter()
        .flat_map(|l| l.departures.iter().map(|d| d.trip_id.clone()))
        .collect();
    deps.sort();
    let mut ids: Vec<String> = monday.iter().map(|t| t.trip_id.clone()).collect();
    ids.sort();
    assert_eq!(deps, ids);

    let n = set.lines.len();
    let (admitted, rejected) = filter_closed_lines(set.lines);
    assert_eq!(admitted.len() + rejected.len(), n);
    assert_eq!((admitted.len(), rejected.len()), (2, 1));

    let (bundle, _) = extract(d.path(), &ExtractConfig::default()).unwrap();
    assert_eq!(bundle.lines.len(), 2);
    assert_eq!(bundle.rejected.len(), 1);
    // stops roughly 300 m apart after projection around the centroid
    let pts = bundle.stop_points();
    let gap = pts["S1"].distance(pts["S2"]);
    assert!((gap - 300.0).abs() < 1.0, "{gap}");
    for l in &bundle.lines {
        assert!(l.is_closed);
        let hops = bundle.path(l.canonical()).unwrap().stops.len() - 1;
        assert!((l.mean_trip_time - 60.0 * hops as f64).abs() < 1e-9);
    }
}

#[test]
fn open_only_feed_admits_nothing() {
    let d = tempfile::tempdir().unwrap();
    open_only_feed(d.path());
    let (bundle, diag) = extract(d.path(), &ExtractConfig::default()).unwrap();
    assert!(bundle.lines.is_empty());
    assert_eq!(diag.lines_rejected, 1);
}

#[test]
fn projection_examples() {
    let o = GeoPoint { lat: 45.0, lon: 9.0 };
    let p = project_coordinates(45.0, 9.0, o);
    assert_eq!((p.x, p.y), (0.0, 0.0));
    let n = project_coordinates(45.001, 9.0, o);
    assert!((n.y - 111.19).abs() < 0.01 && n.x == 0.0);
    let e = project_coordinates(45.0, 9.001, o);
    assert!((e.x - 78.63).abs() < 0.01, "{}", e.x);
}

/// Great-circle distance, haversine form.
fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6_371_000.0 * h.sqrt().asin()
}

proptest! {
    #[test]
    fn local_distances_within_one_percent(
        lat0 in -60.0f64..60.0, lon0 in -170.0f64..170.0,
        a in (-0.06f64..0.06, -0.06f64..0.06), b in (-0.06f64..0.06, -0.06f64..0.06),
    ) {
        let o = GeoPoint { lat: lat0, lon: lon0 };
        let k = 1.0 / lat0.to_radians().cos();
        let pa = GeoPoint { lat: lat0 + a.0, lon: lon0 + a.1 * k };
        let pb = GeoPoint { lat: lat0 + b.0, lon: lon0 + b.1 * k };
        prop_assume!(haversine(o, pa) < 10_000.0 && haversine(o, pb) < 10_000.0);
        let truth = haversine(pa, pb);
        prop_assume!(truth > 50.0);
        let planar = project_coordinates(pa.lat, pa.lon, o).distance(project_coordinates(pb.lat, pb.lon, o));
        prop_assert!((planar - truth).abs() / truth < 0.01, "{planar} vs {truth}");
    }
}
