//! Small GTFS feeds written to disk.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub fn hms(t: u32) -> String {
    format!("{:02}:{:02}:{:02}", t / 3600, t % 3600 / 60, t % 60)
}

/// Two crossing lines near (45.0, 9.0) run both ways every 15 minutes from
/// 06:00 to 09:00, one one-way shuttle, and two Saturday-only trips.
///
/// * `S1..S5`: west to east, about 300 m apart (route `R1`)
/// * `T1..T3`: south to north through `S3` (route `R2`)
/// * `R3`: `S1 -> T3` only, never returning
pub fn demo_feed(dir: &Path) {
    let dlon = 300.0 / (6_371_000.0 * 45f64.to_radians().cos()) * 180.0 / std::f64::consts::PI;
    let dlat = 300.0 / 6_371_000.0 * 180.0 / std::f64::consts::PI;
    let mut stops = String::from("stop_id,stop_name,stop_lat,stop_lon\n");
    for i in 0..5 {
        let _ = writeln!(stops, "S{},S{},45.0,{:.7}", i + 1, i + 1, 9.0 + dlon * i as f64);
    }
    let x3 = 9.0 + dlon * 2.0;
    for (k, j) in [(1, -1.0), (2, 1.0), (3, 2.0)] {
        let _ = writeln!(stops, "T{k},T{k},{:.7},{x3:.7}", 45.0 + dlat * j);
    }
    let routes = "route_id,route_short_name,route_type\nR1,1,3\nR2,2,3\nR3,3,3\n".to_string();
    let mut trips = String::from("route_id,service_id,trip_id,trip_headsign\n");
    let mut st = String::from("trip_id,arrival_time,departure_time,stop_id,stop_sequence\n");
    let mut add = |route: &str, service: &str, id: String, start: u32, seq: &[&str]| {
        let _ = writeln!(trips, "{route},{service},{id},");
        for (k, s) in seq.iter().enumerate() {
            let t = hms(start + 60 * k as u32);
            let _ = writeln!(st, "{id},{t},{t},{s},{}", k + 1);
        }
    };
    let east = ["S1", "S2", "S3", "S4", "S5"];
    let west = ["S5", "S4", "S3", "S2", "S1"];
    let north = ["T1", "S3", "T2", "T3"];
    let south = ["T3", "T2", "S3", "T1"];
    for k in 0..12u32 {
        let t = 6 * 3600 + 900 * k;
        add("R1", "WK", format!("r1e{k:02}"), t, &east);
        add("R1", "WK", format!("r1w{k:02}"), t + 120, &west);
        add("R2", "WK", format!("r2n{k:02}"), t + 30, &north);
        add("R2", "WK", format!("r2s{k:02}"), t + 150, &south);
    }
    add("R3", "WK", "r3a".into(), 7 * 3600, &["S1", "S2", "S3", "T2", "T3"]);
    add("R1", "SAT", "sat1".into(), 10 * 3600, &east);
    add("R1", "SAT", "sat2".into(), 11 * 3600, &west);
    let calendar = "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\n\
                    WK,1,1,1,1,1,0,0,20240101,20241231\n\
                    SAT,0,0,0,0,0,1,0,20240101,20241231\n";
    write(dir, &[
        ("stops.txt", stops),
        ("routes.txt", routes),
        ("trips.txt", trips),
        ("stop_times.txt", st),
        ("calendar.txt", calendar.to_string()),
    ]);
}

/// One-way shuttles only: every line is open.
pub fn open_only_feed(dir: &Path) {
    let stops = "stop_id,stop_name,stop_lat,stop_lon\nA,A,45.0,9.0\nB,B,45.0,9.01\n".to_string();
    let routes = "route_id,route_short_name,route_type\nX,x,3\n".to_string();
    let trips = "route_id,service_id,trip_id\nX,WK,x1\nX,WK,x2\n".to_string();
    let st = "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
              x1,08:00:00,08:00:00,A,1\nx1,08:10:00,08:10:00,B,2\n\
              x2,09:00:00,09:00:00,A,1\nx2,09:10:00,09:10:00,B,2\n"
        .to_string();
    let calendar = "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\n\
                    WK,1,1,1,1,1,0,0,20240101,20241231\n";
    write(dir, &[
        ("stops.txt", stops),
        ("routes.txt", routes),
        ("trips.txt", trips),
        ("stop_times.txt", st),
        ("calendar.txt", calendar.to_string()),
    ]);
}

pub fn write(dir: &Path, files: &[(&str, String)]) {
    fs::create_dir_all(dir).unwrap();
    for (name, body) in files {
        fs::write(dir.join(name), body).unwrap();
    }
}
