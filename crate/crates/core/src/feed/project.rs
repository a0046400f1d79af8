use serde::{Deserialize, Serialize};

use crate::geometry::Point;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

/// Equirectangular projection around `origin`:
/// `x = R * dlon * cos(lat0)`, `y = R * dlat` (angles in radians).
pub fn project_coordinates(lat: f64, lon: f64, origin: GeoPoint) -> Point {
    let dlat = (lat - origin.lat).to_radians();
    let dlon = (lon - origin.lon).to_radians();
    Point::new(
        EARTH_RADIUS_M * dlon * origin.lat.to_radians().cos(),
        EARTH_RADIUS_M * dlat,
    )
}

/// Arithmetic mean of the coordinates; the projection origin of a feed.
pub fn centroid<I: IntoIterator<Item = GeoPoint>>(points: I) -> Option<GeoPoint> {
    let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        lat += p.lat;
        lon += p.lon;
        n += 1;
    }
    (n > 0).then(|| GeoPoint {
        lat: lat / n as f64,
        lon: lon / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Great-circle distance, the reference the planar map is checked against.
    fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dp = p2 - p1;
        let dl = (b.lon - a.lon).to_radians();
        let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * h.sqrt().asin()
    }

    #[test]
    fn origin_maps_to_zero() {
        let o = GeoPoint {
            lat: 45.46,
            lon: 9.19,
        };
        assert_eq!(project_coordinates(o.lat, o.lon, o), Point::new(0.0, 0.0));
    }

    #[test]
    fn small_offsets() {
        let o = GeoPoint { lat: 45.0, lon: 7.0 };
        let north = project_coordinates(45.001, 7.0, o);
        assert!((north.y - 111.19).abs() < 0.01, "{north:?}");
        assert_eq!(north.x, 0.0);
        let east = project_coordinates(45.0, 7.001, o);
        assert!((east.x - 78.63).abs() < 0.01, "{east:?}");
        // same numbers from the great-circle reference
        assert!((haversine(o, GeoPoint { lat: 45.001, lon: 7.0 }) - 111.19).abs() < 0.01);
        assert!((haversine(o, GeoPoint { lat: 45.0, lon: 7.001 }) - 78.63).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn planar_distance_within_one_percent_near_origin(
            olat in -60.0f64..60.0, olon in -170.0f64..170.0,
            a in 0.0f64..std::f64::consts::TAU, ra in 100.0f64..10_000.0,
            b in 0.0f64..std::f64::consts::TAU, rb in 100.0f64..10_000.0,
        ) {
            let o = GeoPoint { lat: olat, lon: olon };
            // place points at ground distance ra/rb from the origin
            let to_geo = |ang: f64, r: f64| GeoPoint {
                lat: olat + (r * ang.sin() / EARTH_RADIUS_M).to_degrees(),
                lon: olon + (r * ang.cos() / (EARTH_RADIUS_M * olat.to_radians().cos())).to_degrees(),
            };
            let (ga, gb) = (to_geo(a, ra), to_geo(b, rb));
            prop_assume!(haversine(o, ga) <= 10_000.0 && haversine(o, gb) <= 10_000.0);
            let truth = haversine(ga, gb);
            prop_assume!(truth > 50.0);
            let pa = project_coordinates(ga.lat, ga.lon, o);
            let pb = project_coordinates(gb.lat, gb.lon, o);
            let planar = pa.distance(pb);
            prop_assert!((planar - truth).abs() / truth < 0.01, "planar {} truth {}", planar, truth);
        }
    }
}
