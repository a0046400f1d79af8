//! Planar geometry helpers shared by the topology builder and the
//! line-of-sight model. All coordinates are meters.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        let (dx, dy) = (self.b.x - self.a.x, self.b.y - self.a.y);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return self.a.distance(p);
        }
        let t = (((p.x - self.a.x) * dx + (p.y - self.a.y) * dy) / len2).clamp(0.0, 1.0);
        self.a.lerp(self.b, t).distance(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut bb = BoundingBox {
            min: first,
            max: first,
        };
        for p in it {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
        }
        Some(bb)
    }
}

/// Parameter interval `[t0, t1]` of the segment `p + t (q - p)`, `t` in `[0, 1]`,
/// lying inside the capsule of radius `r` around `s` (the Minkowski sum of
/// the street segment and a disk). The capsule is convex so the intersection
/// is a single interval.
pub fn capsule_interval(p: Point, q: Point, s: &Segment, r: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut merge = |iv: Option<(f64, f64)>| {
        if let Some((a, b)) = iv {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    };
    merge(disk_interval(p, q, s.a, r));
    merge(disk_interval(p, q, s.b, r));
    merge(slab_interval(p, q, s, r));
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    (lo <= hi).then_some((lo, hi))
}

fn disk_interval(p: Point, q: Point, c: Point, r: f64) -> Option<(f64, f64)> {
    let d = Point::new(q.x - p.x, q.y - p.y);
    let f = Point::new(p.x - c.x, p.y - c.y);
    let a = d.x * d.x + d.y * d.y;
    let c0 = f.x * f.x + f.y * f.y - r * r;
    if a == 0.0 {
        return (c0 <= 0.0).then_some((0.0, 1.0));
    }
    let b = 2.0 * (f.x * d.x + f.y * d.y);
    let disc = b * b - 4.0 * a * c0;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = (-b - sq) / (2.0 * a);
    let t1 = (-b + sq) / (2.0 * a);
    clip(t0, t1)
}

/// Intersection with the rectangle `{ along in [0, len], |across| <= r }`.
fn slab_interval(p: Point, q: Point, s: &Segment, r: f64) -> Option<(f64, f64)> {
    let len = s.length();
    if len == 0.0 {
        return None;
    }
    let u = Point::new((s.b.x - s.a.x) / len, (s.b.y - s.a.y) / len);
    let n = Point::new(-u.y, u.x);
    let rel = Point::new(p.x - s.a.x, p.y - s.a.y);
    let d = Point::new(q.x - p.x, q.y - p.y);
    let along0 = rel.x * u.x + rel.y * u.y;
    let along_d = d.x * u.x + d.y * u.y;
    let across0 = rel.x * n.x + rel.y * n.y;
    let across_d = d.x * n.x + d.y * n.y;
    let (a0, a1) = slab(along0, along_d, 0.0, len)?;
    let (b0, b1) = slab(across0, across_d, -r, r)?;
    clip(a0.max(b0), a1.min(b1))
}

fn slab(start: f64, rate: f64, min: f64, max: f64) -> Option<(f64, f64)> {
    if rate == 0.0 {
        return (start >= min && start <= max).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let t0 = (min - start) / rate;
    let t1 = (max - start) / rate;
    Some((t0.min(t1), t0.max(t1)))
}

fn clip(t0: f64, t1: f64) -> Option<(f64, f64)> {
    let lo = t0.max(0.0);
    let hi = t1.min(1.0);
    (lo <= hi).then_some((lo, hi))
}
