use std::collections::HashMap;

use crate::geometry::{capsule_interval, Point, Segment};

/// Street corridors for the line-of-sight test: every street segment
/// buffered laterally by `half_width`. Two points see each other iff the
/// straight segment joining them lies inside the union of corridors.
#[derive(Debug, Clone)]
pub struct StreetMap {
    segments: Vec<Segment>,
    half_width: f64,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<u32>>,
}

const COVER_EPS: f64 = 1e-9;

impl StreetMap {
    pub fn new(segments: Vec<Segment>, half_width: f64, cell: f64) -> Self {
        let cell = cell.max(1.0);
        let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, s) in segments.iter().enumerate() {
            let (c0, c1) = cell_range(s.a, s.b, half_width, cell);
            for cx in c0.0..=c1.0 {
                for cy in c0.1..=c1.1 {
                    grid.entry((cx, cy)).or_default().push(i as u32);
                }
            }
        }
        StreetMap {
            segments,
            half_width,
            cell,
            grid,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn line_of_sight(&self, p: Point, q: Point) -> bool {
        let (c0, c1) = cell_range(p, q, self.half_width, self.cell);
        let mut cand: Vec<u32> = Vec::new();
        for cx in c0.0..=c1.0 {
            for cy in c0.1..=c1.1 {
                if let Some(v) = self.grid.get(&(cx, cy)) {
                    cand.extend_from_slice(v);
                }
            }
        }
        cand.sort_unstable();
        cand.dedup();
        covered(
            p,
            q,
            cand.iter().map(|&i| &self.segments[i as usize]),
            self.half_width,
        )
    }

    /// Same predicate checked against every segment; the reference for the
    /// grid index.
    pub fn line_of_sight_exhaustive(&self, p: Point, q: Point) -> bool {
        covered(p, q, self.segments.iter(), self.half_width)
    }
}

fn cell_range(a: Point, b: Point, pad: f64, cell: f64) -> ((i64, i64), (i64, i64)) {
    let f = |v: f64| (v / cell).floor() as i64;
    (
        (f(a.x.min(b.x) - pad), f(a.y.min(b.y) - pad)),
        (f(a.x.max(b.x) + pad), f(a.y.max(b.y) + pad)),
    )
}

fn covered<'a, I: Iterator<Item = &'a Segment>>(p: Point, q: Point, segs: I, r: f64) -> bool {
    let mut ivs: Vec<(f64, f64)> = segs.filter_map(|s| capsule_interval(p, q, s, r)).collect();
    if ivs.is_empty() {
        return false;
    }
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = 0.0;
    for (a, b) in ivs {
        if a > reach + COVER_EPS {
            return false;
        }
        reach = f64::max(reach, b);
        if reach >= 1.0 - COVER_EPS {
            return true;
        }
    }
    false
}
