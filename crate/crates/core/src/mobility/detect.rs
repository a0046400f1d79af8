use crate::geometry::Point;

use super::street::StreetMap;

/// Pairs `(i, j)`, `i < j`, of positions within `range` of each other and in
/// line of sight. Candidates come from a uniform grid with cell size `range`;
/// output is sorted.
pub fn detect_contacts(positions: &[Point], streets: &StreetMap, range: f64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    detect_into(positions, streets, range, &mut Vec::new(), &mut out);
    out
}

/// Allocation-reusing form of [`detect_contacts`] for the simulation loop.
pub(crate) fn detect_into(
    positions: &[Point],
    streets: &StreetMap,
    range: f64,
    cells: &mut Vec<((i64, i64), u32)>,
    out: &mut Vec<(u32, u32)>,
) {
    out.clear();
    cells.clear();
    let key = |p: Point| ((p.x / range).floor() as i64, (p.y / range).floor() as i64);
    cells.extend(positions.iter().enumerate().map(|(i, &p)| (key(p), i as u32)));
    cells.sort_unstable();
    for &((cx, cy), i) in cells.iter() {
        // own cell plus the four "forward" neighbours covers each cell pair once
        for (dx, dy) in [(0, 0), (1, -1), (1, 0), (1, 1), (0, 1)] {
            let target = (cx + dx, cy + dy);
            let lo = cells.partition_point(|c| c.0 < target);
            for &(c, j) in cells[lo..].iter() {
                if c != target {
                    break;
                }
                if (dx, dy) == (0, 0) && j <= i {
                    continue;
                }
                let (a, b) = (i.min(j), i.max(j));
                if in_contact(positions[a as usize], positions[b as usize], streets, range) {
                    out.push((a, b));
                }
            }
        }
    }
    out.sort_unstable();
}

fn in_contact(p: Point, q: Point, streets: &StreetMap, range: f64) -> bool {
    p.distance(q) <= range && streets.line_of_sight(p, q)
}

/// Quadratic reference implementation.
pub fn detect_contacts_all_pairs(
    positions: &[Point],
    streets: &StreetMap,
    range: f64,
) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if in_contact(positions[i], positions[j], streets, range) {
                out.push((i as u32, j as u32));
            }
        }
    }
    out
}
