use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::mobility::MobilityTrace;
use crate::{BusId, LineId, Tick};

/// A truncated probability in tenths: 0 (no edge) or 1 through 9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tenths(u8);

impl Tenths {
    pub const ZERO: Tenths = Tenths(0);

    pub fn new(k: u8) -> Option<Self> {
        (k <= 9).then_some(Tenths(k))
    }

    /// Exact truncation of `num / den` (`den > 0`, `num <= den`).
    pub fn from_ratio(num: u64, den: u64) -> Self {
        assert!(den > 0 && num <= den, "ratio {num}/{den} is not a probability");
        if num == 0 {
            return Tenths(0);
        }
        let k = (10 * num / den).clamp(1, 9);
        Tenths(k as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// One decimal truncation: `floor(10 p) / 10`, 1.0 becomes 0.9 and any
/// positive probability below 0.1 becomes 0.1 so its edge survives.
pub fn truncate_probability(p: f64) -> Tenths {
    assert!((0.0..=1.0).contains(&p), "probability {p} out of range");
    if p == 0.0 {
        return Tenths(0);
    }
    // the epsilon keeps values like 0.3 (stored as 0.2999..) in their decile
    let k = (p * 10.0 + 1e-9).floor() as i64;
    Tenths(k.clamp(1, 9) as u8)
}

/// Directed encounter counts between admitted lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterMatrix {
    /// Sorted line ids; row and column order.
    pub lines: Vec<LineId>,
    /// Trip cycles per line, the denominator.
    pub trips: Vec<u64>,
    /// `counts[i][j]`: trip cycles of line `i` with at least one contact with
    /// line `j`.
    pub counts: Vec<Vec<u64>>,
}

impl EncounterMatrix {
    pub fn from_counts(lines: Vec<LineId>, trips: Vec<u64>, counts: Vec<Vec<u64>>) -> Self {
        let n = lines.len();
        assert!(trips.len() == n && counts.len() == n && counts.iter().all(|r| r.len() == n));
        assert!(lines.windows(2).all(|w| w[0] < w[1]), "lines must be sorted");
        for i in 0..n {
            assert!(counts[i].iter().all(|&c| c <= trips[i]), "count above trips");
        }
        EncounterMatrix {
            lines,
            trips,
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn index(&self, line: LineId) -> Option<usize> {
        self.lines.binary_search(&line).ok()
    }

    /// `None` when line `i` has no trips.
    pub fn p(&self, i: usize, j: usize) -> Option<f64> {
        (self.trips[i] > 0).then(|| self.counts[i][j] as f64 / self.trips[i] as f64)
    }

    pub fn probability(&self, from: LineId, to: LineId) -> Option<f64> {
        self.p(self.index(from)?, self.index(to)?)
    }

    pub fn truncated(&self, i: usize, j: usize) -> Tenths {
        if self.trips[i] == 0 {
            Tenths::ZERO
        } else {
            Tenths::from_ratio(self.counts[i][j], self.trips[i])
        }
    }

    pub fn undefined_rows(&self) -> Vec<LineId> {
        self.lines
            .iter()
            .zip(&self.trips)
            .filter(|(_, &t)| t == 0)
            .map(|(&l, _)| l)
            .collect()
    }

    /// `from,to,trips,encounters,p,p_truncated` for every ordered pair of
    /// distinct lines with a defined row.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["from", "to", "trips", "encounters", "p", "p_truncated"])?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let Some(p) = self.p(i, j).filter(|_| i != j) else {
                    continue;
                };
                out.write_record([
                    self.lines[i].0.to_string(),
                    self.lines[j].0.to_string(),
                    self.trips[i].to_string(),
                    self.counts[i][j].to_string(),
                    format!("{p:.6}"),
                    format!("{:.1}", self.truncated(i, j).value()),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Tallies trip cycles and encounter cycles for every bus of the trace.
/// Lines absent from `lines` are ignored.
pub fn estimate_matrix(trace: &MobilityTrace, lines: &[LineId]) -> EncounterMatrix {
    let mut lines = lines.to_vec();
    lines.sort_unstable();
    lines.dedup();
    let n = lines.len();
    let idx: HashMap<LineId, usize> = lines.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    let mut per_bus: HashMap<BusId, Vec<(Tick, Tick, usize)>> = HashMap::new();
    for c in &trace.contacts {
        if let Some(&jb) = idx.get(&c.line_b) {
            per_bus.entry(c.bus_a).or_default().push((c.start, c.end, jb));
        }
        if let Some(&ja) = idx.get(&c.line_a) {
            per_bus.entry(c.bus_b).or_default().push((c.start, c.end, ja));
        }
    }

    let mut trips = vec![0u64; n];
    let mut counts = vec![vec![0u64; n]; n];
    let mut seen = vec![false; n];
    for bus in &trace.buses {
        let Some(&i) = idx.get(&bus.line_id) else {
            continue;
        };
        let contacts = per_bus.get(&bus.bus_id).map_or(&[][..], Vec::as_slice);
        for (s, e) in bus.trip_cycles() {
            trips[i] += 1;
            seen.iter_mut().for_each(|v| *v = false);
            for &(cs, ce, j) in contacts {
                if cs < e && ce > s {
                    seen[j] = true;
                }
            }
            for (j, &hit) in seen.iter().enumerate() {
                if hit {
                    counts[i][j] += 1;
                }
            }
        }
    }
    EncounterMatrix {
        lines,
        trips,
        counts,
    }
}
