//! Contact analytics over a mobility trace: intra- and inter-contact time
//! statistics, simultaneous-neighbour histograms and activity curves.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::mobility::{ContactEvent, MobilityTrace};
use crate::{BusId, LineId, Tick};

/// Summary of a sample of durations in seconds. Population standard
/// deviation; the median of an even sample is the lower middle value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactStats {
    pub median: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub sample_count: usize,
}

impl ContactStats {
    /// `None` for an empty sample.
    pub fn from_samples(samples: &[u32]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_unstable();
        let n = s.len() as f64;
        let mean = s.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = s.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
        Some(ContactStats {
            median: f64::from(s[(s.len() - 1) / 2]),
            mean,
            std_dev: var.sqrt(),
            sample_count: s.len(),
        })
    }
}

pub fn intra_contact_samples(contacts: &[ContactEvent]) -> Vec<u32> {
    contacts.iter().map(ContactEvent::duration).collect()
}

/// Statistics of contact durations; `None` when there are no contacts.
pub fn intra_contact_stats(contacts: &[ContactEvent]) -> Option<ContactStats> {
    ContactStats::from_samples(&intra_contact_samples(contacts))
}

/// Gaps between successive encounters of each bus with each line.
///
/// Encounters of one bus with different members of a line that overlap or
/// touch are merged into one exposure first, so the gaps are strictly
/// positive. Output is ordered by (bus, line, time).
pub fn inter_contact_samples(contacts: &[ContactEvent]) -> Vec<u32> {
    let mut exposure: BTreeMap<(BusId, LineId), Vec<(Tick, Tick)>> = BTreeMap::new();
    for c in contacts {
        exposure
            .entry((c.bus_a, c.line_b))
            .or_default()
            .push((c.start, c.end));
        exposure
            .entry((c.bus_b, c.line_a))
            .or_default()
            .push((c.start, c.end));
    }
    let mut out = Vec::new();
    for (_, mut ivs) in exposure {
        ivs.sort_unstable();
        let mut cur_end: Option<Tick> = None;
        for (s, e) in ivs {
            match cur_end {
                Some(end) if s <= end => cur_end = Some(end.max(e)),
                Some(end) => {
                    out.push(s - end);
                    cur_end = Some(e);
                }
                None => cur_end = Some(e),
            }
        }
    }
    out
}

pub fn inter_contact_stats(contacts: &[ContactEvent]) -> Option<ContactStats> {
    ContactStats::from_samples(&inter_contact_samples(contacts))
}

/// `counts[k]` is the number of (bus, tick) observations with exactly `k`
/// neighbours, for `k >= 1`. `counts[0]` is always 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborHistogram {
    pub counts: Vec<u64>,
}

impl NeighborHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

pub fn neighbor_histogram(contacts: &[ContactEvent]) -> NeighborHistogram {
    let mut per_bus: HashMap<BusId, Vec<(Tick, i32)>> = HashMap::new();
    for c in contacts {
        for b in [c.bus_a, c.bus_b] {
            let v = per_bus.entry(b).or_default();
            v.push((c.start, 1));
            v.push((c.end, -1));
        }
    }
    let mut counts: Vec<u64> = Vec::new();
    for (_, mut evs) in per_bus {
        evs.sort_unstable();
        let mut level = 0i32;
        let mut last = 0;
        for (t, d) in evs {
            if level > 0 {
                let k = level as usize;
                if counts.len() <= k {
                    counts.resize(k + 1, 0);
                }
                counts[k] += u64::from(t - last);
            }
            level += d;
            last = t;
        }
    }
    NeighborHistogram { counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRow {
    pub bucket_start: Tick,
    /// Mean number of present buses over the bucket.
    pub population: f64,
    /// Mean number of bus pairs in contact over the bucket.
    pub contacts: f64,
    /// Contact events starting in the bucket.
    pub contacts_started: u64,
}

/// Population and contact-count series in buckets of `bucket_s` seconds
/// aligned to midnight. Ticks outside the trace count as zero.
pub fn activity_curves(trace: &MobilityTrace, bucket_s: u32) -> Vec<ActivityRow> {
    let bucket_s = bucket_s.max(1);
    if trace.end <= trace.start {
        return Vec::new();
    }
    let first = trace.start / bucket_s;
    let last = (trace.end - 1) / bucket_s;
    let n = (last - first + 1) as usize;
    let mut pop = vec![0u64; n];
    for (i, &p) in trace.population().iter().enumerate() {
        let t = trace.start + i as Tick;
        pop[(t / bucket_s - first) as usize] += u64::from(p);
    }
    let mut active = vec![0u64; n];
    let mut started = vec![0u64; n];
    for c in &trace.contacts {
        started[(c.start / bucket_s - first) as usize] += 1;
        let mut t = c.start;
        while t < c.end {
            let b = t / bucket_s;
            let stop = ((b + 1) * bucket_s).min(c.end);
            active[(b - first) as usize] += u64::from(stop - t);
            t = stop;
        }
    }
    (0..n)
        .map(|i| ActivityRow {
            bucket_start: (first + i as u32) * bucket_s,
            population: pop[i] as f64 / f64::from(bucket_s),
            contacts: active[i] as f64 / f64::from(bucket_s),
            contacts_started: started[i],
        })
        .collect()
}

/// Total seconds of contact between buses of each unordered line pair
/// `(min, max)`, same-line pairs included.
pub fn line_pair_contact_seconds(contacts: &[ContactEvent]) -> BTreeMap<(LineId, LineId), u64> {
    let mut out = BTreeMap::new();
    for c in contacts {
        let key = (c.line_a.min(c.line_b), c.line_a.max(c.line_b));
        *out.entry(key).or_default() += u64::from(c.duration());
    }
    out
}

/// Everything the mobility stage reports about contacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSummary {
    pub total_contacts: usize,
    pub buses: usize,
    pub intra_contact: Option<ContactStats>,
    pub inter_contact: Option<ContactStats>,
    pub neighbor_histogram: NeighborHistogram,
}

pub fn summarize(trace: &MobilityTrace) -> ContactSummary {
    ContactSummary {
        total_contacts: trace.contacts.len(),
        buses: trace.buses.len(),
        intra_contact: intra_contact_stats(&trace.contacts),
        inter_contact: inter_contact_stats(&trace.contacts),
        neighbor_histogram: neighbor_histogram(&trace.contacts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(a: u32, b: u32, la: u32, lb: u32, start: Tick, end: Tick) -> ContactEvent {
        ContactEvent {
            start,
            end,
            bus_a: BusId(a),
            bus_b: BusId(b),
            line_a: LineId(la),
            line_b: LineId(lb),
        }
    }

    #[test]
    fn symmetric_and_singleton_samples() {
        let s = ContactStats::from_samples(&[10, 20, 30]).unwrap();
        assert_eq!((s.median, s.mean), (20.0, 20.0));
        let s = ContactStats::from_samples(&[45]).unwrap();
        assert_eq!((s.median, s.mean, s.std_dev), (45.0, 45.0, 0.0));
        assert_eq!(ContactStats::from_samples(&[4, 1, 3, 2]).unwrap().median, 2.0);
        assert!(ContactStats::from_samples(&[]).is_none());
        assert!(intra_contact_stats(&[]).is_none());
    }

    #[test]
    fn inter_contact_definition() {
        // bus 0 meets line 1 during [100,110) and [400,420)
        let log = [ev(0, 1, 0, 1, 100, 110), ev(0, 1, 0, 1, 400, 420)];
        let mut s = inter_contact_samples(&log);
        s.sort_unstable();
        // one gap for bus 0 towards line 1 and one for bus 1 towards line 0
        assert_eq!(s, vec![290, 290]);
        assert!(inter_contact_samples(&log[..1]).is_empty());
    }

    #[test]
    fn overlapping_members_merge_into_one_exposure() {
        // bus 0 (line 0) sees bus 1 then bus 2, both of line 5, overlapping,
        // then bus 3 of line 5 after a gap; bus 4 touches exactly at 200
        let log = [
            ev(0, 1, 0, 5, 100, 150),
            ev(0, 2, 0, 5, 140, 200),
            ev(0, 4, 0, 5, 200, 210),
            ev(0, 3, 0, 5, 300, 320),
        ];
        let s = inter_contact_samples(&log);
        // only bus 0 meets line 5 more than once
        assert_eq!(s, vec![90]);
    }

    #[test]
    fn clique_histogram() {
        let log = [ev(0, 1, 0, 0, 0, 10), ev(0, 2, 0, 0, 0, 10), ev(1, 2, 0, 0, 0, 10)];
        let h = neighbor_histogram(&log);
        assert_eq!(h.counts, vec![0, 0, 30]);
        assert_eq!(h.total(), 30);
        assert!(neighbor_histogram(&[]).counts.is_empty());
    }

    #[test]
    fn line_pair_totals() {
        let log = [ev(0, 1, 3, 1, 0, 10), ev(2, 3, 1, 3, 5, 25), ev(4, 5, 2, 2, 0, 7)];
        let t = line_pair_contact_seconds(&log);
        assert_eq!(t[&(LineId(1), LineId(3))], 30);
        assert_eq!(t[&(LineId(2), LineId(2))], 7);
    }
}
