//! Traffic metrics and their file forms.
//!
//! * packet log: `packet_id,created_at,source_bus,source_line,dest_line,disposition,reason,end_tick,delay_s,hops,copies`
//! * delay CDF: `minute,delivered,fraction_of_delivered,fraction_of_generated`
//! * buffer series: `tick,total_bytes,max_bus_bytes,buses_holding,packets_stored`

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{drop_counts, Disposition, Packet, TrafficConfig, TrafficError};
use crate::provenance::Provenance;
use crate::{BusId, LineId, Tick};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct EngineCounters {
    pub transfers: u64,
    pub handoffs: u64,
    pub merged: u64,
    pub stored_bytes: u64,
    pub max_total_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferSample {
    pub tick: Tick,
    pub total_bytes: u64,
    pub max_bus_bytes: u64,
    pub buses_holding: u32,
    pub packets_stored: u64,
}

/// Delays in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub median: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub p25: f64,
    pub p75: f64,
    pub p90: f64,
    pub max: f64,
}

impl DelayStats {
    /// Nearest-rank quantiles; `None` for an empty sample.
    pub fn from_seconds(delays: &[Tick]) -> Option<Self> {
        if delays.is_empty() {
            return None;
        }
        let mut s: Vec<f64> = delays.iter().map(|&d| f64::from(d) / 3600.0).collect();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let q = |p: f64| s[((p * n).ceil() as usize).clamp(1, s.len()) - 1];
        Some(DelayStats {
            median: s[(s.len() - 1) / 2],
            mean,
            std_dev: var.sqrt(),
            p25: q(0.25),
            p75: q(0.75),
            p90: q(0.90),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferReport {
    pub capacity_bytes: u64,
    /// Largest occupancy any single bus reached.
    pub max_bus_bytes: u64,
    /// Largest sum over all buses at any moment.
    pub max_total_bytes: u64,
    /// Mean over buses of their own maximum.
    pub mean_bus_max_bytes: f64,
    pub busiest_bus: Option<BusId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaStats {
    pub total_copies: u64,
    pub mean_copies_per_packet: f64,
    pub max_copies: u32,
    /// Copies merged into a successor that already held one.
    pub merged_at_handoff: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBucket {
    pub bucket_start: Tick,
    pub generated: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: String,
    pub config: TrafficConfig,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub drops: BTreeMap<String, u64>,
    pub delivery_ratio: f64,
    pub delay_hours: Option<DelayStats>,
    pub mean_hops: Option<f64>,
    pub contact_transfers: u64,
    pub handoffs: u64,
    pub buffer: BufferReport,
    pub replicas: Option<ReplicaStats>,
    /// Five-minute buckets, aligned to midnight.
    pub per_5min: Vec<TimeBucket>,
    pub delivered_by_dest_line: BTreeMap<LineId, u64>,
    pub trace_id: Option<String>,
    pub provenance: Option<Provenance>,
}

impl MetricsReport {
    pub(crate) fn compute(
        policy: &str,
        config: &TrafficConfig,
        packets: &[Packet],
        per_bus_max: &[u64],
        counters: EngineCounters,
        multi: bool,
    ) -> Self {
        let generated = packets.len() as u64;
        let mut delivered = 0u64;
        let mut in_flight = 0u64;
        let mut delays = Vec::new();
        let mut hops = 0u64;
        let mut by_dest: BTreeMap<LineId, u64> = BTreeMap::new();
        let mut buckets: BTreeMap<Tick, (u64, u64)> = BTreeMap::new();
        for p in packets {
            buckets.entry(p.spec.created_at / 300 * 300).or_default().0 += 1;
            match p.disposition {
                Disposition::Delivered { tick } => {
                    delivered += 1;
                    delays.push(tick - p.spec.created_at);
                    hops += u64::from(p.hops);
                    *by_dest.entry(p.spec.dest_line).or_default() += 1;
                    buckets.entry(tick / 300 * 300).or_default().1 += 1;
                }
                Disposition::InFlight => in_flight += 1,
                Disposition::Dropped { .. } => {}
            }
        }
        let drops: BTreeMap<String, u64> = drop_counts(packets)
            .into_iter()
            .map(|(r, n)| (r.as_str().to_string(), n))
            .collect();
        let dropped = drops.values().sum();
        let busiest = per_bus_max
            .iter()
            .enumerate()
            .max_by_key(|&(i, &m)| (m, std::cmp::Reverse(i)))
            .filter(|&(_, &m)| m > 0)
            .map(|(i, _)| BusId(i as u32));
        let replicas = multi.then(|| {
            let total: u64 = packets.iter().map(|p| u64::from(p.copies)).sum();
            ReplicaStats {
                total_copies: total,
                mean_copies_per_packet: if generated == 0 {
                    0.0
                } else {
                    total as f64 / generated as f64
                },
                max_copies: packets.iter().map(|p| p.copies).max().unwrap_or(0),
                merged_at_handoff: counters.merged,
            }
        });
        MetricsReport {
            policy: policy.to_string(),
            config: config.clone(),
            generated,
            delivered,
            dropped,
            in_flight,
            drops,
            delivery_ratio: if generated == 0 {
                0.0
            } else {
                delivered as f64 / generated as f64
            },
            delay_hours: DelayStats::from_seconds(&delays),
            mean_hops: (delivered > 0).then(|| hops as f64 / delivered as f64),
            contact_transfers: counters.transfers,
            handoffs: counters.handoffs,
            buffer: BufferReport {
                capacity_bytes: config.buffer_capacity,
                max_bus_bytes: per_bus_max.iter().copied().max().unwrap_or(0),
                max_total_bytes: counters.max_total_bytes,
                mean_bus_max_bytes: if per_bus_max.is_empty() {
                    0.0
                } else {
                    per_bus_max.iter().sum::<u64>() as f64 / per_bus_max.len() as f64
                },
                busiest_bus: busiest,
            },
            replicas,
            per_5min: buckets
                .into_iter()
                .map(|(bucket_start, (generated, delivered))| TimeBucket {
                    bucket_start,
                    generated,
                    delivered,
                })
                .collect(),
            delivered_by_dest_line: by_dest,
            trace_id: None,
            provenance: None,
        }
    }

    /// generated = delivered + dropped + in flight
    pub fn conserves(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub minute: u32,
    pub delivered: u64,
    pub fraction_of_delivered: f64,
    pub fraction_of_generated: f64,
}

/// Packets delivered within each whole minute, from 0 to the largest delay.
pub fn delay_cdf(packets: &[Packet]) -> Vec<CdfRow> {
    let mut minutes: Vec<u32> = packets
        .iter()
        .filter_map(Packet::delay)
        .map(|d| d.div_ceil(60))
        .collect();
    if minutes.is_empty() {
        return Vec::new();
    }
    minutes.sort_unstable();
    let total = minutes.len() as f64;
    let generated = packets.len() as f64;
    let last = *minutes.last().unwrap();
    let mut k = 0usize;
    (0..=last)
        .map(|m| {
            while k < minutes.len() && minutes[k] <= m {
                k += 1;
            }
            CdfRow {
                minute: m,
                delivered: k as u64,
                fraction_of_delivered: k as f64 / total,
                fraction_of_generated: k as f64 / generated,
            }
        })
        .collect()
}

fn writer(path: &Path, prov: Option<&Provenance>) -> Result<csv::Writer<BufWriter<File>>, TrafficError> {
    let io = |e| TrafficError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    if let Some(p) = prov {
        w.write_all(p.csv_comment().as_bytes()).map_err(io)?;
    }
    Ok(csv::Writer::from_writer(w))
}

fn write_all<T: Serialize>(
    path: &Path,
    prov: Option<&Provenance>,
    rows: impl IntoIterator<Item = T>,
) -> Result<(), TrafficError> {
    let csv_err = |e| TrafficError::Csv {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = writer(path, prov)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| TrafficError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[derive(Serialize)]
struct PacketRow {
    packet_id: u32,
    created_at: Tick,
    source_bus: BusId,
    source_line: LineId,
    dest_line: LineId,
    disposition: &'static str,
    reason: &'static str,
    end_tick: Option<Tick>,
    delay_s: Option<Tick>,
    hops: u32,
    copies: u32,
}

pub fn write_packet_log(
    path: &Path,
    packets: &[Packet],
    prov: Option<&Provenance>,
) -> Result<(), TrafficError> {
    write_all(
        path,
        prov,
        packets.iter().map(|p| {
            let (disposition, reason, end_tick) = match p.disposition {
                Disposition::InFlight => ("in_flight", "", None),
                Disposition::Delivered { tick } => ("delivered", "", Some(tick)),
                Disposition::Dropped { reason, tick } => ("dropped", reason.as_str(), Some(tick)),
            };
            PacketRow {
                packet_id: p.spec.packet_id.0,
                created_at: p.spec.created_at,
                source_bus: p.spec.source_bus,
                source_line: p.spec.source_line,
                dest_line: p.spec.dest_line,
                disposition,
                reason,
                end_tick,
                delay_s: p.delay(),
                hops: p.hops,
                copies: p.copies,
            }
        }),
    )
}

pub fn write_delay_cdf(
    path: &Path,
    packets: &[Packet],
    prov: Option<&Provenance>,
) -> Result<(), TrafficError> {
    write_all(path, prov, delay_cdf(packets))
}

pub fn write_buffer_series(
    path: &Path,
    samples: &[BufferSample],
    prov: Option<&Provenance>,
) -> Result<(), TrafficError> {
    write_all(path, prov, samples.iter().copied())
}
