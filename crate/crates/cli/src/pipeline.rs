//! The pipeline stages. Each stage reads its inputs from and writes its
//! outputs to one bundle directory, so chaining the stages gives the same
//! files as a one-shot run.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use busnet::contacts::{
    activity_curves, inter_contact_samples, intra_contact_samples, summarize, ContactSummary,
};
use busnet::feed::synthetic::generate;
use busnet::feed::{extract, Diagnostics, TopologyBundle};
use busnet::mobility::{
    read_trace, run_mobility_with, write_bus_events, write_contacts, write_population,
    MobilityTrace, PositionWriter,
};
use busnet::provenance::Provenance;
use busnet::routing::{build_policy, PolicyTables};
use busnet::traffic::{
    generate_traffic, simulate, write_buffer_series, write_delay_cdf, write_packet_log,
    Disposition, MetricsReport, PacketSpec, TrafficConfig, TrafficError, TrafficOutcome,
};
use busnet::Tick;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOPOLOGY: &str = "topology.json";
pub const DIAGNOSTICS: &str = "diagnostics.txt";
pub const BUS_EVENTS: &str = "bus_events.csv";
pub const CONTACTS: &str = "contacts.csv";
pub const POPULATION: &str = "population.csv";
pub const POSITIONS: &str = "positions.csv";
pub const ACTIVITY: &str = "activity.csv";
pub const NEIGHBORS: &str = "neighbor_histogram.csv";
pub const INTRA_HIST: &str = "intra_contact_hist.csv";
pub const INTER_HIST: &str = "inter_contact_hist.csv";
pub const CONTACT_STATS: &str = "contact_stats.json";
pub const TABLES: &str = "routing_tables.json";
pub const MATRIX: &str = "encounter_matrix.csv";
pub const TRAFFIC_DIR: &str = "traffic";
pub const PACKETS: &str = "packets.csv";
pub const METRICS: &str = "metrics.json";
pub const DELAY_CDF: &str = "delay_cdf.csv";
pub const BUFFER: &str = "buffer.csv";
pub const COMPARISON: &str = "comparison.csv";
pub const QOS: &str = "qos.csv";
pub const SWEEP_DIR: &str = "sweep";
pub const SWEEP_BUFFER: &str = "buffer_max.csv";
pub const SWEEP_RATIO: &str = "delivery_ratio.csv";
pub const SWEEP_DELAY: &str = "delay.csv";
pub const REPORT: &str = "report.md";

/// A validated configuration bound to an output directory.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub config_hash: String,
}

impl Ctx {
    pub fn new(cfg: RunConfig, out: PathBuf) -> Result<Self, CliError> {
        cfg.validate()?;
        fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        Ok(Ctx {
            seed: cfg.seed()?,
            config_hash: cfg.hash(),
            cfg,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn provenance(&self, topology_hash: &str) -> Provenance {
        Provenance {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            topology_hash: topology_hash.to_string(),
        }
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::json(path, e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::json(path, e))
}

fn write_csv<T: Serialize>(
    path: &Path,
    prov: &Provenance,
    rows: impl IntoIterator<Item = T>,
) -> Result<(), CliError> {
    let mut buf = prov.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

fn save_topology(ctx: &Ctx, mut bundle: TopologyBundle, diag: &Diagnostics) -> Result<TopologyBundle, CliError> {
    let hash = bundle.content_hash();
    bundle.provenance = Some(ctx.provenance(&hash));
    write_json(&ctx.path(TOPOLOGY), &bundle)?;
    let text = format!(
        "{}{}\ntopology hash: {hash}\n",
        ctx.provenance(&hash).csv_comment(),
        diag
    );
    fs::write(ctx.path(DIAGNOSTICS), text).map_err(|e| CliError::io(&ctx.path(DIAGNOSTICS), e))?;
    log::info!("{} lines admitted, {} rejected", bundle.lines.len(), bundle.rejected.len());
    if bundle.lines.is_empty() {
        return Err(CliError::Data(format!(
            "no closed line in the feed ({} open lines rejected); nothing to simulate",
            bundle.rejected.len()
        )));
    }
    Ok(bundle)
}

/// Parses the configured GTFS feed into `topology.json`.
pub fn stage_extract(ctx: &Ctx) -> Result<TopologyBundle, CliError> {
    let (Some(feed), Some(ec)) = (&ctx.cfg.feed, ctx.cfg.extract_config()) else {
        return Err(CliError::Usage("extract needs a feed (--feed or [feed] path)".into()));
    };
    let (bundle, diag) = extract(&feed.path, &ec)?;
    save_topology(ctx, bundle, &diag)
}

/// Generates the synthetic city into `topology.json`.
pub fn stage_synth(ctx: &Ctx) -> Result<TopologyBundle, CliError> {
    let (bundle, diag) = generate(&ctx.cfg.synthetic)?;
    save_topology(ctx, bundle, &diag)
}

/// Extract when a feed is configured, synthesize otherwise.
pub fn stage_city(ctx: &Ctx) -> Result<TopologyBundle, CliError> {
    if ctx.cfg.feed.is_some() {
        stage_extract(ctx)
    } else {
        stage_synth(ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub provenance: Provenance,
    pub trace_id: String,
    pub buses: usize,
    pub trips: usize,
    pub start: Tick,
    pub end: Tick,
    pub total_contact_seconds: u64,
    pub peak_population: u32,
    pub peak_population_tick: Tick,
    pub summary: ContactSummary,
}

#[derive(Serialize)]
struct HistRow {
    bin_start_s: u32,
    count: u64,
}

fn histogram(samples: &[u32], bin: u32) -> Vec<HistRow> {
    let mut h: BTreeMap<u32, u64> = BTreeMap::new();
    for &s in samples {
        *h.entry(s / bin * bin).or_default() += 1;
    }
    h.into_iter()
        .map(|(bin_start_s, count)| HistRow { bin_start_s, count })
        .collect()
}

/// Replays the day from `topology.json`; writes the trace and contact
/// analytics.
pub fn stage_mobility(ctx: &Ctx) -> Result<MobilityTrace, CliError> {
    let bundle: TopologyBundle = read_json(&ctx.path(TOPOLOGY))?;
    let prov = ctx.provenance(&bundle.content_hash());
    let stride = ctx.cfg.output.position_stride;
    let mut positions = if stride > 0 {
        Some(PositionWriter::create(&ctx.path(POSITIONS), stride, Some(&prov))?)
    } else {
        let _ = fs::remove_file(ctx.path(POSITIONS));
        None
    };
    let trace = run_mobility_with(&bundle, &ctx.cfg.mobility, ctx.seed, |t, snaps| {
        if let Some(w) = positions.as_mut() {
            w.observe(t, snaps);
        }
    })?;
    if let Some(w) = positions {
        w.finish()?;
    }
    write_bus_events(&ctx.path(BUS_EVENTS), &trace, Some(&prov))?;
    write_contacts(&ctx.path(CONTACTS), &trace, Some(&prov))?;
    write_population(&ctx.path(POPULATION), &trace, Some(&prov))?;

    write_csv(
        &ctx.path(ACTIVITY),
        &prov,
        activity_curves(&trace, ctx.cfg.output.activity_bucket_s),
    )?;
    let summary = summarize(&trace);
    #[derive(Serialize)]
    struct NeighborRow {
        neighbors: usize,
        observations: u64,
        fraction: f64,
    }
    let norm = summary.neighbor_histogram.normalized();
    write_csv(
        &ctx.path(NEIGHBORS),
        &prov,
        summary
            .neighbor_histogram
            .counts
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &n)| NeighborRow {
                neighbors: k,
                observations: n,
                fraction: norm[k],
            }),
    )?;
    write_csv(&ctx.path(INTRA_HIST), &prov, histogram(&intra_contact_samples(&trace.contacts), 10))?;
    write_csv(&ctx.path(INTER_HIST), &prov, histogram(&inter_contact_samples(&trace.contacts), 60))?;

    let pop = trace.population();
    let (peak_i, peak) = pop
        .iter()
        .enumerate()
        .max_by_key(|&(i, &p)| (p, std::cmp::Reverse(i)))
        .map_or((0, 0), |(i, &p)| (i, p));
    let report = ContactReport {
        provenance: prov,
        trace_id: trace.trace_id(),
        buses: trace.buses.len(),
        trips: trace.total_trips(),
        start: trace.start,
        end: trace.end,
        total_contact_seconds: trace.contacts.iter().map(|c| u64::from(c.duration())).sum(),
        peak_population: peak,
        peak_population_tick: trace.start + peak_i as Tick,
        summary,
    };
    write_json(&ctx.path(CONTACT_STATS), &report)?;
    log::info!(
        "{} buses, {} trips, {} contacts",
        report.buses,
        report.trips,
        trace.contacts.len()
    );
    Ok(trace)
}

/// Trace and tables of a bundle, checked against each other.
pub struct TrafficInputs {
    pub trace: MobilityTrace,
    pub tables: PolicyTables,
    pub provenance: Provenance,
}

/// Loads the trace; builds the routing tables from it unless `tables` names
/// a file to use instead. Either way the tables are written to the bundle.
pub fn load_traffic_inputs(ctx: &Ctx, tables: Option<&Path>) -> Result<TrafficInputs, CliError> {
    let (trace, trace_prov) = read_trace(&ctx.out)?;
    let topology_hash = trace_prov
        .map(|p| p.topology_hash)
        .unwrap_or_else(|| "unknown".into());
    let prov = ctx.provenance(&topology_hash);
    let tables = match tables {
        Some(p) => read_json::<PolicyTables>(p)?,
        None => {
            let bundle: TopologyBundle = read_json(&ctx.path(TOPOLOGY))?;
            let mut t = PolicyTables::from_trace(&trace, &bundle.line_ids());
            t.provenance = Some(prov.clone());
            t
        }
    };
    let trace_id = trace.trace_id();
    if tables.trace_id != trace_id {
        return Err(TrafficError::VersionMismatch {
            trace: trace_id,
            tables: tables.trace_id,
        }
        .into());
    }
    write_json(&ctx.path(TABLES), &tables)?;
    let mut matrix = prov.csv_comment().into_bytes();
    tables
        .matrix
        .write_csv(&mut matrix)
        .map_err(|e| CliError::Data(format!("{MATRIX}: {e}")))?;
    fs::write(ctx.path(MATRIX), matrix).map_err(|e| CliError::io(&ctx.path(MATRIX), e))?;
    Ok(TrafficInputs {
        trace,
        tables,
        provenance: prov,
    })
}

/// Runs every `(policy, config)` job, in parallel when cores are available;
/// results come back in job order.
pub fn run_jobs(
    inputs: &TrafficInputs,
    seed: u64,
    jobs: &[(String, TrafficConfig)],
) -> Result<Vec<TrafficOutcome>, CliError> {
    // one packet stream per distinct config, shared by every policy
    let mut streams: Vec<(TrafficConfig, Vec<PacketSpec>)> = Vec::new();
    for (_, c) in jobs {
        if !streams.iter().any(|(sc, _)| sc == c) {
            let pk = generate_traffic(&inputs.trace, &inputs.tables.matrix.lines, c, seed);
            streams.push((c.clone(), pk));
        }
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(jobs.len())
        .max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TrafficOutcome, CliError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((name, c)) = jobs.get(i) else { break };
                let packets = &streams.iter().find(|(sc, _)| sc == c).unwrap().1;
                let r = build_policy(name, &inputs.tables, inputs.trace.buses.len())
                    .map_err(|e| CliError::Traffic(e.into()))
                    .map(|mut p| {
                        let mut o = simulate(&inputs.trace, p.as_mut(), c, packets);
                        o.report.trace_id = Some(inputs.tables.trace_id.clone());
                        o.report.provenance = Some(inputs.provenance.clone());
                        o
                    });
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    policy: &'a str,
    generated: u64,
    delivered: u64,
    delivery_ratio: f64,
    delay_median_h: Option<f64>,
    delay_mean_h: Option<f64>,
    delay_std_h: Option<f64>,
    delay_p90_h: Option<f64>,
    mean_hops: Option<f64>,
    end_of_day: u64,
    no_successor_bus: u64,
    rejected_at_source: u64,
    in_flight: u64,
    max_bus_buffer_bytes: u64,
    mean_copies: Option<f64>,
}

#[derive(Serialize)]
struct QosRow<'a> {
    policy: &'a str,
    within_minutes: u32,
    delivered: u64,
    fraction_of_generated: f64,
}

/// Runs the configured policies over one traffic stream and writes the
/// per-policy bundles, `comparison.csv` and `qos.csv`.
pub fn stage_traffic(ctx: &Ctx, tables: Option<&Path>) -> Result<Vec<MetricsReport>, CliError> {
    let inputs = load_traffic_inputs(ctx, tables)?;
    let jobs: Vec<(String, TrafficConfig)> = ctx
        .cfg
        .policies
        .iter()
        .map(|p| (p.clone(), ctx.cfg.traffic.clone()))
        .collect();
    let outcomes = run_jobs(&inputs, ctx.seed, &jobs)?;
    let prov = &inputs.provenance;
    let mut reports = Vec::new();
    let mut comparison = Vec::new();
    let mut qos = Vec::new();
    for ((name, _), o) in jobs.iter().zip(&outcomes) {
        let dir = ctx.out.join(TRAFFIC_DIR).join(name);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        write_packet_log(&dir.join(PACKETS), &o.packets, Some(prov))?;
        write_delay_cdf(&dir.join(DELAY_CDF), &o.packets, Some(prov))?;
        write_buffer_series(&dir.join(BUFFER), &o.buffer_series, Some(prov))?;
        write_json(&dir.join(METRICS), &o.report)?;
        let r = &o.report;
        log::info!(
            "{name}: {} of {} delivered ({:.1}%)",
            r.delivered,
            r.generated,
            100.0 * r.delivery_ratio
        );
        let d = r.delay_hours.as_ref();
        comparison.push((name.as_str(), r.clone(), d.cloned()));
        for &m in &ctx.cfg.output.qos_minutes {
            let within = o
                .packets
                .iter()
                .filter(|p| matches!(p.disposition, Disposition::Delivered { .. }))
                .filter(|p| p.delay().is_some_and(|d| d <= m * 60))
                .count() as u64;
            qos.push(QosRow {
                policy: name,
                within_minutes: m,
                delivered: within,
                fraction_of_generated: if r.generated == 0 {
                    0.0
                } else {
                    within as f64 / r.generated as f64
                },
            });
        }
        reports.push(o.report.clone());
    }
    write_csv(
        &ctx.path(COMPARISON),
        prov,
        comparison.iter().map(|(name, r, d)| ComparisonRow {
            policy: name,
            generated: r.generated,
            delivered: r.delivered,
            delivery_ratio: r.delivery_ratio,
            delay_median_h: d.as_ref().map(|d| d.median),
            delay_mean_h: d.as_ref().map(|d| d.mean),
            delay_std_h: d.as_ref().map(|d| d.std_dev),
            delay_p90_h: d.as_ref().map(|d| d.p90),
            mean_hops: r.mean_hops,
            end_of_day: r.drops["end_of_day"],
            no_successor_bus: r.drops["no_successor_bus"],
            rejected_at_source: r.drops["rejected_at_source"],
            in_flight: r.in_flight,
            max_bus_buffer_bytes: r.buffer.max_bus_bytes,
            mean_copies: r.replicas.as_ref().map(|x| x.mean_copies_per_packet),
        }),
    )?;
    write_csv(&ctx.path(QOS), prov, qos)?;
    Ok(reports)
}

/// One sweep point per (load, policy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub load: f64,
    pub policy: String,
    pub max_bus_bytes: u64,
    pub delivery_ratio: f64,
    pub mean_delay_h: Option<f64>,
    pub capacity_bytes: u64,
}

/// Offered-load sweep: one CSV per metric, a row per load, a column per
/// policy.
pub fn stage_sweep(ctx: &Ctx, tables: Option<&Path>) -> Result<Vec<SweepPoint>, CliError> {
    let inputs = load_traffic_inputs(ctx, tables)?;
    let mut jobs = Vec::new();
    for &load in &ctx.cfg.output.sweep_loads {
        for p in &ctx.cfg.policies {
            let c = TrafficConfig {
                rate_per_hour: load,
                ..ctx.cfg.traffic.clone()
            };
            jobs.push((p.clone(), c));
        }
    }
    let outcomes = run_jobs(&inputs, ctx.seed, &jobs)?;
    let points: Vec<SweepPoint> = jobs
        .iter()
        .zip(outcomes)
        .map(|((p, c), o)| SweepPoint {
            load: c.rate_per_hour,
            policy: p.clone(),
            max_bus_bytes: o.report.buffer.max_bus_bytes,
            delivery_ratio: o.report.delivery_ratio,
            mean_delay_h: o.report.delay_hours.map(|d| d.mean),
            capacity_bytes: c.buffer_capacity,
        })
        .collect();
    let dir = ctx.out.join(SWEEP_DIR);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let policies = &ctx.cfg.policies;
    let table = |f: &dyn Fn(&SweepPoint) -> String| -> String {
        let mut s = inputs.provenance.csv_comment();
        s.push_str("load_pkt_per_hour");
        for p in policies {
            s.push(',');
            s.push_str(p);
        }
        s.push('\n');
        for &load in &ctx.cfg.output.sweep_loads {
            s.push_str(&load.to_string());
            for p in policies {
                let pt = points
                    .iter()
                    .find(|x| x.load == load && &x.policy == p)
                    .expect("point");
                s.push(',');
                s.push_str(&f(pt));
            }
            s.push('\n');
        }
        s
    };
    let files: [(&str, String); 3] = [
        (SWEEP_BUFFER, table(&|p| p.max_bus_bytes.to_string())),
        (SWEEP_RATIO, table(&|p| p.delivery_ratio.to_string())),
        (
            SWEEP_DELAY,
            table(&|p| p.mean_delay_h.map(|d| d.to_string()).unwrap_or_default()),
        ),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(body.as_bytes()))
            .map_err(|e| CliError::io(&path, e))?;
    }
    Ok(points)
}
