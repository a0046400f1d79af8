//! Markdown summaries of a bundle directory, and side-by-side diffs of two.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use busnet::feed::TopologyBundle;
use busnet::provenance::Provenance;
use busnet::traffic::MetricsReport;

use crate::error::CliError;
use crate::pipeline::{
    read_json, ContactReport, BUS_EVENTS, COMPARISON, CONTACTS, CONTACT_STATS, METRICS,
    PACKETS, QOS, SWEEP_BUFFER, SWEEP_DELAY, SWEEP_DIR, SWEEP_RATIO, TABLES, TOPOLOGY,
    TRAFFIC_DIR,
};

/// What could be read from a bundle; missing parts are listed in `gaps`.
pub struct Bundle {
    pub dir: PathBuf,
    pub topology: Option<TopologySummary>,
    pub contacts: Option<ContactReport>,
    pub policies: Vec<(String, MetricsReport)>,
    pub gaps: Vec<String>,
}

pub struct TopologySummary {
    pub source: String,
    pub lines: usize,
    pub rejected: usize,
    pub stops: usize,
    pub hash: String,
    pub provenance: Option<Provenance>,
}

impl Bundle {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::Data(format!("{} is not a bundle directory", dir.display())));
        }
        let mut gaps = Vec::new();
        let topology = match dir.join(TOPOLOGY).exists() {
            true => {
                let b: TopologyBundle = read_json(&dir.join(TOPOLOGY))?;
                Some(TopologySummary {
                    source: b.source.clone(),
                    lines: b.lines.len(),
                    rejected: b.rejected.len(),
                    stops: b.topology.stops.len(),
                    hash: b.content_hash(),
                    provenance: b.provenance.clone(),
                })
            }
            false => {
                gaps.push(format!("{TOPOLOGY} (city stage not run)"));
                None
            }
        };
        for f in [BUS_EVENTS, CONTACTS] {
            if !dir.join(f).exists() {
                gaps.push(format!("{f} (mobility stage not run or interrupted)"));
            }
        }
        let contacts = if dir.join(CONTACT_STATS).exists() {
            Some(read_json::<ContactReport>(&dir.join(CONTACT_STATS))?)
        } else {
            gaps.push(format!("{CONTACT_STATS} (contact analytics missing)"));
            None
        };
        let mut policies = Vec::new();
        let tdir = dir.join(TRAFFIC_DIR);
        if tdir.is_dir() {
            let mut names: Vec<String> = fs::read_dir(&tdir)
                .map_err(|e| CliError::io(&tdir, e))?
                .filter_map(|e| e.ok())
                .filter(|e| e.path().is_dir())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect();
            names.sort();
            for n in names {
                let m = tdir.join(&n).join(METRICS);
                if m.exists() {
                    policies.push((n.clone(), read_json::<MetricsReport>(&m)?));
                } else {
                    gaps.push(format!("{TRAFFIC_DIR}/{n}/{METRICS} (policy run interrupted)"));
                }
                if !tdir.join(&n).join(PACKETS).exists() {
                    gaps.push(format!("{TRAFFIC_DIR}/{n}/{PACKETS}"));
                }
            }
        } else {
            gaps.push(format!("{TRAFFIC_DIR}/ (traffic stage not run)"));
        }
        for f in [TABLES, COMPARISON, QOS] {
            if !dir.join(f).exists() && tdir.is_dir() {
                gaps.push(f.to_string());
            }
        }
        if topology.is_none() && contacts.is_none() && policies.is_empty() {
            return Err(CliError::Data(format!(
                "{} holds no bundle files ({TOPOLOGY}, {CONTACT_STATS}, {TRAFFIC_DIR}/*/{METRICS})",
                dir.display()
            )));
        }
        Ok(Bundle {
            dir: dir.to_path_buf(),
            topology,
            contacts,
            policies,
            gaps,
        })
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.topology
            .as_ref()
            .and_then(|t| t.provenance.as_ref())
            .or_else(|| self.contacts.as_ref().map(|c| &c.provenance))
            .or_else(|| self.policies.iter().find_map(|(_, m)| m.provenance.as_ref()))
    }

    pub fn topology_hash(&self) -> Option<&str> {
        self.topology
            .as_ref()
            .map(|t| t.hash.as_str())
            .or_else(|| self.provenance().map(|p| p.topology_hash.as_str()))
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.digits$}"))
}

fn hms(t: u32) -> String {
    format!("{:02}:{:02}", t / 3600, t % 3600 / 60)
}

pub fn render(b: &Bundle) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# busnet run summary\n");
    match b.provenance() {
        Some(p) => {
            let _ = writeln!(s, "- config hash: `{}`", p.config_hash);
            let _ = writeln!(s, "- seed: {}", p.seed);
            let _ = writeln!(s, "- topology hash: `{}`\n", p.topology_hash);
        }
        None => {
            let _ = writeln!(s, "- provenance: unavailable\n");
        }
    }
    if let Some(t) = &b.topology {
        let _ = writeln!(s, "## City\n");
        let _ = writeln!(s, "- source: {}", t.source);
        let _ = writeln!(s, "- lines admitted: {} (rejected open: {})", t.lines, t.rejected);
        let _ = writeln!(s, "- stops: {}\n", t.stops);
    }
    if let Some(c) = &b.contacts {
        let _ = writeln!(s, "## Mobility\n");
        let _ = writeln!(s, "- buses: {} over {} trips, {} to {}", c.buses, c.trips, hms(c.start), hms(c.end));
        let _ = writeln!(s, "- peak population: {} at {}", c.peak_population, hms(c.peak_population_tick));
        let _ = writeln!(
            s,
            "- contacts: {} ({} contact seconds)",
            c.summary.total_contacts, c.total_contact_seconds
        );
        let row = |name: &str, st: &Option<busnet::contacts::ContactStats>| match st {
            Some(st) => format!(
                "| {name} | {:.0} | {:.1} | {:.1} | {} |",
                st.median, st.mean, st.std_dev, st.sample_count
            ),
            None => format!("| {name} | n/a | n/a | n/a | 0 |"),
        };
        let _ = writeln!(s, "\n| contact time (s) | median | mean | std | samples |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        let _ = writeln!(s, "{}", row("intra", &c.summary.intra_contact));
        let _ = writeln!(s, "{}\n", row("inter", &c.summary.inter_contact));
    }
    if !b.policies.is_empty() {
        let _ = writeln!(s, "## Traffic\n");
        let _ = writeln!(
            s,
            "| policy | generated | delivered | ratio | median h | mean h | std h | p90 h | end_of_day | no_successor_bus | rejected_at_source | max buffer MiB |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|---|---|");
        for (name, m) in &b.policies {
            let d = m.delay_hours.as_ref();
            let _ = writeln!(
                s,
                "| {name} | {} | {} | {:.3} | {} | {} | {} | {} | {} | {} | {} | {:.1} |",
                m.generated,
                m.delivered,
                m.delivery_ratio,
                opt(d.map(|d| d.median), 3),
                opt(d.map(|d| d.mean), 3),
                opt(d.map(|d| d.std_dev), 3),
                opt(d.map(|d| d.p90), 3),
                m.drops.get("end_of_day").copied().unwrap_or(0),
                m.drops.get("no_successor_bus").copied().unwrap_or(0),
                m.drops.get("rejected_at_source").copied().unwrap_or(0),
                m.buffer.max_bus_bytes as f64 / (1024.0 * 1024.0),
            );
        }
        for (name, m) in &b.policies {
            if let Some(r) = &m.replicas {
                let _ = writeln!(
                    s,
                    "\n{name}: {:.1} copies per packet on average (max {})",
                    r.mean_copies_per_packet, r.max_copies
                );
            }
        }
        let _ = writeln!(s);
    }
    let sweep = b.dir.join(SWEEP_DIR);
    if sweep.is_dir() {
        let _ = writeln!(s, "## Load sweep\n");
        for f in [SWEEP_BUFFER, SWEEP_RATIO, SWEEP_DELAY] {
            let p = sweep.join(f);
            let mark = if p.exists() { "present" } else { "missing" };
            let _ = writeln!(s, "- {SWEEP_DIR}/{f}: {mark}");
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "## Gaps\n");
    if b.gaps.is_empty() {
        let _ = writeln!(s, "none");
    }
    for g in &b.gaps {
        let _ = writeln!(s, "- missing: {g}");
    }
    s
}

type Metric = (&'static str, fn(&MetricsReport) -> Option<f64>);

/// Side-by-side metrics of two bundles built on the same topology.
pub fn diff(a: &Bundle, b: &Bundle) -> Result<String, CliError> {
    match (a.topology_hash(), b.topology_hash()) {
        (Some(x), Some(y)) if x == y => {}
        (x, y) => {
            return Err(CliError::Data(format!(
                "refusing to compare bundles with different topologies ({} vs {})",
                x.unwrap_or("unknown"),
                y.unwrap_or("unknown")
            )))
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# {} vs {}\n", a.dir.display(), b.dir.display());
    let seed = |x: &Bundle| x.provenance().map_or("?".into(), |p| p.seed.to_string());
    let cfg = |x: &Bundle| x.provenance().map_or("?".into(), |p| p.config_hash[..12.min(p.config_hash.len())].to_string());
    let _ = writeln!(s, "| | A | B |\n|---|---|---|");
    let _ = writeln!(s, "| seed | {} | {} |", seed(a), seed(b));
    let _ = writeln!(s, "| config | {} | {} |\n", cfg(a), cfg(b));
    let _ = writeln!(s, "| policy | metric | A | B | B - A |\n|---|---|---|---|---|");
    let mut names: Vec<&str> = a.policies.iter().chain(&b.policies).map(|(n, _)| n.as_str()).collect();
    names.sort();
    names.dedup();
    let find = |x: &'_ Bundle, n: &str| x.policies.iter().find(|(m, _)| m == n).map(|(_, r)| r.clone());
    for n in names {
        let (ra, rb) = (find(a, n), find(b, n));
        let metrics: [Metric; 5] = [
            ("delivery ratio", |m| Some(m.delivery_ratio)),
            ("median delay h", |m| m.delay_hours.as_ref().map(|d| d.median)),
            ("mean delay h", |m| m.delay_hours.as_ref().map(|d| d.mean)),
            ("generated", |m| Some(m.generated as f64)),
            ("max buffer MiB", |m| Some(m.buffer.max_bus_bytes as f64 / 1048576.0)),
        ];
        for (label, f) in metrics {
            let x = ra.as_ref().and_then(f);
            let y = rb.as_ref().and_then(f);
            let d = x.zip(y).map(|(x, y)| y - x);
            let _ = writeln!(s, "| {n} | {label} | {} | {} | {} |", opt(x, 3), opt(y, 3), opt(d, 3));
        }
    }
    Ok(s)
}
