//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always show up in the
//! `cargo test` output. Exits non-zero when a criterion outside
//! [`EXPECTED_FAILURES`] fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use busnet::encounter::{build_graph, estimate_matrix, expected_delay, shortest_paths, EncounterMatrix};
use busnet::feed::synthetic::{generate, SyntheticCitySpec};
use busnet::feed::{extract, ExtractConfig, TopologyBundle};
use busnet::mobility::{run_mobility, MobilityConfig, MobilityTrace};
use busnet::routing::{PolicyTables, POLICY_NAMES};
use busnet::traffic::{run_traffic, Disposition, TrafficConfig, TrafficOutcome};
use busnet::{LineId, PacketId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria allowed to fail; each one is analyzed in the decisions notes.
const EXPECTED_FAILURES: &[&str] = &[];

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    Verdict { name, pass, detail }
}

struct City {
    bundle: TopologyBundle,
    trace: MobilityTrace,
    tables: PolicyTables,
}

fn city(bundle: TopologyBundle, seed: u64) -> City {
    let trace = run_mobility(&bundle, &MobilityConfig::default(), seed).expect("mobility");
    let tables = PolicyTables::from_trace(&trace, &bundle.line_ids());
    City { bundle, trace, tables }
}

fn synthetic(spec: &SyntheticCitySpec, seed: u64) -> City {
    city(generate(spec).expect("synthetic city").0, seed)
}

fn traffic(c: &City, policy: &str, cfg: &TrafficConfig, seed: u64) -> TrafficOutcome {
    run_traffic(&c.trace, &c.tables, policy, cfg, seed).expect("traffic")
}

fn delivered_ids(o: &TrafficOutcome) -> BTreeSet<PacketId> {
    o.packets
        .iter()
        .filter(|p| matches!(p.disposition, Disposition::Delivered { .. }))
        .map(|p| p.spec.packet_id)
        .collect()
}

fn matrix_from_tenths(t: &[Vec<u8>]) -> EncounterMatrix {
    let n = t.len();
    EncounterMatrix::from_counts(
        (0..n as u32).map(LineId).collect(),
        vec![10; n],
        t.iter().map(|r| r.iter().map(|&k| u64::from(k)).collect()).collect(),
    )
}

fn routing_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut graphs, mut pairs, mut wrong) = (0, 0, 0);
    for _ in 0..120 {
        let n = rng.random_range(2..=10);
        let density = rng.random_range(0.15..0.7);
        let t = oracles::random_tenths(&mut rng, n, density);
        let table = shortest_paths(&build_graph(&matrix_from_tenths(&t)));
        graphs += 1;
        for s in 0..n {
            for d in 0..n {
                pairs += 1;
                let got = table.path(LineId(s as u32), LineId(d as u32));
                let want = oracles::best_simple_path(&t, s, d)
                    .map(|(p, _)| p.iter().map(|&i| LineId(i as u32)).collect::<Vec<_>>());
                if got != want {
                    wrong += 1;
                }
            }
        }
    }
    verdict(
        "routing oracle",
        wrong == 0,
        format!("{graphs} graphs, {pairs} pairs, {wrong} mismatches"),
    )
}

fn delay_monte_carlo() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let mut worst: f64 = 0.0;
    let routes = 25;
    for _ in 0..routes {
        let hops = rng.random_range(1..=5);
        let n = hops + 1;
        let den = 20u64;
        let mut counts = vec![vec![0u64; n]; n];
        let mut times = BTreeMap::new();
        let mut params = Vec::new();
        for i in 0..n {
            let t = rng.random_range(600.0..3600.0);
            times.insert(LineId(i as u32), t);
            if i + 1 < n {
                let num = rng.random_range(2..=den);
                counts[i][i + 1] = num;
                params.push((t, num as f64 / den as f64));
            }
        }
        let m = EncounterMatrix::from_counts((0..n as u32).map(LineId).collect(), vec![den; n], counts);
        let route: Vec<LineId> = (0..n as u32).map(LineId).collect();
        let est = expected_delay(&route, &m, &times).expect("delay").expected_delay;
        let mc = oracles::monte_carlo_delay(&mut rng, &params, 100_000);
        worst = worst.max(((est - mc) / mc).abs());
    }
    verdict(
        "expected delay vs Monte Carlo",
        worst < 0.02,
        format!("{routes} routes, worst relative error {:.4} (limit 0.02)", worst),
    )
}

fn estimator_hand_tally() -> Verdict {
    let m = estimate_matrix(&common::hand_tally_trace(), &[LineId(0), LineId(1)]);
    let p = m.probability(LineId(0), LineId(1));
    let q = m.probability(LineId(1), LineId(0));
    verdict(
        "encounter estimator hand tally",
        p == Some(0.6) && q == Some(0.6) && m.counts[0][1] == 3,
        format!("p(0,1) = {p:?}, p(1,0) = {q:?}, expected 3/5"),
    )
}

fn small_spec() -> SyntheticCitySpec {
    SyntheticCitySpec {
        grid_cols: 12,
        grid_rows: 12,
        lines: 8,
        service_start: 7 * 3600,
        service_end: 12 * 3600,
        ..SyntheticCitySpec::default()
    }
}

fn demo_city(dir: &Path) -> City {
    common::gtfs::demo_feed(dir);
    let (bundle, _) = extract(dir, &ExtractConfig::default()).expect("demo feed");
    city(bundle, 2)
}

fn conservation(day: &City, tmp: &Path) -> Verdict {
    let demo = demo_city(&tmp.join("demo_feed"));
    let demo_cfg = TrafficConfig {
        window_start: 6 * 3600,
        window_end: 9 * 3600,
        rate_per_hour: 30.0,
        ..TrafficConfig::default()
    };
    let small_cfg = TrafficConfig {
        window_start: 7 * 3600,
        window_end: 12 * 3600,
        ..TrafficConfig::default()
    };
    let fixtures = [
        ("demo feed", demo, demo_cfg),
        ("12x12 grid", synthetic(&small_spec(), 4), small_cfg),
        ("sparse city", synthetic(&SyntheticCitySpec::sparse(), 4), TrafficConfig::default()),
    ];
    let mut broken = Vec::new();
    let mut runs = 0;
    let mut check = |name: &str, c: &City, cfg: &TrafficConfig| {
        for policy in POLICY_NAMES {
            let o = traffic(c, policy, cfg, 1);
            let r = &o.report;
            runs += 1;
            let lhs = r.generated;
            let rhs = r.delivered + r.dropped + r.in_flight;
            if lhs != rhs || lhs != o.packets.len() as u64 {
                broken.push(format!("{name}/{policy}: {lhs} != {rhs}"));
            }
        }
    };
    for (name, c, cfg) in &fixtures {
        check(name, c, cfg);
    }
    check("50-line day", day, &TrafficConfig::default());
    verdict(
        "conservation",
        broken.is_empty(),
        format!("{runs} runs over 4 cities x 4 policies; violations: {broken:?}"),
    )
}

fn epidemic_dominance(day: &City) -> Verdict {
    let ample = TrafficConfig {
        bandwidth_bps: 1 << 50,
        buffer_capacity: 1 << 50,
        ..TrafficConfig::default()
    };
    let epidemic = delivered_ids(&traffic(day, "epidemic", &ample, 1));
    let mut detail = format!("epidemic delivered {}", epidemic.len());
    let mut pass = true;
    for policy in ["ophop", "minhop", "shanghai"] {
        let single = delivered_ids(&traffic(day, policy, &ample, 1));
        let missing = single.difference(&epidemic).count();
        pass &= missing == 0;
        detail += &format!("; {policy} {} ({missing} not in epidemic)", single.len());
    }
    verdict("epidemic dominance", pass, detail)
}

fn policy_ordering() -> Verdict {
    let bundle = generate(&SyntheticCitySpec::sparse()).expect("sparse city").0;
    let cfg = TrafficConfig::default();
    let (mut ratio, mut delay) = ([0.0; 3], [0.0; 3]);
    let seeds = 1..=10u64;
    let n = seeds.clone().count() as f64;
    for seed in seeds {
        let c = city(bundle.clone(), seed);
        for (k, policy) in ["ophop", "minhop", "shanghai"].iter().enumerate() {
            let r = traffic(&c, policy, &cfg, seed).report;
            ratio[k] += r.delivery_ratio / n;
            delay[k] += r.delay_hours.map_or(f64::NAN, |d| d.mean) / n;
        }
    }
    let ratio_margin = ratio[0] - ratio[1];
    let delay_margin = delay[2] - delay[0];
    verdict(
        "policy ordering over 10 seeds",
        ratio_margin >= 0.0 && delay_margin >= 0.0,
        format!(
            "ratio ophop {:.4} minhop {:.4} (margin {:+.4}); mean delay h ophop {:.3} shanghai {:.3} (margin {:+.3})",
            ratio[0], ratio[1], ratio_margin, delay[0], delay[2], delay_margin
        ),
    )
}

fn busnet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_busnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn determinism(tmp: &Path) -> Verdict {
    let (a, b) = (tmp.join("det_a"), tmp.join("det_b"));
    for d in [&a, &b] {
        let o = busnet(&["run", "--seed", "17", "--preset", "sparse", "--out", s(d)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut differ = Vec::new();
    let mut compared = 0;
    for policy in POLICY_NAMES {
        for f in ["packets.csv", "metrics.json"] {
            let rel = Path::new("traffic").join(policy).join(f);
            compared += 1;
            if std::fs::read(a.join(&rel)).ok() != std::fs::read(b.join(&rel)).ok() {
                differ.push(rel.display().to_string());
            }
        }
    }
    verdict(
        "determinism",
        differ.is_empty(),
        format!("{compared} files compared across two runs, differing: {differ:?}"),
    )
}

fn load_sweep(day: &City) -> Vec<Verdict> {
    let loads = [1.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 60.0];
    let base = TrafficConfig::default();
    let rows: Vec<(f64, u64, f64, f64)> = loads
        .iter()
        .map(|&load| {
            let cfg = TrafficConfig {
                rate_per_hour: load,
                ..base.clone()
            };
            let r = traffic(day, "ophop", &cfg, 1).report;
            let mean = r.delay_hours.map_or(f64::NAN, |d| d.mean);
            (load, r.buffer.max_bus_bytes, r.delivery_ratio, mean)
        })
        .collect();
    let (_, b1, r1, d1) = rows[0];
    let (_, _, r30, d30) = rows[5];
    let linear = rows
        .iter()
        .all(|&(l, b, _, _)| b as f64 <= l * b1 as f64 + f64::from(base.packet_size));
    let below = rows.iter().all(|&(_, b, _, _)| b < base.buffer_capacity);
    let growth: Vec<String> = rows
        .iter()
        .map(|&(l, b, _, _)| format!("{l}:{:.1}", b as f64 / b1.max(1) as f64))
        .collect();
    let peak = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let gap = (r30 - r1).abs();
    let drift = (d30 - d1).abs() / d1;
    vec![
        verdict(
            "load sweep shape",
            linear && gap <= 0.10 && below,
            format!(
                "max bus buffer growth vs 1 pkt/h [{}]; ratio 1 pkt/h {r1:.4}, 30 pkt/h {r30:.4} (gap {:.1} pp, limit 10); peak buffer {peak} of {} bytes",
                growth.join(" "),
                gap * 100.0,
                base.buffer_capacity
            ),
        ),
        verdict(
            "load sweep delay guard",
            drift < 0.25 && below,
            format!("mean delay 1 pkt/h {d1:.3} h, 30 pkt/h {d30:.3} h (drift {:.1}%, limit 25%)", drift * 100.0),
        ),
    ]
}

fn full_day_runtime(tmp: &Path) -> Verdict {
    let out = tmp.join("full_day");
    let t0 = Instant::now();
    let o = busnet(&["run", "--seed", "1", "--out", s(&out)]);
    let secs = t0.elapsed().as_secs_f64();
    let ok = o.status.success();
    let lines = std::fs::read_to_string(out.join("topology.json"))
        .map(|t| t.matches("\"line_id\"").count())
        .unwrap_or(0);
    verdict(
        "full synthetic day runtime",
        ok && secs < 600.0,
        format!("50-line city, 4 policies, {secs:.1} s (limit 600 s), exit ok = {ok}, line_id fields {lines}"),
    )
}

fn feed_smoke(tmp: &Path) -> Verdict {
    println!(
        "NOTE absolute city numbers (per-city tables and figures for Milan, Edmonton and Chicago) \
         are not reproducible without the original-era transit feeds; any valid feed must still \
         run end to end"
    );
    let feed = tmp.join("smoke_feed");
    common::gtfs::demo_feed(&feed);
    let out = tmp.join("smoke_out");
    let o = busnet(&["run", "--seed", "3", "--feed", s(&feed), "--out", s(&out)]);
    let mut missing = Vec::new();
    let mut expected = vec![
        "topology.json".to_string(),
        "diagnostics.txt".into(),
        "bus_events.csv".into(),
        "contacts.csv".into(),
        "population.csv".into(),
        "positions.csv".into(),
        "activity.csv".into(),
        "neighbor_histogram.csv".into(),
        "intra_contact_hist.csv".into(),
        "inter_contact_hist.csv".into(),
        "contact_stats.json".into(),
        "routing_tables.json".into(),
        "encounter_matrix.csv".into(),
        "comparison.csv".into(),
        "qos.csv".into(),
        "report.md".into(),
    ];
    for policy in POLICY_NAMES {
        for f in ["packets.csv", "metrics.json", "delay_cdf.csv", "buffer.csv"] {
            expected.push(format!("traffic/{policy}/{f}"));
        }
    }
    for f in &expected {
        if !out.join(f).is_file() {
            missing.push(f.clone());
        }
    }
    verdict(
        "feed smoke run",
        o.status.success() && missing.is_empty(),
        format!(
            "exit {:?}, {} of {} bundle files present, missing {missing:?}",
            o.status.code(),
            expected.len() - missing.len(),
            expected.len()
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let t0 = Instant::now();
    let day = synthetic(&SyntheticCitySpec::default(), 1);
    println!(
        "50-line day: {} lines, {} buses, {} contacts ({:.1} s)",
        day.bundle.lines.len(),
        day.trace.buses.len(),
        day.trace.contacts.len(),
        t0.elapsed().as_secs_f64()
    );
    let mut all = vec![
        routing_oracle(),
        delay_monte_carlo(),
        estimator_hand_tally(),
        conservation(&day, tmp.path()),
        epidemic_dominance(&day),
        policy_ordering(),
        determinism(tmp.path()),
    ];
    all.extend(load_sweep(&day));
    all.push(full_day_runtime(tmp.path()));
    all.push(feed_smoke(tmp.path()));

    let failed: Vec<&Verdict> = all.iter().filter(|v| !v.pass).collect();
    let unexpected: Vec<&&Verdict> = failed
        .iter()
        .filter(|v| !EXPECTED_FAILURES.contains(&v.name))
        .collect();
    println!(
        "acceptance: {} passed, {} failed ({} expected), {:.1} s",
        all.len() - failed.len(),
        failed.len(),
        failed.len() - unexpected.len(),
        t0.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        for v in unexpected {
            eprintln!("unexpected failure: {}: {}", v.name, v.detail);
        }
        std::process::exit(1);
    }
}
