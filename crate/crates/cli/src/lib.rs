//! Command-line pipeline: city (extract or synth) -> mobility -> traffic,
//! plus load sweeps and reports.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

use std::fs;
use std::path::PathBuf;

use busnet::feed::synthetic::SyntheticCitySpec;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use error::CliError;
use pipeline::Ctx;

#[derive(Debug, Parser)]
#[command(name = "busnet", version, about = "Bus-fleet opportunistic network simulator")]
pub struct Cli {
    /// Log progress to stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a GTFS feed into topology.json.
    Extract(Common),
    /// Generate the synthetic city into topology.json.
    Synth(Common),
    /// Replay the day: trace CSVs and contact analytics.
    Mobility(Common),
    /// Run the policies over the trace; per-policy bundles plus comparison.
    Traffic(Common),
    /// Offered-load sweep.
    Sweep(Common),
    /// Summarize a bundle, or diff two.
    Report {
        dir: PathBuf,
        /// Second bundle for a side-by-side diff.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// City, mobility, traffic and report in one go.
    Run(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Default,
    Sparse,
}

/// Config file plus flag overrides, shared by the pipeline commands.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Bundle directory.
    #[arg(short, long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// GTFS directory (replaces the synthetic city).
    #[arg(long)]
    pub feed: Option<PathBuf>,
    /// Weekday, "all" or "service:ID,..".
    #[arg(long)]
    pub service: Option<String>,
    /// Synthetic city preset (replaces the [synthetic] section).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Synthetic line count.
    #[arg(long)]
    pub lines: Option<u32>,
    #[arg(long)]
    pub radio_range: Option<f64>,
    #[arg(long)]
    pub noise_max: Option<u32>,
    #[arg(long)]
    pub position_stride: Option<u32>,
    /// Policies to run (comma separated or repeated).
    #[arg(long = "policy", value_delimiter = ',')]
    pub policies: Vec<String>,
    /// Packets per bus per hour.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub bandwidth: Option<u64>,
    /// Buffer capacity per bus, bytes.
    #[arg(long)]
    pub buffer: Option<u64>,
    /// Sweep loads, packets per bus per hour.
    #[arg(long, value_delimiter = ',')]
    pub loads: Vec<f64>,
    /// Routing tables to use instead of learning them from the trace.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

impl Common {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(f) = &self.feed {
            let mut sec = cfg.feed.take().unwrap_or(config::FeedSection {
                path: f.clone(),
                service: "monday".into(),
                alias_threshold: 0.8,
                route_types: None,
            });
            sec.path = f.clone();
            cfg.feed = Some(sec);
        }
        if let Some(s) = &self.service {
            match cfg.feed.as_mut() {
                Some(f) => f.service = s.clone(),
                None => return Err(CliError::Usage("--service needs a feed".into())),
            }
        }
        match self.preset {
            Some(Preset::Default) => cfg.synthetic = SyntheticCitySpec::default(),
            Some(Preset::Sparse) => cfg.synthetic = SyntheticCitySpec::sparse(),
            None => {}
        }
        if let Some(n) = self.lines {
            cfg.synthetic.lines = n;
        }
        if let Some(r) = self.radio_range {
            cfg.mobility.radio_range = r;
        }
        if let Some(n) = self.noise_max {
            cfg.mobility.noise_max = n;
        }
        if let Some(s) = self.position_stride {
            cfg.output.position_stride = s;
        }
        if !self.policies.is_empty() {
            cfg.policies = self.policies.clone();
        }
        if let Some(r) = self.rate {
            cfg.traffic.rate_per_hour = r;
        }
        if let Some(b) = self.bandwidth {
            cfg.traffic.bandwidth_bps = b;
        }
        if let Some(b) = self.buffer {
            cfg.traffic.buffer_capacity = b;
        }
        if !self.loads.is_empty() {
            cfg.output.sweep_loads = self.loads.clone();
        }
        Ok(cfg)
    }

    fn ctx(&self) -> Result<Ctx, CliError> {
        Ctx::new(self.resolve()?, self.out.clone())
    }
}

/// Renders `dir`'s summary and writes it to `dir/report.md`.
pub fn write_report(dir: &std::path::Path) -> Result<String, CliError> {
    let b = report::Bundle::load(dir)?;
    let text = report::render(&b);
    let path = dir.join(pipeline::REPORT);
    fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    Ok(text)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Extract(c) => {
            pipeline::stage_extract(&c.ctx()?)?;
        }
        Command::Synth(c) => {
            let ctx = c.ctx()?;
            if ctx.cfg.feed.is_some() {
                return Err(CliError::Usage("synth does not take a feed".into()));
            }
            pipeline::stage_synth(&ctx)?;
        }
        Command::Mobility(c) => {
            pipeline::stage_mobility(&c.ctx()?)?;
        }
        Command::Traffic(c) => {
            pipeline::stage_traffic(&c.ctx()?, c.tables.as_deref())?;
        }
        Command::Sweep(c) => {
            pipeline::stage_sweep(&c.ctx()?, c.tables.as_deref())?;
        }
        Command::Report { dir, compare } => match compare {
            Some(other) => {
                let a = report::Bundle::load(dir)?;
                let b = report::Bundle::load(other)?;
                print!("{}", report::diff(&a, &b)?);
            }
            None => print!("{}", write_report(dir)?),
        },
        Command::Run(c) => {
            let ctx = c.ctx()?;
            pipeline::stage_city(&ctx)?;
            pipeline::stage_mobility(&ctx)?;
            pipeline::stage_traffic(&ctx, c.tables.as_deref())?;
            write_report(&ctx.out)?;
            log::info!("bundle written to {}", ctx.out.display());
        }
    }
    Ok(())
}
