//! Run configuration: one TOML file, overridable from the command line.
//!
//! ```toml
//! seed = 7                       # mandatory
//! policies = ["ophop", "minhop", "epidemic", "shanghai"]
//!
//! [feed]                         # omit to use the synthetic city
//! path = "data/gtfs"
//! service = "monday"             # weekday, "all" or "service:ID,.."
//! alias_threshold = 0.8
//! route_types = [3]
//!
//! [synthetic]                    # any SyntheticCitySpec field
//! lines = 50
//!
//! [mobility]
//! radio_range = 100.0
//! corridor_half_width = 15.0
//! noise_max = 600
//!
//! [traffic]
//! bandwidth_bps = 10000000
//! packet_size = 65536
//! buffer_capacity = 536870912
//! rate_per_hour = 12.0
//! window_start = 28800
//! window_end = 64800
//!
//! [output]
//! position_stride = 60           # 0 disables positions.csv
//! activity_bucket_s = 60
//! qos_minutes = [15, 30, 60, 120, 240, 480]
//! sweep_loads = [1, 5, 10, 20, 30, 40, 50, 60]
//! ```

use std::path::{Path, PathBuf};

use busnet::feed::synthetic::SyntheticCitySpec;
use busnet::feed::{ExtractConfig, ServiceSelection};
use busnet::mobility::MobilityConfig;
use busnet::provenance::hash_json;
use busnet::routing::POLICY_NAMES;
use busnet::traffic::TrafficConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedSection {
    pub path: PathBuf,
    #[serde(default = "default_service")]
    pub service: String,
    #[serde(default = "default_alias")]
    pub alias_threshold: f64,
    #[serde(default)]
    pub route_types: Option<Vec<u16>>,
}

fn default_service() -> String {
    "monday".into()
}

fn default_alias() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub position_stride: u32,
    pub activity_bucket_s: u32,
    pub qos_minutes: Vec<u32>,
    pub sweep_loads: Vec<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            position_stride: 60,
            activity_bucket_s: 60,
            qos_minutes: vec![15, 30, 60, 120, 180, 240, 360, 480, 720],
            sweep_loads: vec![1.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 60.0],
        }
    }
}

fn default_policies() -> Vec<String> {
    POLICY_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_policies")]
    pub policies: Vec<String>,
    #[serde(default)]
    pub feed: Option<FeedSection>,
    #[serde(default)]
    pub synthetic: SyntheticCitySpec,
    #[serde(default)]
    pub mobility: MobilityConfig,
    #[serde(default)]
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            policies: default_policies(),
            feed: None,
            synthetic: SyntheticCitySpec::default(),
            mobility: MobilityConfig::default(),
            traffic: TrafficConfig::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("a seed is required (--seed or `seed` in the config)".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.seed()?;
        let bad = |m: String| Err(CliError::Usage(m));
        let m = &self.mobility;
        if !(m.radio_range > 0.0 && m.corridor_half_width > 0.0) {
            return bad("radio range and corridor half-width must be positive".into());
        }
        if let Some(f) = &self.feed {
            if !(f.alias_threshold > 0.0 && f.alias_threshold <= 1.0) {
                return bad("alias threshold must lie in (0, 1]".into());
            }
            f.service.parse::<ServiceSelection>().map_err(CliError::Usage)?;
        } else {
            self.synthetic
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.traffic
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.policies.is_empty() {
            return bad("no policy selected".into());
        }
        for p in &self.policies {
            if !POLICY_NAMES.contains(&p.as_str()) {
                return bad(format!(
                    "unknown policy {p:?}; registered policies: {}",
                    POLICY_NAMES.join(", ")
                ));
            }
        }
        if self.output.activity_bucket_s == 0 {
            return bad("activity bucket must be positive".into());
        }
        if self.output.sweep_loads.iter().any(|&l| !(l > 0.0)) {
            return bad("sweep loads must be positive".into());
        }
        Ok(())
    }

    pub fn extract_config(&self) -> Option<ExtractConfig> {
        let f = self.feed.as_ref()?;
        Some(ExtractConfig {
            service: f.service.parse().ok()?,
            alias_threshold: f.alias_threshold,
            route_types: f.route_types.clone(),
        })
    }

    /// Hash of everything that shapes the outputs.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}
