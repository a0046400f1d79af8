//! Content hashes and the provenance block embedded in every output file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub topology_hash: String,
}

impl Provenance {
    /// One-line form used as the leading `#` comment of CSV outputs.
    pub fn csv_comment(&self) -> String {
        format!(
            "# config_hash={} seed={} topology_hash={}\n",
            self.config_hash, self.seed, self.topology_hash
        )
    }

    /// Parses the comment line written by [`Provenance::csv_comment`].
    pub fn parse_csv_comment(line: &str) -> Option<Self> {
        let body = line.trim().strip_prefix('#')?;
        let mut config_hash = None;
        let mut seed = None;
        let mut topology_hash = None;
        for kv in body.split_whitespace() {
            let (k, v) = kv.split_once('=')?;
            match k {
                "config_hash" => config_hash = Some(v.to_string()),
                "seed" => seed = v.parse().ok(),
                "topology_hash" => topology_hash = Some(v.to_string()),
                _ => {}
            }
        }
        Some(Provenance {
            config_hash: config_hash?,
            seed: seed?,
            topology_hash: topology_hash?,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of any serializable value.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    sha256_hex(&bytes)
}
