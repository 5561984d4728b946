// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use serde_json::Value;

use holonet::seed::sha256_hex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// SHA-256 of the compact serialization of `config`.
    pub config_digest: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

pub fn digest(config: &Value) -> String {
    sha256_hex(serde_json::to_string(config).expect("json values serialize").as_bytes())
}

impl RunManifest {
    pub fn digest_matches(&self) -> bool {
        digest(&self.config) == self.config_digest
    }

    pub fn path_for(primary_output: &str) -> String {
        format!("{primary_output}.manifest.json")
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
