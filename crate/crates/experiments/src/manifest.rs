//! Run manifests: everything needed to re-run a study bit-identically.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::studies::{Check, SeedOutcome};

pub const GIT_DESCRIBE: &str = env!("SSPDE_GIT_DESCRIBE");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub git: String,
    pub command: String,
    /// `parse(config_text)` reproduces the run.
    pub config_text: String,
    pub config: RunConfig,
    pub constants: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub outcomes: Vec<SeedOutcome>,
    /// File name to SHA-256 of the bytes written.
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
    pub threads: usize,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            git: GIT_DESCRIBE.into(),
            command: command.into(),
            config_text: config.render(),
            config: config.clone(),
            constants: BTreeMap::new(),
            checks: Vec::new(),
            outcomes: Vec::new(),
            outputs: BTreeMap::new(),
            wall_clock_seconds: 0.0,
            threads: rayon::current_num_threads(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("parsing manifest")
    }

    /// The configuration a manifest was produced from.
    pub fn rerun_config(&self) -> Result<RunConfig> {
        RunConfig::parse(&self.config_text)
    }
}
