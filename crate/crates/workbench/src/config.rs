//! Workbench configuration: one JSON document, with CLI flags overriding
//! config fields and `VAR_WORKBENCH_CONFIG` naming the default path.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use var_core::reward::{
    AnswerOracle, HttpOracle, KvOracle, RewardWeights, ScriptedOracle, Thresholds,
};

pub const CONFIG_ENV_VAR: &str = "VAR_WORKBENCH_CONFIG";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchDefaults {
    pub t_max: u32,
    pub budget_b: u32,
    /// Global node-creation cap; defaults to `10 * budget_b * t_max`.
    pub max_total_expansions: Option<u32>,
}

impl Default for SearchDefaults {
    fn default() -> Self {
        SearchDefaults {
            t_max: 10,
            budget_b: 10,
            max_total_expansions: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Scripted,
    Kv,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub mode: OracleMode,
    pub endpoint: Option<String>,
    pub fixture_path: Option<PathBuf>,
    pub timeout_ms: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            mode: OracleMode::Kv,
            endpoint: None,
            fixture_path: None,
            timeout_ms: 5000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkbenchConfig {
    pub weights: RewardWeights,
    pub thresholds: Thresholds,
    pub search: SearchDefaults,
    pub oracle: OracleConfig,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        WorkbenchConfig {
            weights: RewardWeights::default(),
            thresholds: Thresholds::default(),
            search: SearchDefaults::default(),
            oracle: OracleConfig::default(),
            output_dir: PathBuf::from("out"),
            master_seed: 0,
        }
    }
}

impl WorkbenchConfig {
    /// Load with the precedence chain: explicit `--config` path, then the
    /// environment variable, then built-in defaults.
    pub fn load(explicit: Option<&Path>) -> anyhow::Result<Self> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(WorkbenchConfig::default());
        };
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: WorkbenchConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if !config.weights.is_valid() {
            anyhow::bail!("config weights must be finite and non-negative");
        }
        if config.oracle.timeout_ms == 0 {
            anyhow::bail!("oracle timeout must be positive");
        }
        Ok(config)
    }

    pub fn build_oracle(&self) -> anyhow::Result<Box<dyn AnswerOracle>> {
        match self.oracle.mode {
            OracleMode::Kv => Ok(Box::new(KvOracle)),
            OracleMode::Scripted => {
                let path = self
                    .oracle
                    .fixture_path
                    .as_ref()
                    .context("scripted oracle requires oracle.fixture_path")?;
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading oracle fixture {}", path.display()))?;
                Ok(Box::new(ScriptedOracle::from_json(&text)?))
            }
            OracleMode::Http => {
                let endpoint = self
                    .oracle
                    .endpoint
                    .as_ref()
                    .context("http oracle requires oracle.endpoint")?;
                Ok(Box::new(HttpOracle::new(
                    endpoint.clone(),
                    Duration::from_millis(self.oracle.timeout_ms),
                )))
            }
        }
    }
}
