//! JSON experiment configurations. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::TrainConfig;

/// First-pass parse: pick the command, then validate the full document
/// against the command's schema.
#[derive(Debug, Deserialize)]
struct CommandProbe {
    command: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub command: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// `toy` or `identity`; mutually exclusive with `random_instances`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub random_instances: Option<usize>,
    #[serde(default = "default_max_states")]
    pub max_states: usize,
    #[serde(default = "default_max_actions")]
    pub max_actions: usize,
    #[serde(default = "default_ipms")]
    pub ipms: Vec<String>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_max_states() -> usize {
    8
}

fn default_max_actions() -> usize {
    4
}

fn default_ipms() -> Vec<String> {
    vec!["tv".into(), "w".into(), "mmd".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCommandConfig {
    pub command: String,
    /// `toy` or `pointmass`.
    pub env: String,
    /// `ais-ac`, `ais-pg`, `memoryless`, or `ais-ppo`.
    pub agent: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub name: String,
    #[serde(default)]
    pub agent: Option<String>,
    #[serde(default)]
    pub ipm: Option<String>,
    #[serde(default)]
    pub mmd_kernel: Option<String>,
    #[serde(default)]
    pub kernel_width: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub command: String,
    pub env: String,
    #[serde(default)]
    pub agent: Option<String>,
    pub variants: Vec<VariantSpec>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyDemoConfig {
    pub command: String,
    #[serde(default)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    Bounds(BoundsConfig),
    Train(TrainCommandConfig),
    Compare(CompareConfig),
    ToyDemo(ToyDemoConfig),
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let probe: CommandProbe =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("missing command: {e}")))?;
    let cfg = match probe.command.as_str() {
        "bounds" => ExperimentConfig::Bounds(
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
        ),
        "train" => ExperimentConfig::Train(
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
        ),
        "compare" => ExperimentConfig::Compare(
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
        ),
        "toy-demo" => ExperimentConfig::ToyDemo(
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
        ),
        other => return Err(Error::Config(format!("unknown command {other:?}"))),
    };
    Ok(cfg)
}
