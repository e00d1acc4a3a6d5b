use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use newsedit::causal::{CausalConfig, Scenario};
use newsedit::clickbait::ClickbaitConfig;
use newsedit::clusterer::DEFAULT_ELBOW_THRESHOLD;

use crate::Common;

/// Bad invocation: missing or inconsistent arguments. Exits with 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Everything a run can be configured with. Loaded from `--config` (or
/// `NEWSEDIT_CONFIG`) and then overridden by flags.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    /// Unset means 0, except that a synth spec then keeps its own seed.
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub k: Option<usize>,
    pub k_max: usize,
    pub elbow_threshold: f64,
    pub clickbait_data: Option<PathBuf>,
    pub clickbait_model: Option<PathBuf>,
    pub clickbait: ClickbaitConfig,
    pub scenarios: Vec<Scenario>,
    pub causal: CausalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            embeddings: None,
            out: None,
            profiles: None,
            seed: None,
            jobs: None,
            k: None,
            k_max: 8,
            elbow_threshold: DEFAULT_ELBOW_THRESHOLD,
            clickbait_data: None,
            clickbait_model: None,
            clickbait: ClickbaitConfig::default(),
            scenarios: Vec::new(),
            causal: CausalConfig::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    List(Vec<Scenario>),
    Wrapped { scenarios: Vec<Scenario> },
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let parsed: ScenarioFile =
        serde_json::from_str(&text).with_context(|| format!("invalid scenario file {}", path.display()))?;
    Ok(match parsed {
        ScenarioFile::List(v) | ScenarioFile::Wrapped { scenarios: v } => v,
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Applies the shared flags on top of the file values.
    pub fn merge(&self, flags: &Common) -> RunConfig {
        let mut r = self.clone();
        r.corpus = flags.corpus.clone().or(r.corpus);
        r.embeddings = flags.embeddings.clone().or(r.embeddings);
        r.out = flags.out.clone().or(r.out);
        r.seed = flags.seed.or(r.seed);
        r
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn corpus(&self) -> Result<&Path> {
        Ok(self
            .corpus
            .as_deref()
            .ok_or_else(|| UsageError("--corpus is required".into()))?)
    }

    pub fn embeddings(&self) -> Result<&Path> {
        Ok(self
            .embeddings
            .as_deref()
            .ok_or_else(|| UsageError("--embeddings is required".into()))?)
    }

    pub fn out(&self) -> Result<&Path> {
        Ok(self
            .out
            .as_deref()
            .ok_or_else(|| UsageError("--out is required".into()))?)
    }
}
