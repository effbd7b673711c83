//! Run configuration files (TOML, or JSON by extension).
//!
//! ```toml
//! [gsa]
//! population = 30
//! max_iterations = 15
//! seed = 7
//!
//! [space.batch_size]
//! kind = "integer"
//! lower = 1
//! upper = 64
//!
//! [objective]
//! kind = "external"
//! command = ["python3", "worker.py"]
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use gravopt::objectives::ToyTrainerConfig;
use gravopt::{Dimension, DimensionKind, FailurePolicy, GsaConfig, SearchSpace};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "GRAVOPT_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimSpec {
    #[serde(default = "continuous")]
    pub kind: DimensionKind,
    pub lower: f64,
    pub upper: f64,
}

fn continuous() -> DimensionKind {
    DimensionKind::Continuous
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    #[default]
    ToyTrainer,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Worker argv for the external objective.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
    pub timeout_secs: f64,
    pub parallelism: usize,
    pub retries: u32,
    pub strict: bool,
    pub penalty_margin: f64,
    pub penalty_default: f64,
    pub toy_trainer: ToyTrainerConfig,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        let policy = FailurePolicy::default();
        Self {
            kind: ObjectiveKind::ToyTrainer,
            command: None,
            timeout_secs: 300.0,
            parallelism: 1,
            retries: policy.retries,
            strict: policy.strict,
            penalty_margin: policy.penalty_margin,
            penalty_default: policy.penalty_default,
            toy_trainer: ToyTrainerConfig::default(),
        }
    }
}

impl ObjectiveSpec {
    pub fn failure_policy(&self) -> FailurePolicy {
        FailurePolicy {
            retries: self.retries,
            strict: self.strict,
            penalty_margin: self.penalty_margin,
            penalty_default: self.penalty_default,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub gsa: GsaConfig,
    #[serde(default = "default_space")]
    pub space: IndexMap<String, DimSpec>,
    #[serde(default)]
    pub objective: ObjectiveSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gsa: GsaConfig::default(),
            space: default_space(),
            objective: ObjectiveSpec::default(),
        }
    }
}

/// Batch size [1, 64], dropout rate [0.1, 0.9], neurons [50, 500].
pub fn default_space() -> IndexMap<String, DimSpec> {
    SearchSpace::classifier_head()
        .dims()
        .iter()
        .map(|d| {
            (
                d.name().to_string(),
                DimSpec {
                    kind: d.kind(),
                    lower: d.lower(),
                    upper: d.upper(),
                },
            )
        })
        .collect()
}

impl RunConfig {
    pub fn search_space(&self) -> Result<SearchSpace> {
        let dims = self
            .space
            .iter()
            .map(|(name, d)| Dimension::new(name.clone(), d.kind, d.lower, d.upper))
            .collect::<gravopt::Result<Vec<_>>>()?;
        Ok(SearchSpace::new(dims)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.gsa.validate()?;
        self.search_space()?;
        match self.objective.kind {
            ObjectiveKind::ToyTrainer => {
                self.objective.toy_trainer.validate()?;
                for name in ["batch_size", "dropout_rate", "neurons"] {
                    if !self.space.contains_key(name) {
                        bail!("the toy-trainer objective needs a `{name}` dimension");
                    }
                }
            }
            ObjectiveKind::External => {
                if self.objective.command.as_ref().is_none_or(|c| c.is_empty()) {
                    bail!("the external objective needs a non-empty `command`");
                }
            }
        }
        if !(self.objective.timeout_secs.is_finite() && self.objective.timeout_secs > 0.0) {
            bail!("objective.timeout_secs must be positive");
        }
        if self.objective.parallelism < 1 {
            bail!("objective.parallelism must be at least 1");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// A parsed file plus whether it set `gsa.seed` explicitly.
pub struct Loaded {
    pub config: RunConfig,
    pub seed: Option<u64>,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse(&text, is_json).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse(text: &str, json: bool) -> Result<Loaded> {
    let (config, seed): (RunConfig, Option<u64>) = if json {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let seed = value
            .pointer("/gsa/seed")
            .and_then(serde_json::Value::as_u64);
        (serde_json::from_value(value)?, seed)
    } else {
        let table: toml::Table = toml::from_str(text)?;
        let seed = table
            .get("gsa")
            .and_then(|g| g.get("seed"))
            .and_then(toml::Value::as_integer)
            .map(|s| s as u64);
        (table.try_into()?, seed)
    };
    Ok(Loaded { config, seed })
}

/// Flag, then environment, then config file, then the fixed default.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(raw) = env {
        return raw
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={raw:?} is not an unsigned integer"));
    }
    Ok(file.unwrap_or(DEFAULT_SEED))
}
