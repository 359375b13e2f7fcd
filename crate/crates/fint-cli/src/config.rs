//! Experiment configuration: JSON file fields overridden by CLI flags.
//!
//! The seed is mandatory — there is no ambient randomness anywhere — and
//! rationals are given as `p/q` strings. Unknown fields are rejected so a
//! typo fails loudly with the parser's line and column.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fint::{BaseDescriptor, Rational, SamplerConfig};
use serde::Deserialize;

/// An error in flags or config; mapped to exit code 64.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A base given either in the compact colon form or as a descriptor object.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BaseField {
    Compact(String),
    Descriptor(BaseDescriptor),
}

impl BaseField {
    pub fn resolve(&self) -> Result<BaseDescriptor> {
        match self {
            BaseField::Compact(s) => Ok(BaseDescriptor::parse_compact(s).map_err(|e| usage(e.to_string()))?),
            BaseField::Descriptor(d) => Ok(d.clone()),
        }
    }
}

/// Optional fields of the JSON config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub function: Option<String>,
    pub base: Option<BaseField>,
    pub coarser: Option<BaseField>,
    pub finer: Option<BaseField>,
    pub dominated: Option<BaseField>,
    pub dominating: Option<BaseField>,
    pub depth: Option<u32>,
    pub samples: Option<usize>,
    pub tolerance: Option<String>,
    pub epsilon: Option<String>,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    pub seed: Option<u64>,
    pub window: Option<usize>,
    pub pairs: Option<usize>,
    pub count: Option<usize>,
    pub max_cells: Option<u32>,
    pub denominator_bound: Option<u32>,
    pub tag_retry_cap: Option<u32>,
    pub projector: Option<String>,
    pub domain: Option<(String, String)>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub approx: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let parsed: FileConfig = serde_json::from_str(&text)
                    .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
                Ok(parsed)
            }
        }
    }

    pub fn sampler_config(&self, flag_bound: Option<u32>) -> Result<SamplerConfig> {
        let mut cfg = match flag_bound.or(self.denominator_bound) {
            None => SamplerConfig::default(),
            Some(bound) => {
                SamplerConfig::with_denominator_bound(bound).map_err(|e| usage(e.to_string()))?
            }
        };
        if let Some(cap) = self.tag_retry_cap {
            if cap == 0 {
                return Err(usage("tag_retry_cap must be positive"));
            }
            cfg.tag_retry_cap = cap;
        }
        Ok(cfg)
    }
}

pub fn require<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("missing required value `{name}` (flag or config)")))
}

pub fn parse_rational(text: &str, name: &str) -> Result<Rational> {
    text.parse::<Rational>()
        .map_err(|e| usage(format!("{name}: {e}")))
}

