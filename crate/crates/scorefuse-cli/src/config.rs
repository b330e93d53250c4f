//! Run configuration: a TOML file mirroring the command-line flags, plus the
//! deterministic config hash recorded in every output.
//!
//! Precedence is flag > config-file value > default. Any field may live in
//! either place.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use scorefuse::combiners::{CsiGroup, CsiGrouping};

use crate::errors::{open_failed, AppError, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsiConfig {
    pub groups: Vec<CsiGroupConfig>,
    /// Optional separate training file for the weight means; the transform's
    /// training data is used when absent.
    pub train: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsiGroupConfig {
    pub cos: String,
    pub norm: String,
    pub shift: String,
}

impl CsiConfig {
    pub fn grouping(&self) -> CsiGrouping {
        CsiGrouping {
            groups: self
                .groups
                .iter()
                .map(|g| CsiGroup {
                    cos: g.cos.clone(),
                    norm: g.norm.clone(),
                    shift: g.shift.clone(),
                })
                .collect(),
        }
    }
}

/// The file-backed half of the configuration. Field names mirror the flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub rule: Option<String>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub negate: Option<Vec<String>>,
    pub ridge: Option<f64>,
    pub with_covariance: Option<bool>,
    pub csi: Option<CsiConfig>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let raw = std::fs::read_to_string(p).map_err(|e| open_failed(p, e))?;
                toml::from_str(&raw)
                    .map_err(|e| AppError::usage(format!("bad config `{}`: {e}", p.display())))
            }
        }
    }
}

/// Pick the flag when present, else the config value.
pub fn pick<T: Clone>(flag: Option<T>, cfg: Option<&T>) -> Option<T> {
    flag.or_else(|| cfg.cloned())
}

pub fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| {
        AppError::usage(format!("missing required option `{what}` (flag or config file)"))
    })
}

/// Deterministic 12-hex-digit hash of the effective configuration. Keys are
/// inserted in a fixed order, so identical settings always hash identically.
pub struct ConfigHasher {
    entries: Vec<(String, String)>,
}

impl ConfigHasher {
    pub fn new(command: &str) -> Self {
        Self {
            entries: vec![("command".into(), command.into())],
        }
    }

    pub fn arg(mut self, key: &str, value: impl std::fmt::Debug) -> Self {
        self.entries.push((key.into(), format!("{value:?}")));
        self
    }

    pub fn finish(self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.entries {
            hasher.update(k.as_bytes());
            hasher.update([0u8]);
            hasher.update(v.as_bytes());
            hasher.update([0xff]);
        }
        let digest = hasher.finalize();
        let hex = format!("{digest:x}");
        hex[..12].to_string()
    }
}
