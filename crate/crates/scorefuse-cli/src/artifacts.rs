//! On-disk artifacts: the fitted-transform bundle and the conformal
//! calibration bundle. Versioned JSON, written atomically, byte-identical
//! across reruns of the same inputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use scorefuse::combiners::{
    Combiner, CovGlrtConfig, CsiWeights, GlrtConfig, ResolvedCsi, RuleKind,
};
use scorefuse::conformal::ConformalCalibration;
use scorefuse::ztransform::{ScoreMatrix, ZTransform};

use crate::errors::{open_failed, AppError, Result};
use crate::io::write_atomic;

pub const TRANSFORM_FORMAT: &str = "scorefuse-transform";
pub const CALIBRATION_FORMAT: &str = "scorefuse-calibration";

/// Provenance block shared by all artifacts and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaBlock {
    pub ridge: f64,
    pub matrix: Vec<Vec<f64>>,
}

/// Output of `scorefuse fit`: the z-transform plus optional CSI weights and
/// inlier z-covariance, and the ingestion settings needed to reproduce the
/// exact score view (negated columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformArtifact {
    pub format: String,
    pub version: u32,
    pub meta: Meta,
    /// Canonical fingerprint of the parsed training data, used to refuse
    /// validation files that are not disjoint from it.
    pub train_fingerprint: String,
    pub negate: Vec<String>,
    pub transform: ZTransform,
    pub csi_weights: Option<CsiWeights>,
    pub sigma: Option<SigmaBlock>,
}

/// Output of `scorefuse calibrate-conformal`: everything `detect` needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationArtifact {
    pub format: String,
    pub version: u32,
    pub meta: Meta,
    pub val_fingerprint: String,
    pub negate: Vec<String>,
    pub transform: ZTransform,
    pub spec: StatisticSpec,
    pub calibration: ConformalCalibration,
}

/// How per-sample statistics are computed: a z-/p-vector combining rule, or
/// the CSI heuristic over raw grouped columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StatisticSpec {
    Combiner { combiner: Combiner },
    Csi { weights: CsiWeights },
}

impl StatisticSpec {
    /// Per-row statistics for a raw score matrix.
    pub fn compute(&self, transform: &ZTransform, matrix: &ScoreMatrix) -> Result<Vec<f64>> {
        match self {
            StatisticSpec::Combiner { combiner } => Ok(combiner
                .apply_transformed(transform, matrix)?
                .into_iter()
                .map(|s| s.value)
                .collect()),
            StatisticSpec::Csi { weights } => {
                let resolved = ResolvedCsi::new(weights, matrix)?;
                matrix
                    .rows()
                    .map(|row| Ok(resolved.statistic(row)?.value))
                    .collect()
            }
        }
    }
}

/// Build the statistic spec for a rule. `m` is the statistic dimension;
/// the artifact supplies the covariance (glrt-cov) and CSI weights when the
/// rule needs them.
pub fn build_spec(
    rule: RuleKind,
    epsilon: f64,
    m: usize,
    artifact: Option<&TransformArtifact>,
) -> Result<StatisticSpec> {
    let combiner = match rule {
        RuleKind::Glrt => Combiner::Glrt(GlrtConfig::new(epsilon, m)?),
        RuleKind::Stouffer => Combiner::Stouffer,
        RuleKind::Fisher => Combiner::Fisher,
        RuleKind::Bonferroni => Combiner::Bonferroni,
        RuleKind::Simes => Combiner::Simes,
        RuleKind::Alr => Combiner::Alr,
        RuleKind::GlrtCov => {
            let block = artifact.and_then(|a| a.sigma.as_ref()).ok_or_else(|| {
                AppError::usage(
                    "rule glrt-cov needs a covariance in the transform file; rerun `fit` with --with-covariance",
                )
            })?;
            let m = block.matrix.len();
            let sigma = nalgebra::DMatrix::from_fn(m, m, |i, j| block.matrix[i][j]);
            Combiner::GlrtCov(CovGlrtConfig::new(
                epsilon,
                sigma,
                CovGlrtConfig::DEFAULT_SOLVER_TOL,
            )?)
        }
        RuleKind::Csi => {
            let weights = artifact
                .and_then(|a| a.csi_weights.clone())
                .ok_or_else(|| {
                    AppError::usage(
                        "rule csi needs fitted weights in the transform file; rerun `fit` with a [csi] grouping in the config",
                    )
                })?;
            return Ok(StatisticSpec::Csi { weights });
        }
    };
    Ok(StatisticSpec::Combiner { combiner })
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| AppError::data(format!("serialization failed: {e}")))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = to_pretty_json(value)?;
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let raw = std::fs::read_to_string(path).map_err(|e| open_failed(path, e))?;
    serde_json::from_str(&raw)
        .map_err(|e| AppError::data(format!("corrupted {what} `{}`: {e}", path.display())))
}

pub fn load_transform(path: &Path) -> Result<TransformArtifact> {
    let artifact: TransformArtifact = load_json(path, "transform file")?;
    if artifact.format != TRANSFORM_FORMAT {
        return Err(AppError::data(format!(
            "`{}` is not a transform file (format `{}`)",
            path.display(),
            artifact.format
        )));
    }
    Ok(artifact)
}

pub fn load_calibration(path: &Path) -> Result<CalibrationArtifact> {
    let artifact: CalibrationArtifact = load_json(path, "calibration file")?;
    if artifact.format != CALIBRATION_FORMAT {
        return Err(AppError::data(format!(
            "`{}` is not a calibration file (format `{}`)",
            path.display(),
            artifact.format
        )));
    }
    Ok(artifact)
}
