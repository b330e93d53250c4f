//! Fuse multiple per-sample inlier scores into a single out-of-distribution
//! decision.
//!
//! The pipeline:
//!
//! 1. [`ztransform`] — fit per-score empirical cdfs on inlier training data
//!    and map raw scores to empirical z-values (standard normal under the
//!    inlier hypothesis).
//! 2. [`combiners`] — collapse a z-vector (or p-vector) into one scalar
//!    statistic: the negative-means GLRT, Stouffer, Fisher, Bonferroni,
//!    Simes/BH, ALR, the CSI heuristic, or a covariance-aware GLRT.
//! 3. [`conformal`] — calibrate a decision threshold on an independent
//!    validation set so that, with probability at least 1-δ over the
//!    validation draw, the false-alarm rate is at most α.
//! 4. [`evaluation`] / [`synthbench`] — AUROC, detection rate at fixed
//!    false-alarm rate, eigen-score analysis, and seeded synthetic
//!    negative-means benchmarks.
//!
//! Every statistic follows one orientation: **higher means more inlier**,
//! and a detector rejects (declares OOD) when the statistic is at or below
//! its threshold.

pub mod combiners;
pub mod conformal;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod synthbench;
pub mod ztransform;

pub use combiners::{CombinedStatistic, Combiner, RuleKind};
pub use conformal::{ConformalCalibration, Decision, GuaranteeConfig, ValidationBank};
pub use error::{Error, Result};
pub use numerics::{Probability, RngStream};
pub use ztransform::{Label, ScoreMatrix, ZMatrix, ZTransform};
