use std::path::PathBuf;

use scorefuse::combiners::DEFAULT_EPSILON;
use scorefuse::conformal::{ConformalCalibration, GuaranteeConfig, ValidationBank};

use crate::artifacts::{
    build_spec, load_transform, save_json, CalibrationArtifact, Meta, CALIBRATION_FORMAT,
};
use crate::commands::combine::parse_rule;
use crate::commands::CommonArgs;
use crate::config::{pick, require, ConfigHasher};
use crate::errors::{AppError, Result};
use crate::io::read_dataset;

#[derive(Debug, clap::Args)]
pub struct CalibrateArgs {
    /// Validation scores, drawn under the inlier hypothesis and disjoint
    /// from the training data
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Transform file from `fit`
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Combining rule
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Maximum false-alarm rate
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Maximum failure rate of the guarantee
    #[arg(long)]
    pub delta: Option<f64>,
    /// Output calibration file (JSON)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: CalibrateArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let val = require(pick(args.val.clone(), cfg.val.as_ref()), "val")?;
    let tpath = require(args.transform.clone(), "transform")?;
    let out = require(pick(args.out.clone(), cfg.out.as_ref()), "out")?;
    let rule = parse_rule(&require(pick(args.rule.clone(), cfg.rule.as_ref()), "rule")?)?;
    let epsilon = pick(args.epsilon, cfg.epsilon.as_ref()).unwrap_or(DEFAULT_EPSILON);
    let alpha = require(pick(args.alpha, cfg.alpha.as_ref()), "alpha")?;
    let delta = require(pick(args.delta, cfg.delta.as_ref()), "delta")?;
    let format = args.common.format(&cfg)?;
    let seed = args.common.seed(&cfg);

    let guarantee = GuaranteeConfig::new(alpha, delta)?;
    let artifact = load_transform(&tpath)?;

    let config_hash = ConfigHasher::new("calibrate-conformal")
        .arg("rule", rule.name())
        .arg("epsilon", epsilon)
        .arg("alpha", alpha)
        .arg("delta", delta)
        .arg("seed", seed)
        .finish();

    let ds = read_dataset(&val, format, &artifact.negate)?;
    // Conformal validity needs the validation set independent of the data
    // that fitted the transform (same path implies same data).
    let val_fingerprint = ds.fingerprint();
    if val_fingerprint == artifact.train_fingerprint {
        return Err(AppError::usage(format!(
            "validation file `{}` carries the transform's training data; conformal calibration needs disjoint data",
            val.display()
        )));
    }
    let m = artifact.transform.column_names().len();
    let spec = build_spec(rule, epsilon, m, Some(&artifact))?;
    let statistics = spec.compute(&artifact.transform, &ds.matrix)?;
    let bank = ValidationBank::new(statistics)?;
    let calibration = ConformalCalibration::calibrate(bank, guarantee)?;

    let out_artifact = CalibrationArtifact {
        format: CALIBRATION_FORMAT.to_string(),
        version: 1,
        meta: Meta::new(config_hash, seed),
        val_fingerprint,
        negate: artifact.negate.clone(),
        transform: artifact.transform,
        spec,
        calibration,
    };
    save_json(&out, &out_artifact)
}
