use std::path::PathBuf;

use scorefuse::combiners::{fit_csi_weights, sample_covariance};
use scorefuse::ztransform::ZTransform;

use crate::artifacts::{save_json, Meta, SigmaBlock, TransformArtifact, TRANSFORM_FORMAT};
use crate::commands::CommonArgs;
use crate::config::{pick, require, ConfigHasher};
use crate::errors::Result;
use crate::io::read_dataset;

const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Inlier training scores (CSV or NDJSON)
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Output transform file (JSON)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Columns to negate at ingestion (outlier-oriented sources)
    #[arg(long, value_delimiter = ',')]
    pub negate: Vec<String>,
    /// Also fit the inlier z-covariance (needed for rule glrt-cov)
    #[arg(long)]
    pub with_covariance: bool,
    /// Ridge added to the covariance diagonal
    #[arg(long)]
    pub ridge: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: FitArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let train = require(pick(args.train.clone(), cfg.train.as_ref()), "train")?;
    let out = require(pick(args.out.clone(), cfg.out.as_ref()), "out")?;
    let negate = if args.negate.is_empty() {
        cfg.negate.clone().unwrap_or_default()
    } else {
        args.negate.clone()
    };
    let with_covariance = args.with_covariance || cfg.with_covariance.unwrap_or(false);
    let ridge = pick(args.ridge, cfg.ridge.as_ref()).unwrap_or(DEFAULT_RIDGE);
    let format = args.common.format(&cfg)?;
    let seed = args.common.seed(&cfg);

    let config_hash = ConfigHasher::new("fit")
        .arg("negate", &negate)
        .arg("with_covariance", with_covariance)
        .arg("ridge", ridge)
        .arg("csi", cfg.csi.as_ref().map(|c| c.grouping()))
        .arg("csi_train", cfg.csi.as_ref().and_then(|c| c.train.as_ref()))
        .arg("seed", seed)
        .finish();

    let ds = read_dataset(&train, format, &negate)?;
    let transform = ZTransform::fit(&ds.matrix)?;

    let csi_weights = match &cfg.csi {
        Some(csi) => {
            // The weight means may come from a different inlier file than
            // the transform's training data.
            let weights = match &csi.train {
                Some(path) => {
                    let csi_ds = read_dataset(path, format, &negate)?;
                    fit_csi_weights(&csi_ds.matrix, &csi.grouping())?
                }
                None => fit_csi_weights(&ds.matrix, &csi.grouping())?,
            };
            Some(weights)
        }
        None => None,
    };

    let sigma = if with_covariance {
        let z = transform.transform_matrix(&ds.matrix)?;
        let s = sample_covariance(&z, ridge)?;
        let m = s.nrows();
        Some(SigmaBlock {
            ridge,
            matrix: (0..m)
                .map(|i| (0..m).map(|j| s[(i, j)]).collect())
                .collect(),
        })
    } else {
        None
    };

    let artifact = TransformArtifact {
        format: TRANSFORM_FORMAT.to_string(),
        version: 1,
        meta: Meta::new(config_hash, seed),
        train_fingerprint: ds.fingerprint(),
        negate,
        transform,
        csi_weights,
        sigma,
    };
    save_json(&out, &artifact)
}
