use std::fmt::Write as _;
use std::path::PathBuf;

use scorefuse::combiners::DEFAULT_EPSILON;
use scorefuse::evaluation::{eigen_analysis, ProjectionMetric};
use scorefuse::ztransform::{Label, ScoreMatrix, ZTransform};

use crate::artifacts::{save_json, Meta};
use crate::commands::CommonArgs;
use crate::config::{pick, require, ConfigHasher};
use crate::errors::{AppError, Result};
use crate::io::{meta_comment, read_dataset, write_atomic, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MuMetric {
    /// Componentwise clamp (eigen-scores sum to the GLRT statistic)
    Identity,
    /// Sample-covariance-metric projection (decomposes the covariance GLRT)
    SampleCov,
}

#[derive(Debug, clap::Args)]
pub struct EigenArgs {
    /// Inlier training scores
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Labeled test scores (inlier and ood rows)
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Ridge added to the covariance diagonal
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, value_enum, default_value = "identity")]
    pub mu_metric: MuMetric,
    /// Output table CSV (a JSON twin with eigenvectors is written alongside)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Split a labeled dataset into inlier and ood matrices.
fn split_by_label(ds: &Dataset) -> Result<(ScoreMatrix, ScoreMatrix)> {
    let labels = ds.matrix.labels().ok_or_else(|| {
        AppError::usage("eigen analysis needs a labeled test file (label column)")
    })?;
    let mut inlier_rows = Vec::new();
    let mut ood_rows = Vec::new();
    for (row, label) in ds.matrix.rows().zip(labels) {
        match label {
            Label::Inlier => inlier_rows.push(row.to_vec()),
            Label::Ood => ood_rows.push(row.to_vec()),
            Label::Unknown => {
                return Err(AppError::usage(
                    "eigen analysis needs every row labeled inlier or ood",
                ))
            }
        }
    }
    if inlier_rows.is_empty() || ood_rows.is_empty() {
        return Err(AppError::usage(
            "eigen analysis needs both inlier and ood rows in the test file",
        ));
    }
    let names = ds.matrix.column_names().to_vec();
    Ok((
        ScoreMatrix::new(names.clone(), inlier_rows)?,
        ScoreMatrix::new(names, ood_rows)?,
    ))
}

pub fn run(args: EigenArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let train = require(pick(args.train.clone(), cfg.train.as_ref()), "train")?;
    let test = require(pick(args.test.clone(), cfg.test.as_ref()), "test")?;
    let out = require(pick(args.out.clone(), cfg.out.as_ref()), "out")?;
    let epsilon = pick(args.epsilon, cfg.epsilon.as_ref()).unwrap_or(DEFAULT_EPSILON);
    let ridge = pick(args.ridge, cfg.ridge.as_ref()).unwrap_or(1e-6);
    let negate = cfg.negate.clone().unwrap_or_default();
    let format = args.common.format(&cfg)?;
    let seed = args.common.seed(&cfg);

    let config_hash = ConfigHasher::new("eigen")
        .arg("epsilon", epsilon)
        .arg("ridge", ridge)
        .arg("mu_metric", args.mu_metric)
        .arg("seed", seed)
        .finish();

    let train_ds = read_dataset(&train, format, &negate)?;
    let test_ds = read_dataset(&test, format, &negate)?;
    let transform = ZTransform::fit(&train_ds.matrix)?;
    let z_train = transform.transform_matrix(&train_ds.matrix)?;
    let (inlier, ood) = split_by_label(&test_ds)?;
    let z_inlier = transform.transform_matrix(&inlier)?;
    let z_ood = transform.transform_matrix(&ood)?;

    let metric = match args.mu_metric {
        MuMetric::Identity => ProjectionMetric::Identity,
        MuMetric::SampleCov => ProjectionMetric::SampleCovariance,
    };
    let table = eigen_analysis(&z_train, &z_inlier, &z_ood, epsilon, ridge, metric)?;

    let mut body = meta_comment(&config_hash, seed);
    body.push_str("component,eigenvalue,auroc\n");
    for (k, c) in table.components.iter().enumerate() {
        writeln!(body, "{},{},{}", k + 1, c.eigenvalue, c.auroc).unwrap();
    }
    write_atomic(&out, body.as_bytes())?;

    let json_path = out.with_extension("json");
    let components: Vec<serde_json::Value> = table
        .components
        .iter()
        .enumerate()
        .map(|(k, c)| {
            serde_json::json!({
                "component": k + 1,
                "eigenvalue": c.eigenvalue,
                "auroc": c.auroc,
                "eigenvector": c.eigenvector,
            })
        })
        .collect();
    save_json(
        &json_path,
        &serde_json::json!({
            "meta": Meta::new(config_hash, seed),
            "mu_metric": format!("{:?}", args.mu_metric),
            "components": components,
        }),
    )
}
