use std::fmt::Write as _;
use std::path::PathBuf;

use scorefuse::combiners::{RuleKind, DEFAULT_EPSILON};

use crate::artifacts::{build_spec, load_transform, StatisticSpec};
use crate::commands::CommonArgs;
use crate::config::{pick, require, ConfigHasher};
use crate::errors::{AppError, Result};
use crate::io::{meta_comment, read_dataset, write_atomic, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputKind {
    /// Raw scores; mapped through the fitted transform
    Scores,
    /// Already-transformed z-values; p-value rules recover q = Phi(z)
    Zvalues,
}

#[derive(Debug, clap::Args)]
pub struct CombineArgs {
    /// Transform file from `fit` (required for --input-kind scores)
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Test scores (CSV or NDJSON)
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Combining rule
    #[arg(long)]
    pub rule: Option<String>,
    /// Negative-means margin for glrt / glrt-cov
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "scores")]
    pub input_kind: InputKind,
    /// Output statistics CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn parse_rule(raw: &str) -> Result<RuleKind> {
    raw.parse::<RuleKind>().map_err(AppError::from)
}

/// Render one statistics CSV (shared with tests through the binary only).
fn render(ds: &Dataset, stats: &[f64], rule: RuleKind, header: &str) -> String {
    let mut out = String::from(header);
    out.push_str("sample_id,statistic,rule\n");
    for (id, stat) in ds.ids.iter().zip(stats) {
        writeln!(out, "{id},{stat},{}", rule.name()).unwrap();
    }
    out
}

pub fn run(args: CombineArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let test = require(pick(args.test.clone(), cfg.test.as_ref()), "test")?;
    let out = require(pick(args.out.clone(), cfg.out.as_ref()), "out")?;
    let rule = parse_rule(&require(pick(args.rule.clone(), cfg.rule.as_ref()), "rule")?)?;
    let epsilon = pick(args.epsilon, cfg.epsilon.as_ref()).unwrap_or(DEFAULT_EPSILON);
    let format = args.common.format(&cfg)?;
    let seed = args.common.seed(&cfg);

    let config_hash = ConfigHasher::new("combine")
        .arg("rule", rule.name())
        .arg("epsilon", epsilon)
        .arg("input_kind", args.input_kind)
        .arg("seed", seed)
        .finish();

    let (stats, ds) = match args.input_kind {
        InputKind::Scores => {
            let tpath = require(args.transform.clone(), "transform")?;
            let artifact = load_transform(&tpath)?;
            let ds = read_dataset(&test, format, &artifact.negate)?;
            let m = artifact.transform.column_names().len();
            let spec = build_spec(rule, epsilon, m, Some(&artifact))?;
            (spec.compute(&artifact.transform, &ds.matrix)?, ds)
        }
        InputKind::Zvalues => {
            let artifact = match &args.transform {
                Some(p) => Some(load_transform(p)?),
                None => None,
            };
            let ds = read_dataset(&test, format, &[])?;
            let spec = build_spec(rule, epsilon, ds.matrix.ncols(), artifact.as_ref())?;
            let stats = match &spec {
                StatisticSpec::Combiner { combiner } => ds
                    .matrix
                    .rows()
                    .map(|z| combiner.apply_z(z).map(|s| s.value))
                    .collect::<scorefuse::Result<Vec<f64>>>()?,
                StatisticSpec::Csi { .. } => {
                    return Err(AppError::usage(
                        "rule csi consumes raw grouped scores; use --input-kind scores",
                    ))
                }
            };
            (stats, ds)
        }
    };

    let body = render(&ds, &stats, rule, &meta_comment(&config_hash, seed));
    write_atomic(&out, body.as_bytes())
}
