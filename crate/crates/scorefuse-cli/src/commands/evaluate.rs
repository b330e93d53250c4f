use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use scorefuse::evaluation::{auroc, dr_at_far, roc_points, LabeledStatistics};
use scorefuse::numerics::Probability;
use scorefuse::ztransform::Label;

use crate::artifacts::{save_json, Meta};
use crate::commands::CommonArgs;
use crate::config::{pick, require, ConfigHasher};
use crate::errors::{open_failed, AppError, Result};
use crate::io::{meta_comment, write_atomic};

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    /// Labeled statistics CSV: sample_id,statistic[,rule],label
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// False-alarm budgets, comma separated
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Output report (JSON)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional DR-vs-FAR curve CSV
    #[arg(long)]
    pub roc_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct DrRow {
    alpha: f64,
    dr: f64,
    threshold: f64,
    achieved_far: f64,
    degenerate: bool,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    meta: Meta,
    n_inlier: usize,
    n_ood: usize,
    auroc: f64,
    dr_at_far: Vec<DrRow>,
}

/// Read `sample_id,statistic[,rule],label` rows.
fn read_labeled_statistics(path: &Path) -> Result<LabeledStatistics> {
    let raw = std::fs::read_to_string(path).map_err(|e| open_failed(path, e))?;
    // Skip the provenance comment emitted by other subcommands.
    let data: String = raw
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(data.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| AppError::usage(format!("{}: bad CSV header: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let stat_col = headers
        .iter()
        .position(|h| h == "statistic")
        .ok_or_else(|| {
            AppError::usage(format!("{}: missing `statistic` column", path.display()))
        })?;
    let label_col = headers.iter().position(|h| h == "label").ok_or_else(|| {
        AppError::usage(format!("{}: missing `label` column", path.display()))
    })?;

    let mut inliers = Vec::new();
    let mut oods = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record =
            record.map_err(|e| AppError::usage(format!("line {line}: bad CSV record: {e}")))?;
        let stat: f64 = record[stat_col].trim().parse().map_err(|_| {
            AppError::usage(format!(
                "line {line}: non-numeric statistic `{}`",
                &record[stat_col]
            ))
        })?;
        let label = match record[label_col].trim() {
            "inlier" => Label::Inlier,
            "ood" => Label::Ood,
            other => {
                return Err(AppError::usage(format!(
                    "line {line}: label `{other}` (evaluation needs inlier|ood)"
                )))
            }
        };
        match label {
            Label::Inlier => inliers.push(stat),
            Label::Ood => oods.push(stat),
            Label::Unknown => unreachable!(),
        }
    }
    Ok(LabeledStatistics::new(inliers, oods)?)
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let stats_path = require(args.stats.clone(), "stats")?;
    let out = require(pick(args.out.clone(), cfg.out.as_ref()), "out")?;
    let mut alphas = args.alpha.clone();
    if alphas.is_empty() {
        alphas = match cfg.alpha {
            Some(a) => vec![a],
            None => vec![0.05],
        };
    }
    let seed = args.common.seed(&cfg);
    let config_hash = ConfigHasher::new("evaluate")
        .arg("alpha", &alphas)
        .arg("seed", seed)
        .finish();

    let labeled = read_labeled_statistics(&stats_path)?;
    let auc = auroc(&labeled)?;
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let p = Probability::new(alpha).map_err(AppError::from)?;
        let r = dr_at_far(&labeled, p)?;
        rows.push(DrRow {
            alpha,
            dr: r.dr,
            threshold: r.threshold,
            achieved_far: r.achieved_far,
            degenerate: r.degenerate,
        });
    }
    let report = EvalReport {
        meta: Meta::new(config_hash.clone(), seed),
        n_inlier: labeled.inliers().len(),
        n_ood: labeled.oods().len(),
        auroc: auc.get(),
        dr_at_far: rows,
    };
    save_json(&out, &report)?;

    if let Some(roc_path) = &args.roc_out {
        let mut body = meta_comment(&config_hash, seed);
        body.push_str("far,dr\n");
        for (far, dr) in roc_points(&labeled)? {
            writeln!(body, "{far},{dr}").unwrap();
        }
        write_atomic(roc_path, body.as_bytes())?;
    }
    Ok(())
}
