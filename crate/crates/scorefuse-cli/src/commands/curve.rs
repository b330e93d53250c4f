use std::fmt::Write as _;
use std::path::PathBuf;

use scorefuse::combiners::{glrt_statistic, GlrtConfig, DEFAULT_EPSILON};
use scorefuse::evaluation::calibrated_curve;
use scorefuse::numerics::{std_normal_cdf, Probability};

use crate::commands::CommonArgs;
use crate::config::{pick, require, ConfigHasher};
use crate::errors::{AppError, Result};
use crate::io::{meta_comment, write_atomic};

/// Scalar (m = 1) statistics with a calibrated-curve rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CurveRule {
    Glrt,
    Stouffer,
    Fisher,
}

#[derive(Debug, clap::Args)]
pub struct CurveArgs {
    #[arg(long, value_enum)]
    pub rule: Option<CurveRule>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// False-alarm rate at which the curve crosses zero
    #[arg(long, default_value_t = 0.1)]
    pub far_target: f64,
    /// Grid as lo:hi:step
    #[arg(long, default_value = "-4:4:0.01", allow_hyphen_values = true)]
    pub grid: String,
    /// Output CSV of (z, calibrated statistic)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(AppError::usage(format!("bad grid `{spec}`; expected lo:hi:step")));
    }
    let lo: f64 = parts[0].parse().map_err(|_| AppError::usage("bad grid lo"))?;
    let hi: f64 = parts[1].parse().map_err(|_| AppError::usage("bad grid hi"))?;
    let step: f64 = parts[2].parse().map_err(|_| AppError::usage("bad grid step"))?;
    if !(step > 0.0 && hi > lo) {
        return Err(AppError::usage("grid needs hi > lo and step > 0"));
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

pub fn run(args: CurveArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let out = require(pick(args.out.clone(), cfg.out.as_ref()), "out")?;
    let rule = require(args.rule, "rule")?;
    let epsilon = pick(args.epsilon, cfg.epsilon.as_ref()).unwrap_or(DEFAULT_EPSILON);
    let seed = args.common.seed(&cfg);
    let grid = parse_grid(&args.grid)?;
    let far = Probability::new(args.far_target).map_err(AppError::from)?;

    let config_hash = ConfigHasher::new("curve")
        .arg("rule", rule)
        .arg("epsilon", epsilon)
        .arg("far_target", args.far_target)
        .arg("grid", &args.grid)
        .arg("seed", seed)
        .finish();

    let curve = match rule {
        CurveRule::Glrt => {
            let c = GlrtConfig::new(epsilon, 1)?;
            calibrated_curve(|z| glrt_statistic(&[z], &c).unwrap().value, far, &grid)?
        }
        CurveRule::Stouffer => calibrated_curve(|z| z, far, &grid)?,
        CurveRule::Fisher => calibrated_curve(
            |z| std_normal_cdf(z).unwrap().get().ln(),
            far,
            &grid,
        )?,
    };

    let mut body = meta_comment(&config_hash, seed);
    body.push_str("z,calibrated\n");
    for (z, v) in curve {
        writeln!(body, "{z},{v}").unwrap();
    }
    write_atomic(&out, body.as_bytes())
}
