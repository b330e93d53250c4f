use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use scorefuse::combiners::{Combiner, GlrtConfig};
use scorefuse::conformal::GuaranteeConfig;
use scorefuse::numerics::Probability;
use scorefuse::synthbench::{
    default_suite, epsilon_sweep, guarantee_trial, power_sweep, NmScenario, ScenarioKind,
};

use crate::artifacts::{save_json, Meta};
use crate::commands::CommonArgs;
use crate::config::{require, ConfigHasher};
use crate::errors::{open_failed, AppError, Result};
use crate::io::{meta_comment, write_atomic};

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Scenario config (TOML); the built-in suite runs when omitted
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ScenarioFile {
    /// power-sweep | epsilon-sweep | guarantee
    mode: Option<String>,
    seed: Option<u64>,
    far_level: Option<f64>,
    rules: Option<Vec<String>>,
    eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    scenario: Vec<ScenarioConfig>,
    guarantee: Option<GuaranteeSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    name: String,
    /// dense | sparse
    kind: String,
    m: usize,
    /// Uniform shift for dense scenarios, or the shift of the k sparse
    /// coordinates.
    shift: Option<f64>,
    /// Explicit mean vector (overrides shift/k)
    mu: Option<Vec<f64>>,
    k: Option<usize>,
    /// AR(1) correlation coefficient
    rho: Option<f64>,
    /// Full correlation matrix (overrides rho)
    correlation: Option<Vec<Vec<f64>>>,
    epsilon: Option<f64>,
    n: usize,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GuaranteeSection {
    v: usize,
    alpha: f64,
    delta: f64,
    trials: usize,
}

fn build_scenario(cfg: &ScenarioConfig, default_seed: u64) -> Result<NmScenario> {
    let epsilon = cfg.epsilon.unwrap_or(0.25);
    let seed = cfg.seed.unwrap_or(default_seed);
    let mut scn = match cfg.kind.as_str() {
        "dense" => {
            let shift = cfg.shift.ok_or_else(|| {
                AppError::usage(format!("scenario `{}`: dense needs `shift`", cfg.name))
            })?;
            NmScenario::dense(&cfg.name, cfg.m, shift, epsilon, cfg.n, seed)
        }
        "sparse" => {
            let shift = cfg.shift.ok_or_else(|| {
                AppError::usage(format!("scenario `{}`: sparse needs `shift`", cfg.name))
            })?;
            let k = cfg.k.ok_or_else(|| {
                AppError::usage(format!("scenario `{}`: sparse needs `k`", cfg.name))
            })?;
            NmScenario::sparse(&cfg.name, cfg.m, k, shift, epsilon, cfg.n, seed)
        }
        other => {
            return Err(AppError::usage(format!(
                "scenario `{}`: unknown kind `{other}` (dense|sparse)",
                cfg.name
            )))
        }
    };
    if let Some(mu) = &cfg.mu {
        scn.mu = mu.clone();
        scn.kind = if mu.iter().all(|&v| v <= -epsilon) {
            ScenarioKind::Dense
        } else {
            ScenarioKind::Sparse
        };
    }
    if let Some(c) = &cfg.correlation {
        scn.correlation = Some(c.clone());
    } else if let Some(rho) = cfg.rho {
        scn = scn.with_ar1(rho);
    }
    scn.validate()?;
    Ok(scn)
}

fn build_combiner(name: &str, epsilon: f64, m: usize) -> Result<Combiner> {
    Ok(match name {
        "glrt" => Combiner::Glrt(GlrtConfig::new(epsilon, m)?),
        "stouffer" => Combiner::Stouffer,
        "fisher" => Combiner::Fisher,
        "bonferroni" => Combiner::Bonferroni,
        "simes" => Combiner::Simes,
        "alr" => Combiner::Alr,
        other => {
            return Err(AppError::usage(format!(
                "rule `{other}` is not available in simulations (valid: glrt, stouffer, fisher, bonferroni, simes, alr)"
            )))
        }
    })
}

const DEFAULT_RULES: [&str; 6] = ["glrt", "stouffer", "fisher", "bonferroni", "simes", "alr"];
const DEFAULT_EPS_GRID: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

pub fn run(args: SimulateArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let out_dir = require(args.out.clone(), "out")?;
    let file: ScenarioFile = match &args.scenario {
        Some(p) => {
            let raw = std::fs::read_to_string(p).map_err(|e| open_failed(p, e))?;
            toml::from_str(&raw)
                .map_err(|e| AppError::usage(format!("bad scenario config `{}`: {e}", p.display())))?
        }
        None => ScenarioFile::default(),
    };
    let seed = args.common.seed.or(file.seed).or(cfg.seed).unwrap_or(0);
    let mode = file.mode.as_deref().unwrap_or("power-sweep");
    let far_level = Probability::new(file.far_level.unwrap_or(0.05)).map_err(AppError::from)?;

    let scenarios: Vec<NmScenario> = if file.scenario.is_empty() {
        default_suite(seed)
    } else {
        file.scenario
            .iter()
            .map(|c| build_scenario(c, seed))
            .collect::<Result<_>>()?
    };

    let config_hash = ConfigHasher::new("simulate")
        .arg("mode", mode)
        .arg("seed", seed)
        .finish();
    let meta = Meta::new(config_hash.clone(), seed);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| AppError::data(format!("cannot create `{}`: {e}", out_dir.display())))?;

    match mode {
        "power-sweep" => {
            let rule_names: Vec<String> = file
                .rules
                .clone()
                .unwrap_or_else(|| DEFAULT_RULES.iter().map(|s| s.to_string()).collect());
            let mut cells = Vec::new();
            for scn in &scenarios {
                let combiners: Vec<Combiner> = rule_names
                    .iter()
                    .map(|r| build_combiner(r, scn.epsilon, scn.m))
                    .collect::<Result<_>>()?;
                cells.extend(power_sweep(std::slice::from_ref(scn), &combiners, far_level)?);
            }
            let mut body = meta_comment(&config_hash, seed);
            body.push_str(
                "scenario,rule,auroc,auroc_se,dr_at_far,dr_se,far_level,degenerate_dr\n",
            );
            for c in &cells {
                writeln!(
                    body,
                    "{},{},{},{},{},{},{},{}",
                    c.scenario, c.rule, c.auroc, c.auroc_se, c.dr_at_far, c.dr_se, c.far_level,
                    c.degenerate_dr
                )
                .unwrap();
            }
            write_atomic(&out_dir.join("power_sweep.csv"), body.as_bytes())?;
            save_json(
                &out_dir.join("power_sweep.json"),
                &serde_json::json!({ "meta": meta, "cells": cells }),
            )?;
        }
        "epsilon-sweep" => {
            let grid = file.eps_grid.clone().unwrap_or(DEFAULT_EPS_GRID.to_vec());
            let mut body = meta_comment(&config_hash, seed);
            body.push_str("scenario,epsilon,auroc\n");
            let mut all = Vec::new();
            for scn in &scenarios {
                let rows = epsilon_sweep(scn, &grid)?;
                for r in &rows {
                    writeln!(body, "{},{},{}", scn.name, r.epsilon, r.auroc).unwrap();
                }
                all.push(serde_json::json!({ "scenario": scn.name, "rows": rows }));
            }
            write_atomic(&out_dir.join("epsilon_sweep.csv"), body.as_bytes())?;
            save_json(
                &out_dir.join("epsilon_sweep.json"),
                &serde_json::json!({ "meta": meta, "sweeps": all }),
            )?;
        }
        "guarantee" => {
            let section = file.guarantee.ok_or_else(|| {
                AppError::usage("mode guarantee needs a [guarantee] section (v, alpha, delta, trials)")
            })?;
            let g = GuaranteeConfig::new(section.alpha, section.delta)?;
            let outcome = guarantee_trial(section.v, &g, section.trials, seed)?;
            let mut body = meta_comment(&config_hash, seed);
            body.push_str("v,alpha,delta,trials,violation_rate,mean_far,a,l,alpha_min,degenerate\n");
            writeln!(
                body,
                "{},{},{},{},{},{},{},{},{},{}",
                section.v,
                section.alpha,
                section.delta,
                section.trials,
                outcome.violation_rate,
                outcome.mean_far,
                outcome.a,
                outcome.l,
                outcome.alpha_min,
                outcome.degenerate
            )
            .unwrap();
            write_atomic(&out_dir.join("guarantee.csv"), body.as_bytes())?;
            save_json(
                &out_dir.join("guarantee.json"),
                &serde_json::json!({ "meta": meta, "settings": section, "outcome": outcome }),
            )?;
        }
        other => {
            return Err(AppError::usage(format!(
                "unknown mode `{other}` (power-sweep|epsilon-sweep|guarantee)"
            )))
        }
    }
    Ok(())
}
