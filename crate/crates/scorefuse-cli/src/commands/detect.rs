use std::fmt::Write as _;
use std::path::PathBuf;

use scorefuse::conformal::detect;

use crate::artifacts::load_calibration;
use crate::commands::CommonArgs;
use crate::config::{pick, require, ConfigHasher};
use crate::errors::Result;
use crate::io::{meta_comment, read_dataset, write_atomic};

#[derive(Debug, clap::Args)]
pub struct DetectArgs {
    /// Calibration file from `calibrate-conformal`
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Test scores (CSV or NDJSON)
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Output decisions CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: DetectArgs) -> Result<()> {
    let cfg = args.common.load_config()?;
    let cal_path = require(args.calibration.clone(), "calibration")?;
    let test = require(pick(args.test.clone(), cfg.test.as_ref()), "test")?;
    let out = require(pick(args.out.clone(), cfg.out.as_ref()), "out")?;
    let format = args.common.format(&cfg)?;
    let seed = args.common.seed(&cfg);

    let config_hash = ConfigHasher::new("detect")
        .arg("seed", seed)
        .finish();

    let artifact = load_calibration(&cal_path)?;
    let ds = read_dataset(&test, format, &artifact.negate)?;
    let statistics = artifact.spec.compute(&artifact.transform, &ds.matrix)?;

    let mut body = meta_comment(&config_hash, seed);
    body.push_str("sample_id,statistic,conformal_p,decision\n");
    for (id, &t) in ds.ids.iter().zip(&statistics) {
        let p = artifact.calibration.p_value(t)?;
        let decision = detect(t, &artifact.calibration)?;
        writeln!(body, "{id},{t},{p},{decision}").unwrap();
    }
    write_atomic(&out, body.as_bytes())
}
