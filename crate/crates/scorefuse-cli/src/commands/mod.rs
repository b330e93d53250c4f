pub mod calibrate;
pub mod combine;
pub mod curve;
pub mod detect;
pub mod eigen;
pub mod evaluate;
pub mod fit;
pub mod simulate;

use std::path::PathBuf;

use crate::config::{pick, RunConfig};
use crate::errors::Result;
use crate::io::FileFormat;

/// Flags shared by every subcommand.
#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// TOML config file mirroring the flags (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input file format; inferred from the extension when omitted
    #[arg(long)]
    pub format: Option<String>,
    /// Seed recorded in outputs and used by randomized commands
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    pub fn load_config(&self) -> Result<RunConfig> {
        RunConfig::load(self.config.as_deref())
    }

    pub fn format(&self, cfg: &RunConfig) -> Result<Option<FileFormat>> {
        pick(self.format.clone(), cfg.format.as_ref())
            .map(|s| FileFormat::parse(&s))
            .transpose()
    }

    pub fn seed(&self, cfg: &RunConfig) -> u64 {
        pick(self.seed, cfg.seed.as_ref()).unwrap_or(0)
    }
}
