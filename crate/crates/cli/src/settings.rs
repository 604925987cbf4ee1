//! Flags and their JSON config-file counterpart.
//!
//! Every flag may also appear in the config file under its long name
//! (`"l-max": 15`). Flags win over the file, the file wins over defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::failure::{CliResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// JSON file with defaults for any of these options
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Mode list as `n:l,n:l,...`
    #[arg(long)]
    pub modes: Option<String>,
    /// Enumerate all modes with |l| <= L (needs --n-max)
    #[arg(long)]
    pub l_max: Option<u32>,
    /// Enumerate all modes with n <= N (needs --l-max)
    #[arg(long)]
    pub n_max: Option<u32>,
    /// JSON array of `{"n": .., "l": ..}` modes
    #[arg(long)]
    pub mode_file: Option<PathBuf>,

    /// State file (JSON)
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    /// Pair-amplitude profile: `exp:LAMBDA_L:LAMBDA_N`, `uniform` or `table:PATH`
    #[arg(long)]
    pub profile: Option<String>,
    /// Real pair amplitudes `a1,a2,...` of a pure correlated state
    #[arg(long)]
    pub amplitudes: Option<String>,

    /// Detected pairs per setting
    #[arg(long)]
    pub flux: Option<f64>,
    /// Write expected counts instead of Poisson draws
    #[arg(long)]
    #[serde(default)]
    pub expectation: bool,
    /// Draw each z-basis population once and reuse it across settings
    #[arg(long)]
    #[serde(default)]
    pub share_populations: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo resamples for the witness uncertainty
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Perturbation trials per kind
    #[arg(long)]
    pub trials: Option<usize>,
    /// Largest perturbation strength
    #[arg(long)]
    pub strength_max: Option<f64>,
    /// Perturbation kind: state, projector, both or all
    #[arg(long)]
    pub kind: Option<String>,
    /// Dimension for `verify`
    #[arg(long)]
    pub dim: Option<usize>,
    /// Random-search draws per d for `verify`
    #[arg(long)]
    pub iters: Option<usize>,
    /// Largest D for full two-photon matrices
    #[arg(long)]
    pub dim_cap: Option<usize>,

    /// Coincidence dataset (`.csv` or `.json`)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (directory for `report`); stdout when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Print the size of the measurement set and exit
    #[arg(long)]
    #[serde(skip)]
    pub dry_run: bool,
}

macro_rules! prefer {
    ($a:ident, $b:ident, $($field:ident),*) => {
        $( if $a.$field.is_none() { $a.$field = $b.$field; } )*
    };
}

impl Settings {
    /// Fills unset flags from the config file, if one is given.
    pub fn resolve(mut self) -> CliResult<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::config(format!("config {}: {e}", path.display())))?;
        let file: Settings = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("config {}: {e}", path.display())))?;
        prefer!(
            self,
            file,
            modes,
            l_max,
            n_max,
            mode_file,
            state_file,
            profile,
            amplitudes,
            flux,
            seed,
            resamples,
            trials,
            strength_max,
            kind,
            dim,
            iters,
            dim_cap,
            input,
            output,
            format
        );
        self.expectation |= file.expectation;
        self.share_populations |= file.share_populations;
        Ok(self)
    }

    pub fn require_seed(&self, why: &str) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| Failure::config(format!("--seed is required {why}")))
    }

    /// Checks that inputs exist and outputs can be created before any work.
    pub fn validate_paths(&self, output_is_dir: bool) -> CliResult<()> {
        for p in [&self.mode_file, &self.state_file, &self.input]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(Failure::config(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        if let Some(table) = self
            .profile
            .as_deref()
            .and_then(|p| p.strip_prefix("table:"))
        {
            if !Path::new(table).is_file() {
                return Err(Failure::config(format!(
                    "rate table {table} does not exist"
                )));
            }
        }
        if let Some(out) = &self.output {
            let parent = if output_is_dir {
                Some(out.as_path())
            } else {
                out.parent().filter(|p| !p.as_os_str().is_empty())
            };
            if let Some(dir) = parent {
                if !output_is_dir && !dir.is_dir() {
                    return Err(Failure::config(format!(
                        "output directory {} does not exist",
                        dir.display()
                    )));
                }
                if output_is_dir && dir.exists() && !dir.is_dir() {
                    return Err(Failure::config(format!(
                        "{} is not a directory",
                        dir.display()
                    )));
                }
            }
        }
        Ok(())
    }
}
