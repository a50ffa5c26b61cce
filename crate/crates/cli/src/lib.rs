//! Command-line front end: builds each figure table or audit from a
//! [`config::RunConfig`] and renders it as CSV or JSON.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

use config::{Format, Target};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] cavity_entanglement::Error),
    #[error("tolerance breach: {0}")]
    ToleranceBreach(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io { .. } => 1,
            Self::ToleranceBreach(_) => 2,
            Self::Model(cavity_entanglement::Error::CutoffCeiling { .. }) => 3,
            Self::Model(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cavity",
    version,
    about = "Entanglement dynamics of two coupled pumped cavities"
)]
pub struct Args {
    /// What to compute.
    #[arg(value_enum)]
    pub target: Target,
    /// Flat key = value config file, applied over the built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n_initial: Option<u32>,
    #[arg(long)]
    pub t_max_scaled: Option<f64>,
    #[arg(long)]
    pub points: Option<u32>,
}

impl Args {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<config::RunConfig, CliError> {
        let mut cfg = config::RunConfig::defaults(self.target);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            cfg.apply_file(&text)?;
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.omega {
            cfg.omega = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.n_initial {
            cfg.n_initial = v;
        }
        if let Some(v) = self.t_max_scaled {
            cfg.t_max_scaled = v;
        }
        if let Some(v) = self.points {
            cfg.points = v as usize;
        }
        Ok(cfg)
    }
}
