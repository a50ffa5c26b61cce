//! Run configuration: per-target defaults, a flat `key = value` file format
//! and command-line overrides, applied in that order.

use std::fmt::Write as _;
use std::str::FromStr;

use cavity_entanglement::figures::PumpPair;
use cavity_entanglement::fluctuation::FluctuationWidth;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Sweep,
    OracleCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on. Keys that a target does not use are carried
/// along unchanged and echoed in JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub target: Target,
    pub format: Format,
    pub seed: u64,

    pub omega: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_initial: u32,

    /// Time window in units of `pi / lambda`; the maximization horizon for
    /// `fig5` and `sweep`, the total evolution time for `fig6`, the largest
    /// sampled time for `oracle-check`.
    pub t_max_scaled: f64,
    /// Time samples on the window. For `fig6` the output grid is rounded up
    /// to a whole number of samples per segment.
    pub points: usize,

    pub n_values: Vec<u32>,
    pub pairs: Vec<PumpPair>,
    pub lambdas: Vec<f64>,

    pub epsilon_min: f64,
    pub epsilon_max: f64,
    pub epsilon_points: usize,
    pub sensitivity_horizons: Vec<f64>,

    pub mean_epsilon: f64,
    pub trials: usize,
    pub segments: usize,
    pub width: FluctuationWidth,

    pub lambda_min: f64,
    pub lambda_max: f64,
    pub pump_free_draws: usize,
    pub pumped_draws: usize,
    pub times_per_draw: usize,
    pub exact_tol: f64,
    pub convergence_tol: f64,
    pub cutoff_ceiling: usize,
}

impl RunConfig {
    pub fn defaults(target: Target) -> Self {
        let mut c = Self {
            target,
            format: Format::Csv,
            seed: 20240607,
            omega: 1.0,
            lambda: 0.1,
            epsilon: 0.0,
            n_initial: 5,
            t_max_scaled: 1.0,
            points: 2001,
            n_values: vec![1, 5, 10, 50],
            pairs: Vec::new(),
            lambdas: Vec::new(),
            epsilon_min: 0.0,
            epsilon_max: 0.5,
            epsilon_points: 51,
            sensitivity_horizons: Vec::new(),
            mean_epsilon: 0.3,
            trials: 10,
            segments: 100,
            width: FluctuationWidth::Std,
            lambda_min: 1e-3,
            lambda_max: 0.2,
            pump_free_draws: 50,
            pumped_draws: 8,
            times_per_draw: 4,
            exact_tol: 1e-8,
            convergence_tol: 1e-7,
            cutoff_ceiling: 120,
        };
        match target {
            Target::Fig1 | Target::Fig2 => {}
            Target::Fig3 => {
                c.pairs = vec![
                    PumpPair::new(0.001, 0.1),
                    PumpPair::new(0.001, 0.001),
                    PumpPair::new(0.1, 0.1),
                    PumpPair::new(0.1, 0.001),
                ];
            }
            Target::Fig4 => {
                c.pairs = vec![
                    PumpPair::new(0.001, 0.1),
                    PumpPair::new(0.001, 0.001),
                    PumpPair::new(0.1, 0.005),
                ];
            }
            Target::Fig5 => {
                c.omega = 2.0;
                c.t_max_scaled = 2.0;
                c.points = 4000;
                c.lambdas = vec![0.001, 0.005, 0.01, 0.05, 0.1];
                c.sensitivity_horizons = vec![1.0, 5.0];
            }
            Target::Fig6 => {
                c.t_max_scaled = 5.0;
                c.points = 101;
                c.lambdas = vec![0.001, 0.05];
            }
            Target::Sweep => {
                c.t_max_scaled = 2.0;
                c.points = 2000;
            }
            Target::OracleCheck => {
                c.format = Format::Json;
                c.epsilon_max = 0.3;
            }
        }
        c
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim() {
            "target" => {
                let t = Target::from_str(v, true).map_err(|e| bad(key, v, &e))?;
                if t != self.target {
                    return Err(CliError::Usage(format!(
                        "config is for target {v}, not {}",
                        self.target.name()
                    )));
                }
            }
            "format" => self.format = Format::from_str(v, true).map_err(|e| bad(key, v, &e))?,
            "seed" => self.seed = scalar(key, v)?,
            "omega" => self.omega = scalar(key, v)?,
            "lambda" => self.lambda = scalar(key, v)?,
            "epsilon" => self.epsilon = scalar(key, v)?,
            "n_initial" => self.n_initial = scalar(key, v)?,
            "t_max_scaled" => self.t_max_scaled = scalar(key, v)?,
            "points" => self.points = scalar(key, v)?,
            "n_values" => self.n_values = list(key, v)?,
            "pairs" => self.pairs = pairs(key, v)?,
            "lambdas" => self.lambdas = list(key, v)?,
            "epsilon_min" => self.epsilon_min = scalar(key, v)?,
            "epsilon_max" => self.epsilon_max = scalar(key, v)?,
            "epsilon_points" => self.epsilon_points = scalar(key, v)?,
            "sensitivity_horizons" => self.sensitivity_horizons = list(key, v)?,
            "mean_epsilon" => self.mean_epsilon = scalar(key, v)?,
            "trials" => self.trials = scalar(key, v)?,
            "segments" => self.segments = scalar(key, v)?,
            "width" => {
                self.width = match v.to_ascii_lowercase().as_str() {
                    "std" => FluctuationWidth::Std,
                    "variance" => FluctuationWidth::Variance,
                    _ => return Err(bad(key, v, "expected std or variance")),
                }
            }
            "lambda_min" => self.lambda_min = scalar(key, v)?,
            "lambda_max" => self.lambda_max = scalar(key, v)?,
            "pump_free_draws" => self.pump_free_draws = scalar(key, v)?,
            "pumped_draws" => self.pumped_draws = scalar(key, v)?,
            "times_per_draw" => self.times_per_draw = scalar(key, v)?,
            "exact_tol" => self.exact_tol = scalar(key, v)?,
            "convergence_tol" => self.convergence_tol = scalar(key, v)?,
            "cutoff_ceiling" => self.cutoff_ceiling = scalar(key, v)?,
            other => return Err(CliError::Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a
    /// comment, blank lines are ignored.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "line {}: expected key = value, got `{line}`",
                    lineno + 1
                ))
            })?;
            self.set(k, v)
                .map_err(|e| CliError::Usage(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Renders the config in the file format; `apply_file` on the result
    /// reproduces `self`.
    pub fn to_file_string(&self) -> String {
        let join = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("target", self.target.name().into());
        kv("format", format!("{:?}", self.format).to_lowercase());
        kv("seed", self.seed.to_string());
        kv("omega", self.omega.to_string());
        kv("lambda", self.lambda.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("n_initial", self.n_initial.to_string());
        kv("t_max_scaled", self.t_max_scaled.to_string());
        kv("points", self.points.to_string());
        kv(
            "n_values",
            self.n_values
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(", "),
        );
        kv(
            "pairs",
            self.pairs
                .iter()
                .map(|p| format!("{}:{}", p.lambda, p.epsilon))
                .collect::<Vec<_>>()
                .join(", "),
        );
        kv("lambdas", join(&self.lambdas));
        kv("epsilon_min", self.epsilon_min.to_string());
        kv("epsilon_max", self.epsilon_max.to_string());
        kv("epsilon_points", self.epsilon_points.to_string());
        kv("sensitivity_horizons", join(&self.sensitivity_horizons));
        kv("mean_epsilon", self.mean_epsilon.to_string());
        kv("trials", self.trials.to_string());
        kv("segments", self.segments.to_string());
        kv("width", format!("{:?}", self.width).to_lowercase());
        kv("lambda_min", self.lambda_min.to_string());
        kv("lambda_max", self.lambda_max.to_string());
        kv("pump_free_draws", self.pump_free_draws.to_string());
        kv("pumped_draws", self.pumped_draws.to_string());
        kv("times_per_draw", self.times_per_draw.to_string());
        kv("exact_tol", self.exact_tol.to_string());
        kv("convergence_tol", self.convergence_tol.to_string());
        kv("cutoff_ceiling", self.cutoff_ceiling.to_string());
        s
    }
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Sweep => "sweep",
            Self::OracleCheck => "oracle-check",
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("bad value `{value}` for `{key}`: {why}"))
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| bad(key, v, e))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| scalar(key, x.trim())).collect()
}

/// `lambda:epsilon` items, comma separated.
fn pairs(key: &str, v: &str) -> Result<Vec<PumpPair>, CliError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            let (l, e) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| bad(key, item, "expected lambda:epsilon"))?;
            Ok(PumpPair::new(
                scalar(key, l.trim())?,
                scalar(key, e.trim())?,
            ))
        })
        .collect()
}
