//! Dispatch from a resolved config to the library and the chosen format.

use cavity_entanglement::audit::{self, OracleCheckConfig};
use cavity_entanglement::figures::{self, linspace, MaxYScan, Table, TimeGrid};
use cavity_entanglement::fluctuation::EnsembleOptions;
use cavity_entanglement::ModelParams;
use serde_json::json;

use crate::config::{Format, RunConfig, Target};
use crate::output;
use crate::CliError;

/// Rendered output plus anything worth telling the user on stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub notes: Vec<String>,
    /// Set when a numerical check failed; the body is still written.
    pub breach: Option<String>,
}

fn params(cfg: &RunConfig) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(cfg.omega, cfg.lambda, cfg.epsilon, cfg.n_initial).validate()?)
}

fn grid(cfg: &RunConfig) -> TimeGrid {
    TimeGrid::new(cfg.t_max_scaled, cfg.points)
}

fn render(cfg: &RunConfig, table: &Table) -> String {
    match cfg.format {
        Format::Csv => output::table_csv(table),
        Format::Json => output::table_json(cfg, table, None),
    }
}

fn plain(body: String) -> Outcome {
    Outcome {
        body,
        notes: Vec::new(),
        breach: None,
    }
}

pub fn oracle_config(cfg: &RunConfig) -> OracleCheckConfig {
    OracleCheckConfig {
        omega: cfg.omega,
        n_max: cfg.n_initial,
        lambda_min: cfg.lambda_min,
        lambda_max: cfg.lambda_max,
        epsilon_max: cfg.epsilon_max,
        t_max_scaled: cfg.t_max_scaled,
        pump_free_draws: cfg.pump_free_draws,
        pumped_draws: cfg.pumped_draws,
        times_per_draw: cfg.times_per_draw,
        exact_tol: cfg.exact_tol,
        convergence_tol: cfg.convergence_tol,
        cutoff_ceiling: cfg.cutoff_ceiling,
        seed: cfg.seed,
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg)?;
    match cfg.target {
        Target::Fig1 => Ok(plain(render(
            cfg,
            &figures::fig1(cfg.lambda, &cfg.n_values, grid(cfg))?,
        ))),
        Target::Fig2 => Ok(plain(render(cfg, &figures::fig2(&p, grid(cfg))?))),
        Target::Fig3 => Ok(plain(render(
            cfg,
            &figures::fig3(&p, &cfg.pairs, grid(cfg))?,
        ))),
        Target::Fig4 => Ok(plain(render(
            cfg,
            &figures::fig4(&p, &cfg.pairs, grid(cfg))?,
        ))),
        Target::Fig5 => {
            let scan = MaxYScan {
                lambdas: cfg.lambdas.clone(),
                epsilons: linspace(cfg.epsilon_min, cfg.epsilon_max, cfg.epsilon_points),
                horizon_scaled: cfg.t_max_scaled,
                n_points: cfg.points,
                sensitivity_horizons: cfg.sensitivity_horizons.clone(),
            };
            Ok(plain(render(cfg, &figures::fig5(&p, &scan)?)))
        }
        Target::Sweep => {
            let eps = linspace(cfg.epsilon_min, cfg.epsilon_max, cfg.epsilon_points);
            Ok(plain(render(
                cfg,
                &figures::sweep(&p, &eps, cfg.t_max_scaled, cfg.points)?,
            )))
        }
        Target::Fig6 => {
            if cfg.segments == 0 {
                return Err(CliError::Usage("segments must be positive".into()));
            }
            let opts = EnsembleOptions {
                n_segments: cfg.segments,
                total_scaled_time: cfg.t_max_scaled,
                width: cfg.width,
                substeps: cfg.points.saturating_sub(1).div_ceil(cfg.segments).max(1),
            };
            let out = figures::fig6(
                &p,
                &cfg.lambdas,
                cfg.mean_epsilon,
                cfg.trials,
                cfg.seed,
                opts,
            )?;
            let notes = out
                .summaries
                .iter()
                .map(|s| {
                    format!(
                        "lambda={}: max std {:.6e}, max cv {:.6e}",
                        s.lambda, s.spread.max_std, s.spread.max_cv
                    )
                })
                .collect();
            let body = match cfg.format {
                Format::Csv => output::table_csv(&out.table),
                Format::Json => {
                    output::table_json(cfg, &out.table, Some(("summaries", json!(out.summaries))))
                }
            };
            Ok(Outcome {
                body,
                notes,
                breach: None,
            })
        }
        Target::OracleCheck => {
            let report = audit::oracle_check(&oracle_config(cfg))?;
            let body = match cfg.format {
                Format::Json => output::report_json(cfg, &report),
                Format::Csv => {
                    let mut t = String::from("check,tolerance,max_deviation,passed\n");
                    for c in &report.checks {
                        t.push_str(&format!(
                            "{},{},{},{}\n",
                            c.name,
                            output::format_sig12(c.tolerance),
                            output::format_sig12(c.max_deviation),
                            u8::from(c.passed)
                        ));
                    }
                    t
                }
            };
            let notes = report
                .checks
                .iter()
                .map(|c| {
                    format!(
                        "{} {}: max deviation {:.3e} (tolerance {:.1e})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.max_deviation,
                        c.tolerance
                    )
                })
                .collect();
            let breach = (!report.passed()).then(|| {
                let offenders: Vec<_> = report
                    .failures()
                    .map(|c| json!({ "check": c.name, "max_deviation": c.max_deviation, "worst": c.worst }))
                    .collect();
                serde_json::to_string(&offenders).expect("offenders serialize")
            });
            Ok(Outcome {
                body,
                notes,
                breach,
            })
        }
    }
}
