//! Tables behind each figure: time traces of the covariance measure, the
//! entropy and the photon-number imbalance, maximum-`Y` scans over the pump
//! strength, and fluctuation ensembles. All time axes are in units of
//! `pi / lambda` of the trace they belong to.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::fluctuation::{self, EnsembleOptions, SpreadSummary, CV_MEAN_FLOOR};
use crate::heisenberg;
use crate::params::ModelParams;

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self {
            columns: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) {
        if let Some(first) = self.data.first() {
            assert_eq!(first.len(), values.len(), "column length mismatch");
        }
        self.columns.push(name.into());
        self.data.push(values);
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}

/// `n_points` equally spaced scaled times on `[0, t_max_scaled]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max_scaled: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_max_scaled: f64, n_points: usize) -> Self {
        Self {
            t_max_scaled,
            n_points,
        }
    }

    pub fn scaled_times(&self) -> Result<Vec<f64>> {
        if self.n_points < 2 || self.t_max_scaled.is_nan() || self.t_max_scaled <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "need >= 2 points on a positive window, got {} on [0, {}]",
                self.n_points, self.t_max_scaled
            )));
        }
        let step = self.t_max_scaled / (self.n_points - 1) as f64;
        Ok((0..self.n_points).map(|k| k as f64 * step).collect())
    }

    pub fn step(&self) -> f64 {
        self.t_max_scaled / (self.n_points - 1) as f64
    }
}

/// A `(lambda, epsilon)` combination plotted as one trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPair {
    pub lambda: f64,
    pub epsilon: f64,
}

impl PumpPair {
    pub const fn new(lambda: f64, epsilon: f64) -> Self {
        Self { lambda, epsilon }
    }

    pub fn label(&self) -> String {
        format!("l{}_e{}", self.lambda, self.epsilon)
    }
}

fn physical(lambda: f64, scaled: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Err(Error::UncoupledCavities);
    }
    Ok(scaled * PI / lambda)
}

/// Pump-free `Y(t)` for several initial photon numbers.
pub fn fig1(lambda: f64, n_values: &[u32], grid: TimeGrid) -> Result<Table> {
    let ts = grid.scaled_times()?;
    let mut table = Table::new();
    for &n in n_values {
        let col = ts
            .iter()
            .map(|&s| {
                Ok(binomial::covariance_measure_closed(
                    n,
                    lambda,
                    physical(lambda, s)?,
                ))
            })
            .collect::<Result<_>>()?;
        table.push_column(format!("Y_N{n}"), col);
    }
    table.columns.insert(0, "t_scaled".into());
    table.data.insert(0, ts);
    Ok(table)
}

/// Pump-free `Y(t)` and entropy `S(t)` for `|N,0>`.
pub fn fig2(params: &ModelParams, grid: TimeGrid) -> Result<Table> {
    let ts = grid.scaled_times()?;
    let mut y = Vec::with_capacity(ts.len());
    let mut s = Vec::with_capacity(ts.len());
    for &sc in &ts {
        let t = physical(params.lambda, sc)?;
        y.push(binomial::covariance_measure_closed(
            params.n_initial,
            params.lambda,
            t,
        ));
        s.push(binomial::entropy(&binomial::reduced_spectrum(params, t)));
    }
    let mut table = Table::new();
    table.push_column("t_scaled", ts);
    table.push_column("Y", y);
    table.push_column("S", s);
    Ok(table)
}

fn moment_trace(
    params: &ModelParams,
    pair: PumpPair,
    ts: &[f64],
) -> Result<Vec<heisenberg::MomentSet>> {
    let p = params.with_lambda(pair.lambda).with_epsilon(pair.epsilon);
    ts.par_iter()
        .map(|&s| Ok(heisenberg::moments_transport(&p, physical(pair.lambda, s)?)))
        .collect()
}

/// Pumped `Y(t)` per `(lambda, epsilon)` pair, by moment transport.
pub fn fig3(params: &ModelParams, pairs: &[PumpPair], grid: TimeGrid) -> Result<Table> {
    let ts = grid.scaled_times()?;
    let mut table = Table::new();
    table.push_column("t_scaled", ts.clone());
    for &pair in pairs {
        let y = moment_trace(params, pair, &ts)?
            .iter()
            .map(heisenberg::covariance_measure)
            .collect();
        table.push_column(format!("Y_{}", pair.label()), y);
    }
    Ok(table)
}

/// `|n_a - n_b| / (n_a + n_b)` over time per `(lambda, epsilon)` pair.
pub fn fig4(params: &ModelParams, pairs: &[PumpPair], grid: TimeGrid) -> Result<Table> {
    let ts = grid.scaled_times()?;
    let mut table = Table::new();
    table.push_column("t_scaled", ts.clone());
    for &pair in pairs {
        let ratio = moment_trace(params, pair, &ts)?
            .iter()
            .map(heisenberg::photon_difference_ratio)
            .collect::<Result<_>>()?;
        table.push_column(format!("ratio_{}", pair.label()), ratio);
    }
    Ok(table)
}

/// Maximum of `Y` over `n_points` equally spaced scaled times in
/// `[0, horizon_scaled]`.
pub fn max_y_over_window(
    params: &ModelParams,
    horizon_scaled: f64,
    n_points: usize,
) -> Result<f64> {
    let grid = TimeGrid::new(horizon_scaled, n_points);
    let mut best = 0.0f64;
    for s in grid.scaled_times()? {
        let t = physical(params.lambda, s)?;
        best = best.max(heisenberg::covariance_measure(
            &heisenberg::moments_transport(params, t),
        ));
    }
    Ok(best)
}

/// `n` equally spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxYScan {
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub horizon_scaled: f64,
    /// Grid points on the main horizon; other horizons keep the same density.
    pub n_points: usize,
    pub sensitivity_horizons: Vec<f64>,
}

/// Maximum `Y` against pump strength, one column per coupling, plus the same
/// scan on each sensitivity horizon (`max_Y_l<lambda>_h<horizon>`).
pub fn fig5(params: &ModelParams, scan: &MaxYScan) -> Result<Table> {
    if scan.n_points < 2 {
        return Err(Error::InvalidGrid(
            "fig5 needs at least 2 time points".into(),
        ));
    }
    let density = scan.n_points as f64 / scan.horizon_scaled;
    let mut horizons = vec![(scan.horizon_scaled, scan.n_points, None)];
    for &h in &scan.sensitivity_horizons {
        let n = ((density * h).round() as usize).max(2);
        horizons.push((h, n, Some(h)));
    }
    let mut table = Table::new();
    table.push_column("epsilon", scan.epsilons.clone());
    for (horizon, n_points, tag) in horizons {
        for &lambda in &scan.lambdas {
            let col = scan
                .epsilons
                .par_iter()
                .map(|&e| {
                    max_y_over_window(
                        &params.with_lambda(lambda).with_epsilon(e),
                        horizon,
                        n_points,
                    )
                })
                .collect::<Result<_>>()?;
            let name = match tag {
                None => format!("max_Y_l{lambda}"),
                Some(h) => format!("max_Y_l{lambda}_h{h}"),
            };
            table.push_column(name, col);
        }
    }
    Ok(table)
}

/// Maximum `Y` over the window against pump strength at the coupling in
/// `params`.
pub fn sweep(
    params: &ModelParams,
    epsilons: &[f64],
    horizon_scaled: f64,
    n_points: usize,
) -> Result<Table> {
    let col = epsilons
        .par_iter()
        .map(|&e| max_y_over_window(&params.with_epsilon(e), horizon_scaled, n_points))
        .collect::<Result<_>>()?;
    let mut table = Table::new();
    table.push_column("epsilon", epsilons.to_vec());
    table.push_column("max_Y", col);
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub lambda: f64,
    pub seeds: Vec<u64>,
    pub spread: SpreadSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig6Output {
    pub table: Table,
    pub summaries: Vec<EnsembleSummary>,
}

/// One fluctuation ensemble per coupling. Columns `Y_l<lambda>_trial<k>`
/// followed by the per-time mean and standard deviation of each ensemble.
pub fn fig6(
    params: &ModelParams,
    lambdas: &[f64],
    mean_epsilon: f64,
    n_trials: usize,
    master_seed: u64,
    opts: EnsembleOptions,
) -> Result<Fig6Output> {
    let mut table = Table::new();
    let mut summaries = Vec::new();
    for &lambda in lambdas {
        let ens = fluctuation::run_ensemble(
            &params.with_lambda(lambda),
            mean_epsilon,
            n_trials,
            master_seed,
            opts,
        )?;
        if table.columns.is_empty() {
            table.push_column("t_scaled", ens.scaled_times.clone());
        }
        for (k, trial) in ens.trials.iter().enumerate() {
            table.push_column(format!("Y_l{lambda}_trial{k}"), trial.clone());
        }
        table.push_column(format!("mean_l{lambda}"), ens.mean.clone());
        table.push_column(format!("std_l{lambda}"), ens.std.clone());
        let spread = if n_trials >= 2 {
            fluctuation::spread_statistics(&ens, CV_MEAN_FLOOR)?
        } else {
            SpreadSummary {
                max_std: 0.0,
                max_cv: 0.0,
            }
        };
        summaries.push(EnsembleSummary {
            lambda,
            seeds: ens.seeds,
            spread,
        });
    }
    Ok(Fig6Output { table, summaries })
}
