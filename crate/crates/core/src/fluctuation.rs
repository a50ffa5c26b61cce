//! Pump-amplitude fluctuations: the pump strength is redrawn from a Gaussian
//! on each of a fixed number of equal time segments, and the covariance
//! measure is tracked through the product of per-segment propagators.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{self, max_abs, Mat4, MomentSet};
use crate::params::ModelParams;

/// How "one-tenth of the mean" sets the Gaussian width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluctuationWidth {
    /// Standard deviation equal to `mean / 10`.
    #[default]
    Std,
    /// Variance equal to `mean / 10`.
    Variance,
}

impl FluctuationWidth {
    pub fn std_dev(self, mean: f64) -> f64 {
        match self {
            Self::Std => mean / 10.0,
            Self::Variance => (mean / 10.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationSchedule {
    pub mean_epsilon: f64,
    pub n_segments: usize,
    pub total_scaled_time: f64,
    pub width: FluctuationWidth,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Draws `n_segments` i.i.d. Gaussian pump strengths. Negative draws are
/// kept as they are.
pub fn sample_schedule(
    mean: f64,
    n_segments: usize,
    total_scaled_time: f64,
    width: FluctuationWidth,
    seed: u64,
) -> Result<FluctuationSchedule> {
    if mean < 0.0 || !mean.is_finite() {
        return Err(Error::NegativeMean(mean));
    }
    let normal = Normal::new(mean, width.std_dev(mean))
        .map_err(|e| Error::InvalidGrid(format!("pump distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n_segments).map(|_| normal.sample(&mut rng)).collect();
    Ok(FluctuationSchedule {
        mean_epsilon: mean,
        n_segments,
        total_scaled_time,
        width,
        seed,
        values,
    })
}

/// Product of segment propagators, renormalized when it grows large so that
/// parametrically unstable segments cannot overflow. The true propagator is
/// `matrix * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPropagator {
    pub matrix: Mat4,
    pub log_scale: f64,
}

impl ScaledPropagator {
    fn identity() -> Self {
        Self {
            matrix: Mat4::identity(),
            log_scale: 0.0,
        }
    }

    fn left_multiply(&mut self, step: &Mat4) {
        self.matrix = step * self.matrix;
        let size = max_abs(&self.matrix);
        if size > 1e64 {
            self.matrix /= nalgebra::Complex::from(size);
            self.log_scale += size.ln();
        }
    }

    /// Covariance measure of `|N,0>` transported through this propagator.
    pub fn covariance_measure(&self, n_initial: u32) -> f64 {
        let m = MomentSet::from_propagator(&self.matrix, n_initial);
        heisenberg::covariance_measure_rescaled(&m, self.log_scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseRun {
    pub scaled_times: Vec<f64>,
    pub y: Vec<f64>,
    pub propagator: ScaledPropagator,
}

/// Propagates `|N,0>` through the schedule with `lambda`, `omega` and `N`
/// from `params` (its `epsilon` is ignored). `Y` is sampled at every
/// segment boundary and at `substeps - 1` interior points of each segment.
pub fn propagate_piecewise(
    params: &ModelParams,
    schedule: &FluctuationSchedule,
    substeps: usize,
) -> Result<PiecewiseRun> {
    if params.lambda == 0.0 {
        return Err(Error::UncoupledCavities);
    }
    if schedule.n_segments == 0 || substeps == 0 {
        return Err(Error::InvalidGrid(
            "need at least one segment and substep".into(),
        ));
    }
    let seg_scaled = schedule.total_scaled_time / schedule.n_segments as f64;
    let dt = seg_scaled * PI / params.lambda / substeps as f64;
    let n = params.n_initial;

    let mut cumulative = ScaledPropagator::identity();
    let mut scaled_times = Vec::with_capacity(schedule.n_segments * substeps + 1);
    let mut y = Vec::with_capacity(scaled_times.capacity());
    scaled_times.push(0.0);
    y.push(cumulative.covariance_measure(n));
    for (k, &eps) in schedule.values.iter().enumerate() {
        let step = heisenberg::propagator(&params.with_epsilon(eps), dt).s;
        for j in 1..=substeps {
            cumulative.left_multiply(&step);
            scaled_times.push(seg_scaled * (k as f64 + j as f64 / substeps as f64));
            y.push(cumulative.covariance_measure(n));
        }
    }
    Ok(PiecewiseRun {
        scaled_times,
        y,
        propagator: cumulative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub n_segments: usize,
    pub total_scaled_time: f64,
    pub width: FluctuationWidth,
    pub substeps: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            n_segments: 100,
            total_scaled_time: 5.0,
            width: FluctuationWidth::Std,
            substeps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub scaled_times: Vec<f64>,
    pub trials: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
    /// Per-time mean over trials.
    pub mean: Vec<f64>,
    /// Per-time population standard deviation over trials.
    pub std: Vec<f64>,
    /// `std / mean`, zero where the mean vanishes.
    pub cv: Vec<f64>,
}

/// Seed of trial `index`, mixed from the master seed (splitmix64 finalizer).
pub fn trial_seed(master_seed: u64, index: usize) -> u64 {
    let mut z = master_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent trials, run in parallel and assembled in trial order.
pub fn run_ensemble(
    params: &ModelParams,
    mean_epsilon: f64,
    n_trials: usize,
    master_seed: u64,
    opts: EnsembleOptions,
) -> Result<EnsembleResult> {
    if n_trials == 0 {
        return Err(Error::TooFewTrials { needed: 1, got: 0 });
    }
    let seeds: Vec<u64> = (0..n_trials).map(|i| trial_seed(master_seed, i)).collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let sched = sample_schedule(
                mean_epsilon,
                opts.n_segments,
                opts.total_scaled_time,
                opts.width,
                seed,
            )?;
            propagate_piecewise(params, &sched, opts.substeps)
        })
        .collect::<Result<Vec<_>>>()?;

    let scaled_times = runs[0].scaled_times.clone();
    let trials: Vec<Vec<f64>> = runs.into_iter().map(|r| r.y).collect();
    let (mean, std, cv) = per_time_statistics(&trials);
    Ok(EnsembleResult {
        scaled_times,
        trials,
        seeds,
        mean,
        std,
        cv,
    })
}

pub(crate) fn per_time_statistics(trials: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = trials.len() as f64;
    let len = trials[0].len();
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    let mut cv = vec![0.0; len];
    for k in 0..len {
        let m = trials.iter().map(|tr| tr[k]).sum::<f64>() / n;
        let var = trials.iter().map(|tr| (tr[k] - m).powi(2)).sum::<f64>() / n;
        mean[k] = m;
        std[k] = var.sqrt();
        cv[k] = if m > 0.0 { std[k] / m } else { 0.0 };
    }
    (mean, std, cv)
}

/// Fraction of the peak ensemble-mean `Y` below which a time point is left
/// out of the coefficient-of-variation maximum; near the zeros of `Y` the
/// ratio says nothing about the spread.
pub const CV_MEAN_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpreadSummary {
    pub max_std: f64,
    pub max_cv: f64,
}

/// Largest standard deviation of `Y` over time, and the largest coefficient
/// of variation over the times where the ensemble mean is at least
/// `floor` times its peak.
pub fn spread_statistics(ensemble: &EnsembleResult, floor: f64) -> Result<SpreadSummary> {
    if ensemble.trials.len() < 2 {
        return Err(Error::TooFewTrials {
            needed: 2,
            got: ensemble.trials.len(),
        });
    }
    let peak = ensemble.mean.iter().cloned().fold(0.0, f64::max);
    let max_std = ensemble.std.iter().cloned().fold(0.0, f64::max);
    let max_cv = ensemble
        .mean
        .iter()
        .zip(&ensemble.cv)
        .filter(|(&m, _)| m > 0.0 && m >= floor * peak)
        .map(|(_, &c)| c)
        .fold(0.0, f64::max);
    Ok(SpreadSummary { max_std, max_cv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::symplectic_defect;

    #[test]
    fn zero_mean_gives_zero_schedule() {
        let s = sample_schedule(0.0, 50, 5.0, FluctuationWidth::Variance, 7).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(sample_schedule(-0.1, 5, 1.0, FluctuationWidth::Std, 1).is_err());
    }

    #[test]
    fn schedule_is_deterministic() {
        let a = sample_schedule(0.3, 100, 5.0, FluctuationWidth::Variance, 42).unwrap();
        let b = sample_schedule(0.3, 100, 5.0, FluctuationWidth::Variance, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_schedule(0.3, 100, 5.0, FluctuationWidth::Variance, 43).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn sample_moments_within_statistical_bounds() {
        let n = 100_000;
        for width in [FluctuationWidth::Variance, FluctuationWidth::Std] {
            let s = sample_schedule(0.3, n, 5.0, width, 2024).unwrap();
            let var = width.std_dev(0.3).powi(2);
            let m = s.values.iter().sum::<f64>() / n as f64;
            let v = s.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            // 5 sigma: sigma_mean^2 = var/n, sigma_var^2 = 2 var^2/(n-1).
            assert!((m - 0.3).abs() < 5.0 * (var / n as f64).sqrt());
            assert!((v - var).abs() < 5.0 * var * (2.0 / (n - 1) as f64).sqrt());
        }
        assert!((FluctuationWidth::Variance.std_dev(0.3).powi(2) - 0.03).abs() < 1e-15);
    }

    #[test]
    fn constant_schedule_matches_single_shot() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 5);
        let sched = FluctuationSchedule {
            mean_epsilon: 0.1,
            n_segments: 100,
            total_scaled_time: 1.0,
            width: FluctuationWidth::Std,
            seed: 0,
            values: vec![0.1; 100],
        };
        let run = propagate_piecewise(&p, &sched, 2).unwrap();
        assert_eq!(run.y.len(), 201);
        let pumped = p.with_epsilon(0.1);
        for (s, y) in run.scaled_times.iter().zip(&run.y) {
            let t = s * PI / 0.1;
            let want = heisenberg::covariance_measure(&heisenberg::moments_transport(&pumped, t));
            assert!((y - want).abs() < 1e-9);
        }
        let direct = heisenberg::propagator(&pumped, PI / 0.1).s;
        assert!(max_abs(&(run.propagator.matrix - direct)) < 1e-9);
    }

    #[test]
    fn cumulative_propagator_stays_symplectic() {
        let p = ModelParams::new(1.0, 0.05, 0.0, 5);
        let sched = sample_schedule(0.3, 100, 5.0, FluctuationWidth::Std, 9).unwrap();
        let run = propagate_piecewise(&p, &sched, 1).unwrap();
        assert_eq!(run.propagator.log_scale, 0.0);
        assert!(symplectic_defect(&run.propagator.matrix) < 1e-8);
        assert!(run.y.iter().all(|&y| (0.0..1.0).contains(&y)));
    }

    #[test]
    fn unstable_segments_do_not_overflow() {
        let p = ModelParams::new(1.0, 0.001, 0.0, 5);
        let sched = FluctuationSchedule {
            mean_epsilon: 0.8,
            n_segments: 100,
            total_scaled_time: 5.0,
            width: FluctuationWidth::Std,
            seed: 0,
            values: vec![0.8; 100],
        };
        let run = propagate_piecewise(&p, &sched, 1).unwrap();
        assert!(run.propagator.log_scale > 700.0);
        assert!(run.y.iter().all(|y| y.is_finite() && *y <= 1.0 + 1e-12));
    }

    #[test]
    fn single_trial_has_no_spread() {
        let p = ModelParams::new(1.0, 0.05, 0.0, 5);
        let e = run_ensemble(&p, 0.3, 1, 5, EnsembleOptions::default()).unwrap();
        assert!(e.std.iter().all(|&s| s == 0.0));
        assert!(spread_statistics(&e, CV_MEAN_FLOOR).is_err());
    }

    #[test]
    fn identical_trials_have_zero_spread() {
        let trials = vec![vec![0.0, 0.2, 0.4]; 4];
        let (mean, std, cv) = per_time_statistics(&trials);
        let e = EnsembleResult {
            scaled_times: vec![0.0, 1.0, 2.0],
            trials,
            seeds: vec![0; 4],
            mean,
            std,
            cv,
        };
        let s = spread_statistics(&e, CV_MEAN_FLOOR).unwrap();
        assert_eq!((s.max_std, s.max_cv), (0.0, 0.0));
    }

    #[test]
    fn ensemble_is_bit_reproducible() {
        let p = ModelParams::new(1.0, 0.05, 0.0, 5);
        let opts = EnsembleOptions {
            n_segments: 20,
            ..Default::default()
        };
        let a = run_ensemble(&p, 0.3, 4, 11, opts).unwrap();
        let b = run_ensemble(&p, 0.3, 4, 11, opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scaled_times.len(), 21);
        assert_ne!(a.trials[0], a.trials[1]);
    }
}
