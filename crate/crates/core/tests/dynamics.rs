use std::f64::consts::PI;

use cavity_entanglement::figures::{self, PumpPair, TimeGrid};
use cavity_entanglement::fock::{self, ConvergenceOptions};
use cavity_entanglement::heisenberg;
use cavity_entanglement::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Indices of interior local minima of `r` below `level`.
fn vanishing_minima(r: &[f64], level: f64) -> Vec<usize> {
    (1..r.len() - 1)
        .filter(|&i| r[i] < level && r[i] < r[i - 1] && r[i] <= r[i + 1])
        .collect()
}

fn is_local_max(y: &[f64], j: usize) -> bool {
    j > 0 && j + 1 < y.len() && y[j] >= y[j - 1] && y[j] >= y[j + 1]
}

/// Largest distance, in grid steps, from a vanishing minimum of the photon
/// imbalance ratio to the nearest local maximum of `Y`.
fn peak_minimum_offsets(pair: PumpPair) -> (usize, Vec<usize>) {
    let p = ModelParams::new(1.0, pair.lambda, pair.epsilon, 5);
    let grid = TimeGrid::new(1.0, 2001);
    let ratio = figures::fig4(&p, &[pair], grid).unwrap().data[1].clone();
    let y = figures::fig3(&p, &[pair], grid).unwrap().data[1].clone();
    let minima = vanishing_minima(&ratio, 0.1);
    let offsets = minima
        .iter()
        .map(|&i| {
            (0..y.len())
                .filter(|&j| is_local_max(&y, j))
                .map(|j| j.abs_diff(i))
                .min()
                .unwrap_or(usize::MAX)
        })
        .collect();
    (minima.len(), offsets)
}

#[test]
fn vanishing_imbalance_coincides_with_y_peaks() {
    for pair in [
        PumpPair::new(0.001, 0.001),
        PumpPair::new(0.1, 0.001),
        PumpPair::new(0.1, 0.005),
    ] {
        let (n, offsets) = peak_minimum_offsets(pair);
        assert!(n > 0, "{pair:?}: no vanishing minimum");
        assert!(offsets.iter().all(|&o| o <= 1), "{pair:?}: {offsets:?}");
    }
}

#[test]
fn strong_pump_peaks_stay_near_imbalance_minima() {
    // With lambda = epsilon the Y maxima drift off the imbalance minima by
    // a few hundredths of a scaled unit.
    let (n, offsets) = peak_minimum_offsets(PumpPair::new(0.1, 0.1));
    println!("minima {n}, offsets {offsets:?}");
    assert!(offsets.iter().all(|&o| o <= 60), "{offsets:?}");
}

struct Draw {
    params: ModelParams,
    times: Vec<f64>,
}

fn draws(n: usize, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let lambda = rng.random_range(1e-3..=0.2);
            let epsilon = rng.random_range(0.0..=0.3);
            let n_initial = rng.random_range(1..=5);
            let params = ModelParams::new(1.0, lambda, epsilon, n_initial);
            let mut times: Vec<f64> = (0..2)
                .map(|_| rng.random_range(0.0..=1.0) * PI / lambda)
                .collect();
            times.sort_by(f64::total_cmp);
            Draw { params, times }
        })
        .collect()
}

#[test]
fn transport_matches_fock_oracle_and_ignores_linear_drive() {
    let tol: f64 = 1e-7;
    let bound = tol.max(1e-6);
    let mut worst_transport = 0.0f64;
    let mut worst_drive = 0.0f64;
    for d in draws(50, 11) {
        let n = d.params.n_initial as usize;
        let plain = fock::check_convergence(
            &d.params,
            &d.times,
            (n, 0),
            tol,
            ConvergenceOptions::default(),
        )
        .unwrap();
        let driven_opts = ConvergenceOptions {
            linear_drive_amplitude: 0.1,
            ..ConvergenceOptions::default()
        };
        let driven =
            fock::check_convergence(&d.params, &d.times, (n, 0), tol, driven_opts).unwrap();
        for ((&t, a), b) in d.times.iter().zip(&plain.samples).zip(&driven.samples) {
            let m = heisenberg::moments_transport(&d.params, t);
            let o = &a.observables;
            for dev in [
                (heisenberg::covariance_measure(&m) - o.y).abs(),
                (m.mean_na - o.cov_na).abs(),
                (m.mean_nb - o.cov_nb).abs(),
                (m.cov_ab - o.cov_ab).norm(),
                (m.cov_ab_dagger - o.cov_ab_dagger).norm(),
            ] {
                worst_transport = worst_transport.max(dev);
            }
            let od = &b.observables;
            for dev in [
                (o.y - od.y).abs(),
                (o.cov_na - od.cov_na).abs(),
                (o.cov_nb - od.cov_nb).abs(),
                (o.cov_ab - od.cov_ab).norm(),
                (o.cov_ab_dagger - od.cov_ab_dagger).norm(),
            ] {
                worst_drive = worst_drive.max(dev);
            }
        }
    }
    assert!(
        worst_transport <= bound,
        "transport vs Fock {worst_transport:e}"
    );
    assert!(worst_drive <= bound, "drive on vs off {worst_drive:e}");
}
