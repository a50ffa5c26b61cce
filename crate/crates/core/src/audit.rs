//! Cross-checks between the independent evaluation routes over seeded random
//! parameter draws, plus an audit of the printed closed-form moment formulas
//! and of the sign convention of their expansion coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::binomial;
use crate::error::Result;
use crate::fock::{self, ConvergenceOptions};
use crate::heisenberg::{self, CoefficientSigns, MomentSet, PrintedMoments};
use crate::params::ModelParams;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleCheckConfig {
    pub omega: f64,
    pub n_max: u32,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub epsilon_max: f64,
    pub t_max_scaled: f64,
    pub pump_free_draws: usize,
    pub pumped_draws: usize,
    pub times_per_draw: usize,
    pub exact_tol: f64,
    pub convergence_tol: f64,
    pub cutoff_ceiling: usize,
    pub seed: u64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            n_max: 5,
            lambda_min: 1e-3,
            lambda_max: 0.2,
            epsilon_max: 0.3,
            t_max_scaled: 1.0,
            pump_free_draws: 50,
            pumped_draws: 8,
            times_per_draw: 4,
            exact_tol: 1e-8,
            convergence_tol: 1e-7,
            cutoff_ceiling: 120,
            seed: 20240607,
        }
    }
}

impl OracleCheckConfig {
    /// Tolerance for comparisons against the truncated Fock oracle.
    pub fn oracle_tol(&self) -> f64 {
        self.convergence_tol.max(1e-6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Draw {
    pub index: usize,
    pub params: ModelParams,
    pub t_scaled: Vec<f64>,
}

impl Draw {
    pub fn physical_times(&self) -> Vec<f64> {
        self.t_scaled
            .iter()
            .map(|s| s * std::f64::consts::PI / self.params.lambda)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Offender {
    pub draw_index: usize,
    pub params: ModelParams,
    pub t_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub passed: bool,
    /// Where the largest deviation occurred.
    pub worst: Option<Offender>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrintedMomentDeviation {
    pub draw_index: usize,
    pub params: ModelParams,
    pub signs: CoefficientSigns,
    pub cov_ab: f64,
    pub cov_ab_dagger: f64,
    pub mean_na: f64,
    pub mean_nb: f64,
    /// Largest deviation of any of the four at `t = 0`.
    pub at_t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignAudit {
    /// `max |C(0) - I|` for the interpolating coefficients.
    pub corrected_identity_defect: f64,
    /// Same with the printed signs; `2` means the expansion gives `-I`.
    pub printed_identity_defect: f64,
    /// `max |c0 + c1 theta + c2 theta^2 + c3 theta^3 - exp(-i theta t)|`
    /// over the four eigenvalues and all draws.
    pub corrected_interpolation_residual: f64,
    pub printed_interpolation_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub config: OracleCheckConfig,
    pub draws: Vec<Draw>,
    pub checks: Vec<CheckResult>,
    pub printed_moments: Vec<PrintedMomentDeviation>,
    pub sign_audit: SignAudit,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    max: f64,
    worst: Option<Offender>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            max: 0.0,
            worst: None,
        }
    }

    fn record(&mut self, dev: f64, draw: &Draw, t_scaled: f64) {
        // NaN counts as a failure.
        if dev > self.max || dev.is_nan() && !self.max.is_nan() {
            self.max = dev;
            self.worst = Some(Offender {
                draw_index: draw.index,
                params: draw.params,
                t_scaled,
            });
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.into(),
            tolerance: self.tolerance,
            max_deviation: self.max,
            passed: self.max <= self.tolerance,
            worst: self.worst,
        }
    }
}

/// Seeded parameter draws; the first `pump_free_draws` have `epsilon = 0`.
pub fn draw_parameters(cfg: &OracleCheckConfig) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.pump_free_draws + cfg.pumped_draws)
        .map(|index| {
            let lambda = rng.random_range(cfg.lambda_min..=cfg.lambda_max);
            let epsilon = if index < cfg.pump_free_draws {
                0.0
            } else {
                rng.random_range(0.0..=cfg.epsilon_max)
            };
            let n = rng.random_range(1..=cfg.n_max);
            let mut t_scaled: Vec<f64> = (0..cfg.times_per_draw)
                .map(|_| rng.random_range(0.0..=cfg.t_max_scaled))
                .collect();
            t_scaled.sort_by(f64::total_cmp);
            Draw {
                index,
                params: ModelParams::new(cfg.omega, lambda, epsilon, n),
                t_scaled,
            }
        })
        .collect()
}

fn printed_deviation(p: &PrintedMoments, m: &MomentSet) -> [f64; 4] {
    [
        (p.cov_ab - m.cov_ab).norm(),
        (p.cov_ab_dagger - m.cov_ab_dagger).norm(),
        (p.mean_na - m.mean_na).norm(),
        (p.mean_nb - m.mean_nb).norm(),
    ]
}

fn audit_printed(
    draw: &Draw,
    times: &[f64],
    signs: CoefficientSigns,
) -> Option<PrintedMomentDeviation> {
    let p = &draw.params;
    let mut dev = [0.0f64; 4];
    for &t in times {
        let printed = heisenberg::moments_closed_form(p, t, signs)?;
        let d = printed_deviation(&printed, &heisenberg::moments_transport(p, t));
        for (acc, x) in dev.iter_mut().zip(d) {
            *acc = acc.max(x);
        }
    }
    let t0 = printed_deviation(
        &heisenberg::moments_closed_form(p, 0.0, signs)?,
        &heisenberg::moments_transport(p, 0.0),
    );
    Some(PrintedMomentDeviation {
        draw_index: draw.index,
        params: *p,
        signs,
        cov_ab: dev[0],
        cov_ab_dagger: dev[1],
        mean_na: dev[2],
        mean_nb: dev[3],
        at_t0: t0.into_iter().fold(0.0, f64::max),
    })
}

fn sign_audit(draws: &[Draw]) -> SignAudit {
    let mut out = SignAudit {
        corrected_identity_defect: 0.0,
        printed_identity_defect: 0.0,
        corrected_interpolation_residual: 0.0,
        printed_interpolation_residual: 0.0,
    };
    for draw in draws {
        let spec = heisenberg::spectral(&draw.params);
        let m = heisenberg::build_matrix(&draw.params);
        let Some(c0) = heisenberg::ch_coefficients(&spec, 0.0) else {
            continue;
        };
        let id = heisenberg::Mat4::identity();
        out.corrected_identity_defect = out
            .corrected_identity_defect
            .max(heisenberg::max_abs(&(c0.to_matrix(&m) - id)));
        out.printed_identity_defect = out.printed_identity_defect.max(heisenberg::max_abs(
            &(c0.with_printed_signs().to_matrix(&m) - id),
        ));
        for t in draw.physical_times() {
            let Some(c) = heisenberg::ch_coefficients(&spec, t) else {
                continue;
            };
            let printed = c.with_printed_signs();
            for theta in spec.eigenvalues() {
                let exact = (-C64::i() * theta * t).exp();
                out.corrected_interpolation_residual = out
                    .corrected_interpolation_residual
                    .max((c.interpolate(theta) - exact).norm());
                out.printed_interpolation_residual = out
                    .printed_interpolation_residual
                    .max((printed.interpolate(theta) - exact).norm());
            }
        }
    }
    out
}

/// Runs every cross-check. Errors only when an oracle cannot be evaluated
/// (for example the Fock cutoff hits its ceiling); disagreements are
/// reported as failed checks.
pub fn oracle_check(cfg: &OracleCheckConfig) -> Result<AuditReport> {
    let draws = draw_parameters(cfg);
    let exact = cfg.exact_tol;
    let oracle = cfg.oracle_tol();

    let mut identity = Tracker::new("propagator_identity_at_t0", exact);
    let mut ch_dense = Tracker::new("cayley_hamilton_vs_dense_exponential", exact);
    let mut symplectic = Tracker::new("symplectic_defect", exact);
    let mut closed_state = Tracker::new("pump_free_closed_form_vs_state", exact);
    let mut closed_transport = Tracker::new("pump_free_closed_form_vs_transport", exact);
    let mut closed_fock = Tracker::new("pump_free_closed_form_vs_fock", exact);
    let mut photons = Tracker::new("pump_free_photon_numbers_state_vs_transport", exact);
    let mut entropy = Tracker::new("pump_free_entropy_state_vs_fock", exact);
    let mut pumped_y = Tracker::new("pumped_covariance_measure_transport_vs_fock", oracle);
    let mut pumped_moments = Tracker::new("pumped_moments_transport_vs_fock", oracle);

    let fock_opts = ConvergenceOptions {
        ceiling: cfg.cutoff_ceiling,
        ..ConvergenceOptions::default()
    };

    for draw in &draws {
        let p = &draw.params;
        let n = p.n_initial as usize;
        identity.record(
            heisenberg::max_abs(&(heisenberg::propagator(p, 0.0).s - heisenberg::Mat4::identity())),
            draw,
            0.0,
        );
        let times = draw.physical_times();
        for (&t, &s) in times.iter().zip(&draw.t_scaled) {
            let prop = heisenberg::propagator(p, t);
            let dense = heisenberg::dense_propagator(p, t);
            let scale = heisenberg::max_abs(&dense).max(1.0);
            ch_dense.record(heisenberg::max_abs(&(prop.s - dense)) / scale, draw, s);
            symplectic.record(prop.symplectic_defect(), draw, s);
        }

        let fock = fock::check_convergence(p, &times, (n, 0), cfg.convergence_tol, fock_opts)?;
        if p.is_pump_free() {
            for ((&t, &s), sample) in times.iter().zip(&draw.t_scaled).zip(&fock.samples) {
                let y_closed = binomial::covariance_measure_closed(p.n_initial, p.lambda, t);
                let state = binomial::binomial_state(p, t);
                closed_state.record(
                    (y_closed - binomial::covariance_measure_from_state(&state)?).abs(),
                    draw,
                    s,
                );
                let m = heisenberg::moments_transport(p, t);
                closed_transport.record(
                    (y_closed - heisenberg::covariance_measure(&m)).abs(),
                    draw,
                    s,
                );
                closed_fock.record((y_closed - sample.observables.y).abs(), draw, s);
                let (na, nb) = binomial::photon_numbers(p, t);
                photons.record((na - m.mean_na).abs().max((nb - m.mean_nb).abs()), draw, s);
                let s_state = binomial::entropy(&binomial::reduced_spectrum(p, t));
                entropy.record((s_state - sample.entropy).abs(), draw, s);
            }
        } else {
            for ((&t, &s), sample) in times.iter().zip(&draw.t_scaled).zip(&fock.samples) {
                let m = heisenberg::moments_transport(p, t);
                let o = &sample.observables;
                pumped_y.record((heisenberg::covariance_measure(&m) - o.y).abs(), draw, s);
                let dev = [
                    (m.mean_na - o.cov_na).abs(),
                    (m.mean_nb - o.cov_nb).abs(),
                    (m.cov_ab.norm() - o.cov_ab.norm()).abs(),
                    (m.cov_ab_dagger.norm() - o.cov_ab_dagger.norm()).abs(),
                ];
                pumped_moments.record(dev.into_iter().fold(0.0, f64::max), draw, s);
            }
        }
    }

    let mut printed_moments = Vec::new();
    for draw in &draws {
        let times = draw.physical_times();
        for signs in [CoefficientSigns::Corrected, CoefficientSigns::AsPrinted] {
            printed_moments.extend(audit_printed(draw, &times, signs));
        }
    }

    let checks = [
        identity,
        ch_dense,
        symplectic,
        closed_state,
        closed_transport,
        closed_fock,
        photons,
        entropy,
        pumped_y,
        pumped_moments,
    ]
    .into_iter()
    .map(Tracker::finish)
    .collect();

    Ok(AuditReport {
        config: *cfg,
        sign_audit: sign_audit(&draws),
        draws,
        checks,
        printed_moments,
    })
}
