//! Brute-force simulation of the full two-mode Hamiltonian in a truncated
//! Fock basis. This is the reference every closed form is checked against,
//! and the only route to the entanglement entropy once the pump is on.
//!
//! All matrix elements are real for real `epsilon` and drive amplitude, so
//! the Hamiltonian is stored as a real symmetric CSR matrix and applied to
//! complex state vectors. Time evolution expands `exp(-i H dt)` in Chebyshev
//! polynomials of the spectrally rescaled Hamiltonian, chunk by chunk, and
//! integrates a bound on the amplitude leaving the basis along the way.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::binomial::shannon_bits;
use crate::error::{Error, Result};
use crate::heisenberg::{self, MomentSet, Regime};
use crate::params::ModelParams;

/// Product basis `|n_a, n_b>` with `n_a <= cutoff_a`, `n_b <= cutoff_b`,
/// flattened with the b-mode index running fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncatedBasis {
    pub cutoff_a: usize,
    pub cutoff_b: usize,
}

impl TruncatedBasis {
    pub fn new(cutoff_a: usize, cutoff_b: usize) -> Self {
        Self { cutoff_a, cutoff_b }
    }

    pub fn square(cutoff: usize) -> Self {
        Self::new(cutoff, cutoff)
    }

    pub fn dim(&self) -> usize {
        (self.cutoff_a + 1) * (self.cutoff_b + 1)
    }

    pub fn index(&self, n_a: usize, n_b: usize) -> Option<usize> {
        (n_a <= self.cutoff_a && n_b <= self.cutoff_b).then(|| n_a * (self.cutoff_b + 1) + n_b)
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        (index / (self.cutoff_b + 1), index % (self.cutoff_b + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockStateVector {
    pub basis: TruncatedBasis,
    pub amplitudes: Vec<C64>,
}

impl FockStateVector {
    /// `|n_a, n_b>`, or `None` if it lies outside the basis.
    pub fn product(basis: TruncatedBasis, n_a: usize, n_b: usize) -> Option<Self> {
        let idx = basis.index(n_a, n_b)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Some(Self { basis, amplitudes })
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> C64 {
        self.basis
            .index(n_a, n_b)
            .map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// One ladder-operator transition `|from> -> coef |to>` generated by a term
/// of the Hamiltonian, with `to` possibly outside the basis.
fn transitions(params: &ModelParams, drive: f64, n_a: usize, n_b: usize) -> Vec<((i64, i64), f64)> {
    let (l, e, d) = (params.lambda, params.epsilon, drive);
    let (na, nb) = (n_a as f64, n_b as f64);
    let (ia, ib) = (n_a as i64, n_b as i64);
    let mut out = Vec::with_capacity(7);
    out.push(((ia, ib), params.omega * (na + nb)));
    if l != 0.0 {
        if n_b > 0 {
            out.push(((ia + 1, ib - 1), l * ((na + 1.0) * nb).sqrt()));
        }
        if n_a > 0 {
            out.push(((ia - 1, ib + 1), l * (na * (nb + 1.0)).sqrt()));
        }
    }
    if e != 0.0 {
        out.push(((ia + 2, ib), e * ((na + 1.0) * (na + 2.0)).sqrt()));
        if n_a > 1 {
            out.push(((ia - 2, ib), e * (na * (na - 1.0)).sqrt()));
        }
    }
    if d != 0.0 {
        out.push(((ia + 1, ib), d * (na + 1.0).sqrt()));
        if n_a > 0 {
            out.push(((ia - 1, ib), d * na.sqrt()));
        }
    }
    out
}

/// `w(a+a + b+b) + l(a+b + ab+) + e(a+^2 + a^2) + d(a+ + a)` restricted to a
/// truncated basis.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub basis: TruncatedBasis,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Couplings from basis states to states beyond the cutoff, grouped by
    /// target: `(source index, coefficient)` lists.
    leaks: Vec<Vec<(usize, f64)>>,
}

pub fn build_hamiltonian(
    params: &ModelParams,
    basis: TruncatedBasis,
    linear_drive_amplitude: f64,
) -> SparseHamiltonian {
    let dim = basis.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut leak_map: HashMap<(i64, i64), Vec<(usize, f64)>> = HashMap::new();

    // H is real symmetric, so column j's transitions double as row j.
    row_ptr.push(0);
    for j in 0..dim {
        let (n_a, n_b) = basis.state(j);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for ((ta, tb), coef) in transitions(params, linear_drive_amplitude, n_a, n_b) {
            if coef == 0.0 {
                continue;
            }
            match basis.index(ta as usize, tb as usize) {
                Some(i) if ta >= 0 && tb >= 0 => row.push((i, coef)),
                _ => leak_map.entry((ta, tb)).or_default().push((j, coef)),
            }
        }
        row.sort_by_key(|&(i, _)| i);
        for (i, v) in row {
            cols.push(i);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    let mut leak_targets: Vec<_> = leak_map.into_iter().collect();
    leak_targets.sort_by_key(|(k, _)| *k);
    SparseHamiltonian {
        basis,
        row_ptr,
        cols,
        vals,
        leaks: leak_targets.into_iter().map(|(_, v)| v).collect(),
    }
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `<i|H|j>`.
    pub fn element(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[row.clone()]
            .iter()
            .position(|&c| c == j)
            .map_or(0.0, |k| self.vals[row.start + k])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    /// Exact symmetry check of the stored entries.
    pub fn is_hermitian(&self) -> bool {
        (0..self.dim()).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .all(|k| self.element(self.cols[k], i) == self.vals[k])
        })
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                self.vals[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval `[lo, hi]` containing the spectrum.
    pub fn spectral_interval(&self) -> (f64, f64) {
        (0..self.dim()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let (mut diag, mut radius) = (0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    diag = self.vals[k];
                } else {
                    radius += self.vals[k].abs();
                }
            }
            (lo.min(diag - radius), hi.max(diag + radius))
        })
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *yi = acc;
        }
    }

    /// `|| (1 - P) H psi ||`: the rate at which the untruncated dynamics
    /// would leave the basis. Integrated over time it bounds the distance
    /// between truncated and exact evolution.
    pub fn leakage(&self, psi: &[C64]) -> f64 {
        self.leaks
            .iter()
            .map(|sources| {
                sources
                    .iter()
                    .map(|&(j, c)| psi[j] * c)
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Largest accepted bound on the truncation error of the state.
    pub leak_tolerance: f64,
    /// Largest `||H|| dt` covered by one Chebyshev expansion.
    pub step_norm: f64,
    /// Longest physical time between samples of the leakage rate.
    pub leak_sample_interval: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            leak_tolerance: 1e-3,
            step_norm: 40.0,
            leak_sample_interval: 0.25,
        }
    }
}

/// `J_0(x) ..= J_K(x)` by backward recurrence, normalized with
/// `J_0 + 2 sum J_2k = 1`, truncated once the terms beyond `x` fall below
/// `1e-18`.
fn bessel_j_sequence(x: f64) -> Vec<f64> {
    if x == 0.0 {
        return vec![1.0];
    }
    let mut m = (1.5 * x).ceil() as usize + 60;
    m += m % 2;
    let mut j = vec![0.0; m + 2];
    j[m] = 1e-280;
    for k in (1..=m).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in &mut j[k - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut j {
        *v /= norm;
    }
    let mut keep = m;
    while keep > 0 && (keep as f64) > x && j[keep].abs() < 1e-18 {
        keep -= 1;
    }
    j.truncate(keep + 1);
    j
}

struct Stepper<'a> {
    h: &'a SparseHamiltonian,
    opts: EvolveOptions,
    /// Propagation uses `(H - shift) / bound`, whose spectrum lies in
    /// `[-1, 1]`; the shift only changes the global phase.
    shift: f64,
    bound: f64,
    prev: Vec<C64>,
    cur: Vec<C64>,
    next: Vec<C64>,
    acc: Vec<C64>,
    leak_integral: f64,
}

impl<'a> Stepper<'a> {
    fn new(h: &'a SparseHamiltonian, opts: EvolveOptions) -> Self {
        let dim = h.dim();
        let (lo, hi) = h.spectral_interval();
        let zero = vec![C64::new(0.0, 0.0); dim];
        Self {
            h,
            opts,
            shift: 0.5 * (lo + hi),
            bound: 0.5 * (hi - lo),
            prev: zero.clone(),
            cur: zero.clone(),
            next: zero.clone(),
            acc: zero,
            leak_integral: 0.0,
        }
    }

    /// `out = (H - shift) x / bound`.
    fn apply_normalized(h: &SparseHamiltonian, shift: f64, bound: f64, x: &[C64], out: &mut [C64]) {
        h.apply(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (*o - *xi * shift) / bound;
        }
    }

    /// `psi <- exp(-i (H - shift) dt) psi` as a Chebyshev series.
    fn chebyshev_step(&mut self, psi: &mut [C64], dt: f64) {
        if self.bound == 0.0 {
            return;
        }
        let j = bessel_j_sequence(self.bound * dt);
        let (h, shift, bound) = (self.h, self.shift, self.bound);
        self.prev.copy_from_slice(psi);
        for (a, p) in self.acc.iter_mut().zip(psi.iter()) {
            *a = p * j[0];
        }
        if j.len() > 1 {
            Self::apply_normalized(h, shift, bound, &self.prev, &mut self.cur);
            let c = C64::new(0.0, -2.0 * j[1]);
            for (a, v) in self.acc.iter_mut().zip(&self.cur) {
                *a += v * c;
            }
        }
        // (-i)^k cycles through 1, -i, -1, i.
        let phases = [
            C64::new(1.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, 1.0),
        ];
        for (k, &jk) in j.iter().enumerate().skip(2) {
            Self::apply_normalized(h, shift, bound, &self.cur, &mut self.next);
            let c = phases[k % 4] * (2.0 * jk);
            for ((n, p), a) in self
                .next
                .iter_mut()
                .zip(&self.prev)
                .zip(self.acc.iter_mut())
            {
                *n = *n * 2.0 - p;
                *a += *n * c;
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
            std::mem::swap(&mut self.cur, &mut self.next);
        }
        psi.copy_from_slice(&self.acc);
    }

    /// Advances `psi` by `dt`, accumulating the truncation-error bound.
    fn advance(&mut self, psi: &mut [C64], dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let by_norm = if self.bound > 0.0 {
            self.bound * dt / self.opts.step_norm
        } else {
            0.0
        };
        let steps = by_norm
            .max(dt / self.opts.leak_sample_interval)
            .ceil()
            .max(1.0) as usize;
        let h = dt / steps as f64;
        let mut leak_prev = self.h.leakage(psi);
        for _ in 0..steps {
            self.chebyshev_step(psi, h);
            let leak = self.h.leakage(psi);
            self.leak_integral += 0.5 * (leak_prev + leak) * h;
            leak_prev = leak;
            if self.leak_integral > self.opts.leak_tolerance {
                return Err(Error::CutoffInadequate {
                    cutoff_a: self.h.basis.cutoff_a,
                    cutoff_b: self.h.basis.cutoff_b,
                    leakage: self.leak_integral,
                });
            }
        }
        Ok(())
    }
}

/// `exp(-i t H) psi` with the default options.
pub fn evolve(state: &FockStateVector, h: &SparseHamiltonian, t: f64) -> Result<FockStateVector> {
    let mut out = evolve_trajectory(state, h, &[t], EvolveOptions::default())?;
    Ok(out.pop().expect("one time requested"))
}

/// States at each of `times` (non-decreasing, starting from `t = 0`).
pub fn evolve_trajectory(
    state: &FockStateVector,
    h: &SparseHamiltonian,
    times: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<FockStateVector>> {
    assert_eq!(state.basis, h.basis, "state and Hamiltonian bases differ");
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("times must be non-decreasing".into()));
    }
    let mut stepper = Stepper::new(h, opts);
    let mut psi = state.amplitudes.clone();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        stepper.advance(&mut psi, t - now)?;
        now = t;
        out.push(FockStateVector {
            basis: state.basis,
            amplitudes: psi.clone(),
        });
    }
    Ok(out)
}

/// First and second moments of a two-mode state, plus the covariances and
/// the covariance measure built from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockObservables {
    pub mean_a: C64,
    pub mean_b: C64,
    pub ab: C64,
    pub ab_dagger: C64,
    pub n_a: f64,
    pub n_b: f64,
    pub cov_ab: C64,
    pub cov_ab_dagger: C64,
    pub cov_na: f64,
    pub cov_nb: f64,
    pub y: f64,
}

impl FockObservables {
    pub fn moment_set(&self) -> MomentSet {
        MomentSet {
            cov_ab: self.cov_ab,
            cov_ab_dagger: self.cov_ab_dagger,
            mean_na: self.cov_na,
            mean_nb: self.cov_nb,
        }
    }
}

pub fn observables(state: &FockStateVector) -> FockObservables {
    let basis = state.basis;
    let psi = |na: usize, nb: usize| state.amplitude(na, nb);
    let zero = C64::new(0.0, 0.0);
    let (mut mean_a, mut mean_b, mut ab, mut ab_dagger) = (zero, zero, zero, zero);
    let (mut n_a, mut n_b) = (0.0, 0.0);
    for (idx, &amp) in state.amplitudes.iter().enumerate() {
        if amp == zero {
            continue;
        }
        let (na, nb) = basis.state(idx);
        let (fa, fb) = (na as f64, nb as f64);
        let p = amp.norm_sqr();
        n_a += fa * p;
        n_b += fb * p;
        if na > 0 {
            mean_a += psi(na - 1, nb).conj() * amp * fa.sqrt();
            ab_dagger += psi(na - 1, nb + 1).conj() * amp * (fa * (fb + 1.0)).sqrt();
        }
        if nb > 0 {
            mean_b += psi(na, nb - 1).conj() * amp * fb.sqrt();
        }
        if na > 0 && nb > 0 {
            ab += psi(na - 1, nb - 1).conj() * amp * (fa * fb).sqrt();
        }
    }
    let cov_ab = ab - mean_a * mean_b;
    let cov_ab_dagger = ab_dagger - mean_a * mean_b.conj();
    let cov_na = n_a - mean_a.norm_sqr();
    let cov_nb = n_b - mean_b.norm_sqr();
    let moments = MomentSet {
        cov_ab,
        cov_ab_dagger,
        mean_na: cov_na,
        mean_nb: cov_nb,
    };
    FockObservables {
        mean_a,
        mean_b,
        ab,
        ab_dagger,
        n_a,
        n_b,
        cov_ab,
        cov_ab_dagger,
        cov_na,
        cov_nb,
        y: heisenberg::covariance_measure(&moments),
    }
}

/// Reduced density matrix of the a-mode, `rho_a = Tr_b |psi><psi|`.
pub fn reduced_density_matrix(state: &FockStateVector) -> DMatrix<C64> {
    let basis = state.basis;
    let da = basis.cutoff_a + 1;
    let db = basis.cutoff_b + 1;
    let psi = DMatrix::from_row_slice(da, db, &state.amplitudes);
    &psi * psi.adjoint()
}

/// Von Neumann entropy of the a-mode in bits. Eigenvalues of `rho_a` that
/// round-off pushes below zero are clipped.
pub fn reduced_entropy(state: &FockStateVector) -> f64 {
    let rho = reduced_density_matrix(state);
    let p: Vec<f64> = rho
        .symmetric_eigenvalues()
        .iter()
        .map(|&x| x.max(0.0))
        .collect();
    shannon_bits(&p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSample {
    pub t: f64,
    pub observables: FockObservables,
    pub entropy: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergedOracle {
    pub basis: TruncatedBasis,
    /// `(cutoff, max change against the previous cutoff)`; the first entry
    /// has no predecessor and carries `f64::INFINITY`.
    pub history: Vec<(usize, f64)>,
    pub samples: Vec<OracleSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub linear_drive_amplitude: f64,
    /// Largest per-mode cutoff that may be tried.
    pub ceiling: usize,
    /// Geometric growth factor between successive cutoffs.
    pub growth: f64,
    pub evolve: EvolveOptions,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            linear_drive_amplitude: 0.0,
            ceiling: 120,
            growth: 1.5,
            evolve: EvolveOptions::default(),
        }
    }
}

/// Evolves `initial` over `times` at a fixed basis and records the observables.
pub fn sample_trajectory(
    params: &ModelParams,
    basis: TruncatedBasis,
    initial: (usize, usize),
    times: &[f64],
    drive: f64,
    evolve_opts: EvolveOptions,
) -> Result<Vec<OracleSample>> {
    let h = build_hamiltonian(params, basis, drive);
    let psi0 =
        FockStateVector::product(basis, initial.0, initial.1).ok_or(Error::CutoffInadequate {
            cutoff_a: basis.cutoff_a,
            cutoff_b: basis.cutoff_b,
            leakage: f64::INFINITY,
        })?;
    let states = evolve_trajectory(&psi0, &h, times, evolve_opts)?;
    Ok(times
        .iter()
        .zip(&states)
        .map(|(&t, st)| OracleSample {
            t,
            observables: observables(st),
            entropy: reduced_entropy(st),
            norm_drift: (st.norm_sqr() - 1.0).abs(),
        })
        .collect())
}

fn max_change(a: &[OracleSample], b: &[OracleSample]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let (ox, oy) = (&x.observables, &y.observables);
            [
                (ox.y - oy.y).abs(),
                (ox.cov_na - oy.cov_na).abs(),
                (ox.cov_nb - oy.cov_nb).abs(),
                (x.entropy - y.entropy).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Raises a common per-mode cutoff geometrically until `Y`, both photon
/// numbers and the entropy change by less than `tol` at every requested time
/// between successive cutoffs.
///
/// Without pump or drive the total photon number is conserved, so a cutoff
/// equal to it is exact and is returned directly.
pub fn check_convergence(
    params: &ModelParams,
    times: &[f64],
    initial: (usize, usize),
    tol: f64,
    opts: ConvergenceOptions,
) -> Result<ConvergedOracle> {
    let total = initial.0 + initial.1;
    let drive = opts.linear_drive_amplitude;
    if params.epsilon == 0.0 && drive == 0.0 {
        let basis = TruncatedBasis::square(total);
        let samples = sample_trajectory(params, basis, initial, times, 0.0, opts.evolve)?;
        return Ok(ConvergedOracle {
            basis,
            history: vec![(total, f64::INFINITY)],
            samples,
        });
    }

    // Refuse up front when the Heisenberg spectrum predicts exponential
    // growth past the ceiling.
    let spec = heisenberg::spectral(params);
    if spec.regime == Regime::ParametricallyUnstable {
        let rate = spec
            .eigenvalues()
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        let t_max = times.iter().cloned().fold(0.0, f64::max);
        let predicted = (total as f64 + 1.0) * (2.0 * rate * t_max).exp();
        if predicted > opts.ceiling as f64 / 4.0 {
            return Err(Error::CutoffCeiling {
                ceiling: opts.ceiling,
                last_change: f64::INFINITY,
            });
        }
    }

    let mut cutoff = (total + 4).max(8);
    let mut history = Vec::new();
    let mut previous: Option<Vec<OracleSample>> = None;
    let mut last_change = f64::INFINITY;
    while cutoff <= opts.ceiling {
        let basis = TruncatedBasis::square(cutoff);
        match sample_trajectory(params, basis, initial, times, drive, opts.evolve) {
            Ok(samples) => {
                let change = previous
                    .as_deref()
                    .map_or(f64::INFINITY, |prev| max_change(prev, &samples));
                history.push((cutoff, change));
                last_change = change;
                if change < tol {
                    return Ok(ConvergedOracle {
                        basis,
                        history,
                        samples,
                    });
                }
                previous = Some(samples);
            }
            Err(Error::CutoffInadequate { .. }) => {
                history.push((cutoff, f64::INFINITY));
                previous = None;
            }
            Err(e) => return Err(e),
        }
        if cutoff == opts.ceiling {
            break;
        }
        cutoff = (((cutoff as f64) * opts.growth).ceil() as usize).min(opts.ceiling);
    }
    Err(Error::CutoffCeiling {
        ceiling: opts.ceiling,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial;
    use std::f64::consts::PI;

    #[test]
    fn bessel_sequence_matches_series() {
        // Power series, fine for small arguments.
        let series = |k: usize, x: f64| {
            let mut term = (x / 2.0).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
            let mut sum = term;
            for m in 1..60 {
                term *= -(x * x / 4.0) / (m as f64 * (m + k) as f64);
                sum += term;
            }
            sum
        };
        for x in [1e-3, 0.5, 3.0, 7.5] {
            let j = bessel_j_sequence(x);
            for (k, &v) in j.iter().enumerate().take(12) {
                assert!(
                    (v - series(k, x)).abs() < 1e-14,
                    "J_{k}({x}): {v} vs {}",
                    series(k, x)
                );
            }
        }
        // Known value J_0(40) and the addition identity at a large argument.
        let j = bessel_j_sequence(40.0);
        assert!((j[0] - 0.007_366_890_584_237_291).abs() < 1e-13);
        assert!((j[1] - 0.126_038_318_037_584_97).abs() < 1e-13);
        let s: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        assert!((s - 1.0).abs() < 1e-13);
        assert!(*j.last().unwrap() < 1e-17 && j.len() > 41);
    }

    #[test]
    fn basis_index_round_trip() {
        let b = TruncatedBasis::new(4, 7);
        assert_eq!(b.dim(), 40);
        for i in 0..b.dim() {
            let (na, nb) = b.state(i);
            assert_eq!(b.index(na, nb), Some(i));
        }
        assert_eq!(b.index(5, 0), None);
        assert_eq!(b.index(0, 8), None);
    }

    #[test]
    fn single_hop_element() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 1);
        let b = TruncatedBasis::square(3);
        let h = build_hamiltonian(&p, b, 0.0);
        let j = b.index(1, 0).unwrap();
        let coupled: Vec<(usize, f64)> = (0..b.dim())
            .filter(|&i| i != j)
            .map(|i| (i, h.element(i, j)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        assert_eq!(coupled, vec![(b.index(0, 1).unwrap(), 0.1)]);
    }

    #[test]
    fn pump_and_number_elements() {
        let p = ModelParams::new(1.3, 0.1, 0.25, 1);
        let b = TruncatedBasis::square(9);
        let h = build_hamiltonian(&p, b, 0.0);
        for n in 0..=7usize {
            for m in 0..=9usize {
                let want = 0.25 * (((n + 1) * (n + 2)) as f64).sqrt();
                let got = h.element(b.index(n + 2, m).unwrap(), b.index(n, m).unwrap());
                assert!((got - want).abs() < 1e-15);
            }
        }
        for i in 0..b.dim() {
            let (na, nb) = b.state(i);
            assert!((h.element(i, i) - 1.3 * (na + nb) as f64).abs() < 1e-14);
        }
        assert!(h.is_hermitian());
        let d = build_hamiltonian(&p, b, 0.7).to_dense();
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn zero_time_is_identity() {
        let p = ModelParams::new(1.0, 0.1, 0.1, 2);
        let b = TruncatedBasis::square(6);
        let h = build_hamiltonian(&p, b, 0.0);
        let psi = FockStateVector::product(b, 2, 0).unwrap();
        assert_eq!(evolve(&psi, &h, 0.0).unwrap(), psi);
    }

    #[test]
    fn pump_free_evolution_reproduces_binomial_magnitudes() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 5);
        let b = TruncatedBasis::square(5);
        let h = build_hamiltonian(&p, b, 0.0);
        let psi = FockStateVector::product(b, 5, 0).unwrap();
        for s in [0.1, 0.25, 0.4, 0.9] {
            let t = s * PI / 0.1;
            let out = evolve(&psi, &h, t).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
            let closed = binomial::binomial_state(&p, t);
            for (n, amp) in closed.amplitudes.iter().enumerate() {
                let got = out.amplitude(5 - n, n).norm();
                assert!((got - amp.norm()).abs() < 1e-9, "s={s} n={n}");
            }
        }
    }

    #[test]
    fn observables_of_product_state() {
        let b = TruncatedBasis::square(6);
        let obs = observables(&FockStateVector::product(b, 5, 0).unwrap());
        assert_eq!(obs.y, 0.0);
        assert_eq!(obs.n_a, 5.0);
        assert_eq!(
            reduced_entropy(&FockStateVector::product(b, 5, 0).unwrap()),
            0.0
        );
    }

    #[test]
    fn pump_free_y_and_entropy_at_quarter_period() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 5);
        let b = TruncatedBasis::square(5);
        let h = build_hamiltonian(&p, b, 0.0);
        let psi = FockStateVector::product(b, 5, 0).unwrap();
        let out = evolve(&psi, &h, 0.25 * PI / 0.1).unwrap();
        assert!((observables(&out).y - 0.589255650988789).abs() < 1e-8);
        let s = reduced_entropy(&out);
        assert!((s - 2.198192).abs() < 1e-5, "{s}");
        assert!(s <= (6f64).log2());
    }

    #[test]
    fn leakage_vanishes_for_conserved_sector() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 3);
        let b = TruncatedBasis::square(3);
        let h = build_hamiltonian(&p, b, 0.0);
        let out = evolve(&FockStateVector::product(b, 3, 0).unwrap(), &h, 7.0).unwrap();
        assert_eq!(h.leakage(&out.amplitudes), 0.0);
    }

    #[test]
    fn small_cutoff_under_pumping_is_flagged() {
        let p = ModelParams::new(1.0, 0.1, 0.4, 5);
        let b = TruncatedBasis::square(5);
        let h = build_hamiltonian(&p, b, 0.0);
        let psi = FockStateVector::product(b, 5, 0).unwrap();
        assert!(matches!(
            evolve(&psi, &h, 30.0),
            Err(Error::CutoffInadequate { .. })
        ));
    }

    #[test]
    fn pump_free_convergence_is_exact_at_n() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 5);
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 3.0).collect();
        let run = check_convergence(&p, &times, (5, 0), 1e-8, Default::default()).unwrap();
        assert_eq!(run.basis, TruncatedBasis::square(5));
    }

    #[test]
    fn pumped_convergence_finds_finite_cutoff() {
        let p = ModelParams::new(1.0, 0.1, 0.1, 5);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * PI).collect();
        let run = check_convergence(&p, &times, (5, 0), 1e-7, Default::default()).unwrap();
        assert!(run.basis.cutoff_a < 120);
        for s in &run.samples {
            assert!(s.norm_drift < 1e-9);
            let want = heisenberg::moments_transport(&p, s.t);
            assert!((s.observables.cov_na - want.mean_na).abs() < 1e-6);
            assert!((s.observables.y - heisenberg::covariance_measure(&want)).abs() < 1e-6);
        }
    }

    #[test]
    fn near_marginal_pump_hits_ceiling() {
        let p = ModelParams::new(1.0, 0.001, 0.5, 5);
        let times = [0.0, PI / 0.001];
        assert!(matches!(
            check_convergence(&p, &times, (5, 0), 1e-6, Default::default()),
            Err(Error::CutoffCeiling { .. })
        ));
    }

    #[test]
    fn entropy_bounds() {
        let p = ModelParams::new(1.0, 0.1, 0.2, 2);
        let b = TruncatedBasis::new(10, 6);
        let h = build_hamiltonian(&p, b, 0.05);
        let psi = FockStateVector::product(b, 2, 0).unwrap();
        let opts = EvolveOptions {
            leak_tolerance: f64::INFINITY,
            ..Default::default()
        };
        for st in evolve_trajectory(&psi, &h, &[1.0, 5.0, 20.0], opts).unwrap() {
            let s = reduced_entropy(&st);
            assert!(s >= 0.0 && s <= (7f64).log2() + 1e-12);
        }
    }
}
