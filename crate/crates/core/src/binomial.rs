//! Closed forms for the pump-free evolution of `|N,0>`.
//!
//! Without pumping the total photon number is conserved and the state stays
//! in the span of `|N-n, n>`: a two-mode binomial state. Everything here is
//! written with `cos^(N-n) sin^n` rather than `cos^N tan^n` so that full
//! transfer (`lambda t = pi/2`) stays finite.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Amplitudes of `|psi(t)> = sum_n amp_n |N-n, n>` (a-mode photon count first).
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialStateAmplitudes {
    pub n_total: u32,
    pub amplitudes: Vec<C64>,
}

impl BinomialStateAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Diagonal of the reduced density matrix of the a-mode; `probabilities[n]`
/// multiplies `|N-n><N-n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSpectrum {
    pub probabilities: Vec<f64>,
}

/// `ln C(n, k)` for `k = 0..=n`, by the multiplicative recurrence.
pub(crate) fn ln_binomials(n: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    out.push(acc);
    for k in 0..n {
        acc += f64::from(n - k).ln() - f64::from(k + 1).ln();
        out.push(acc);
    }
    out
}

/// `C(N,n) cos^(2(N-n)) sin^(2n)`, the weight of `|N-n, n>`.
fn binomial_weights(n_total: u32, lambda_t: f64) -> Vec<f64> {
    let (s, c) = lambda_t.sin_cos();
    ln_binomials(n_total)
        .into_iter()
        .enumerate()
        .map(|(n, lnc)| {
            let n = n as i32;
            lnc.exp() * (c * c).powi(n_total as i32 - n) * (s * s).powi(n)
        })
        .collect()
}

/// Pump-free evolved state; `params.epsilon` is ignored.
///
/// The relative phase of the amplitudes follows the printed closed form
/// (real `cos^(N-n) sin^n` up to the global `exp(-i N w t)`); exact evolution
/// under the hopping term carries an extra `(-i)^n`. Magnitudes, photon
/// numbers, the covariance measure and the entropy do not see the difference.
pub fn binomial_state(params: &ModelParams, t: f64) -> BinomialStateAmplitudes {
    let n_total = params.n_initial;
    let (s, c) = (params.lambda * t).sin_cos();
    let global = C64::from_polar(1.0, -(n_total as f64) * params.omega * t);
    let amplitudes = ln_binomials(n_total)
        .into_iter()
        .enumerate()
        .map(|(n, lnc)| {
            let n = n as i32;
            let mag = (0.5 * lnc).exp() * c.powi(n_total as i32 - n) * s.powi(n);
            global * mag
        })
        .collect();
    BinomialStateAmplitudes {
        n_total,
        amplitudes,
    }
}

/// Mean photon numbers `(N cos^2(lt), N sin^2(lt))` of the a- and b-modes.
pub fn photon_numbers(params: &ModelParams, t: f64) -> (f64, f64) {
    let n = f64::from(params.n_initial);
    let (s, c) = (params.lambda * t).sin_cos();
    (n * c * c, n * s * s)
}

/// Covariance measure of the pump-free state in closed form.
pub fn covariance_measure_closed(n_total: u32, lambda: f64, t: f64) -> f64 {
    let n = f64::from(n_total);
    let (s, c) = (lambda * t).sin_cos();
    let num = n * (2.0 * lambda * t).sin().abs();
    let den = 2.0 * (2.0 * (n * c * c + 0.5) * (n * s * s + 0.5)).sqrt();
    num / den
}

/// A two-mode ladder monomial applied to a sparse Fock state.
#[derive(Clone, Copy)]
enum Ladder {
    A,
    ADag,
    B,
    BDag,
}

fn apply(op: Ladder, state: &[((u32, u32), C64)]) -> Vec<((u32, u32), C64)> {
    state
        .iter()
        .filter_map(|&((na, nb), amp)| match op {
            Ladder::A if na > 0 => Some(((na - 1, nb), amp * f64::from(na).sqrt())),
            Ladder::B if nb > 0 => Some(((na, nb - 1), amp * f64::from(nb).sqrt())),
            Ladder::ADag => Some(((na + 1, nb), amp * f64::from(na + 1).sqrt())),
            Ladder::BDag => Some(((na, nb + 1), amp * f64::from(nb + 1).sqrt())),
            _ => None,
        })
        .collect()
}

/// `<psi| ops[0] ops[1] ... |psi>`; the rightmost operator acts first.
fn expectation(state: &[((u32, u32), C64)], ops: &[Ladder]) -> C64 {
    let mut ket = state.to_vec();
    for &op in ops.iter().rev() {
        ket = apply(op, &ket);
    }
    let mut acc = C64::new(0.0, 0.0);
    for (k, amp) in &ket {
        for (b, bra) in state {
            if b == k {
                acc += bra.conj() * amp;
            }
        }
    }
    acc
}

/// Covariance measure evaluated from the amplitudes themselves: first and
/// second moments are taken directly on the state and the covariances are
/// formed by subtracting products of first moments.
pub fn covariance_measure_from_state(state: &BinomialStateAmplitudes) -> Result<f64> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(norm));
    }
    let n_total = state.n_total;
    let sparse: Vec<((u32, u32), C64)> = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, &amp)| ((n_total - n as u32, n as u32), amp))
        .collect();

    use Ladder::*;
    let a = expectation(&sparse, &[A]);
    let b = expectation(&sparse, &[B]);
    let cov_ab = expectation(&sparse, &[A, B]) - a * b;
    let cov_ab_dag = expectation(&sparse, &[A, BDag]) - a * b.conj();
    let n_a = expectation(&sparse, &[ADag, A]).re - a.norm_sqr();
    let n_b = expectation(&sparse, &[BDag, B]).re - b.norm_sqr();

    Ok(((cov_ab_dag.norm_sqr() + cov_ab.norm_sqr()) / (2.0 * (n_a + 0.5) * (n_b + 0.5))).sqrt())
}

pub fn reduced_spectrum(params: &ModelParams, t: f64) -> ReducedSpectrum {
    ReducedSpectrum {
        probabilities: binomial_weights(params.n_initial, params.lambda * t),
    }
}

/// Von Neumann entropy in bits, `-sum p log2 p` with `0 log 0 = 0`.
pub fn entropy(spectrum: &ReducedSpectrum) -> f64 {
    shannon_bits(&spectrum.probabilities)
}

pub(crate) fn shannon_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}
