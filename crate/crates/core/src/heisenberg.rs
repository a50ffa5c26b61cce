//! Heisenberg-picture dynamics of the pumped system.
//!
//! The operator vector `v = (a, b, a+, b+)` obeys `i dv/dt = M v` with a
//! constant 4x4 coefficient matrix, so `v(t) = S(t) v(0)` with
//! `S(t) = exp(-i t M)`. `M` has eigenvalues `+-alpha, +-gamma`, which lets
//! the exponential be written as a cubic polynomial in `M` (Cayley-Hamilton).
//! Second moments of `|N,0>` are then carried through `S` by congruence.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

pub type Mat4 = Matrix4<C64>;

/// Below this, `|4B|`, `|alpha|` or `|gamma|` count as degenerate and the
/// Cayley-Hamilton denominators are not trusted.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// `diag(1, 1, -1, -1)`: the metric preserved by Bogoliubov transformations.
pub fn sigma() -> Mat4 {
    Mat4::from_diagonal(&nalgebra::Vector4::new(ONE, ONE, -ONE, -ONE))
}

/// Largest entrywise modulus.
pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |S Sigma S+ - Sigma|`.
pub fn symplectic_defect(s: &Mat4) -> f64 {
    let sig = sigma();
    max_abs(&(s * sig * s.adjoint() - sig))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMatrix(pub Mat4);

impl CoefficientMatrix {
    /// `max |Sigma M - (Sigma M)+|`; zero for real pump strength.
    pub fn sigma_hermitian_defect(&self) -> f64 {
        let k = sigma() * self.0;
        max_abs(&(k - k.adjoint()))
    }
}

pub fn build_matrix(params: &ModelParams) -> CoefficientMatrix {
    let w = C64::from(params.omega);
    let l = C64::from(params.lambda);
    let e2 = C64::from(2.0 * params.epsilon);
    #[rustfmt::skip]
    let m = Mat4::new(
        w,   l,    e2,  ZERO,
        l,   w,    ZERO, ZERO,
        -e2, ZERO, -w,  -l,
        ZERO, ZERO, -l, -w,
    );
    CoefficientMatrix(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// All four eigenvalues real: bounded oscillation.
    Stable,
    /// An eigenvalue pair is imaginary; moments grow exponentially.
    ParametricallyUnstable,
}

/// `A = w^2 + l^2 - 2e^2`, `B = sqrt(w^2 l^2 - l^2 e^2 + e^4)`,
/// `alpha = sqrt(A - 2B)`, `gamma = sqrt(A + 2B)`.
///
/// `B` is kept complex: its radicand equals
/// `(e^2 - l^2/2)^2 + l^2 (w^2 - l^2/4)`, so it is real and non-negative
/// whenever `w >= l/2`, which covers every weak-coupling regime of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    pub a: f64,
    pub b: C64,
    pub alpha: C64,
    pub gamma: C64,
    pub regime: Regime,
}

impl SpectralData {
    pub fn eigenvalues(&self) -> [C64; 4] {
        [self.alpha, -self.alpha, self.gamma, -self.gamma]
    }

    pub fn is_degenerate(&self) -> bool {
        (4.0 * self.b).norm() < DEGENERACY_THRESHOLD
            || self.alpha.norm() < DEGENERACY_THRESHOLD
            || self.gamma.norm() < DEGENERACY_THRESHOLD
    }

    /// `|det(M - theta I)|` for each claimed eigenvalue, scaled by
    /// `(max|M| + |theta|)^4` so the numbers are comparable across parameters.
    pub fn eigen_residuals(&self, m: &CoefficientMatrix) -> [f64; 4] {
        let scale = max_abs(&m.0);
        self.eigenvalues().map(|theta| {
            let shifted = m.0 - Mat4::identity() * theta;
            shifted.determinant().norm() / (scale + theta.norm()).powi(4)
        })
    }
}

pub fn spectral(params: &ModelParams) -> SpectralData {
    let (w, l, e) = (params.omega, params.lambda, params.epsilon);
    let a = w * w + l * l - 2.0 * e * e;
    let radicand = w * w * l * l - l * l * e * e + e.powi(4);
    let b = C64::from(radicand).sqrt();
    let alpha = (C64::from(a) - 2.0 * b).sqrt();
    let gamma = (C64::from(a) + 2.0 * b).sqrt();
    let unstable = |z: C64| z.im.abs() > 1e-12 * z.norm().max(1.0);
    let regime = if unstable(alpha) || unstable(gamma) {
        Regime::ParametricallyUnstable
    } else {
        Regime::Stable
    };
    let spec = SpectralData {
        a,
        b,
        alpha,
        gamma,
        regime,
    };
    debug_assert!(
        spec.is_degenerate()
            || spec
                .eigen_residuals(&build_matrix(params))
                .iter()
                .all(|&r| r < 1e-8),
        "claimed eigenvalues are not roots of det(M - theta I): {spec:?}"
    );
    spec
}

/// `exp(-i t M) = c0 I + c1 M + c2 M^2 + c3 M^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChCoefficients {
    pub c: [C64; 4],
}

impl ChCoefficients {
    pub fn identity() -> Self {
        Self {
            c: [ONE, ZERO, ZERO, ZERO],
        }
    }

    /// `c0 + c1 theta + c2 theta^2 + c3 theta^3`.
    pub fn interpolate(&self, theta: C64) -> C64 {
        let [c0, c1, c2, c3] = self.c;
        c0 + theta * (c1 + theta * (c2 + theta * c3))
    }

    /// The coefficients with the signs of the identity and linear terms
    /// flipped, as they appear in the frequently quoted printed expansion.
    /// Kept only for auditing: these give `exp(0) = -I`.
    pub fn with_printed_signs(self) -> Self {
        let [c0, c1, c2, c3] = self.c;
        Self {
            c: [-c0, -c1, c2, c3],
        }
    }

    pub fn to_matrix(&self, m: &CoefficientMatrix) -> Mat4 {
        let [c0, c1, c2, c3] = self.c;
        let m1 = m.0;
        let m2 = m1 * m1;
        let m3 = m2 * m1;
        Mat4::identity() * c0 + m1 * c1 + m2 * c2 + m3 * c3
    }
}

/// `sin(z t) / z`, continuous through `z = 0`.
fn sin_over(z: C64, t: f64) -> C64 {
    if z.norm() == 0.0 {
        C64::from(t)
    } else {
        (z * t).sin() / z
    }
}

/// Interpolating coefficients for `exp(-i theta t)` at `theta = +-alpha,
/// +-gamma`. Returns `None` for a degenerate spectrum, in which case the
/// caller must use a general matrix exponential.
///
/// For imaginary `alpha` or `gamma` the trigonometric functions continue
/// analytically into hyperbolic ones.
pub fn ch_coefficients(spec: &SpectralData, t: f64) -> Option<ChCoefficients> {
    if spec.is_degenerate() {
        return None;
    }
    let (al, ga) = (spec.alpha, spec.gamma);
    let four_b = 4.0 * spec.b;
    let (al2, ga2) = (al * al, ga * ga);
    let (cos_a, cos_g) = ((al * t).cos(), (ga * t).cos());
    let (sin_a, sin_g) = (sin_over(al, t), sin_over(ga, t));

    let c3 = I * (sin_a - sin_g) / four_b;
    let c2 = (cos_g - cos_a) / four_b;
    let c1 = -I * (ga2 * sin_a - al2 * sin_g) / four_b;
    let c0 = (ga2 * cos_a - al2 * cos_g) / four_b;
    Some(ChCoefficients {
        c: [c0, c1, c2, c3],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PropagatorMethod {
    CayleyHamilton,
    DenseExponential,
}

/// `S(t) = exp(-i t M)`: `v(t) = S(t) v(0)` for `v = (a, b, a+, b+)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub s: Mat4,
    pub t: f64,
    pub method: PropagatorMethod,
}

impl Propagator {
    pub fn symplectic_defect(&self) -> f64 {
        symplectic_defect(&self.s)
    }
}

/// General-purpose dense exponential `exp(-i t M)` (scaling and squaring with
/// Pade approximants).
pub fn dense_propagator(params: &ModelParams, t: f64) -> Mat4 {
    (build_matrix(params).0 * (-I * t)).exp()
}

pub fn propagator(params: &ModelParams, t: f64) -> Propagator {
    let m = build_matrix(params);
    match ch_coefficients(&spectral(params), t) {
        Some(c) => Propagator {
            s: c.to_matrix(&m),
            t,
            method: PropagatorMethod::CayleyHamilton,
        },
        None => Propagator {
            s: dense_propagator(params, t),
            t,
            method: PropagatorMethod::DenseExponential,
        },
    }
}

/// The six auxiliary polynomials in `C0..C3` used by the printed moment
/// formulas. `y_coef` is the one printed as `Y`; it is unrelated to the
/// covariance measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureFunctions {
    pub u: C64,
    pub v: C64,
    pub w: C64,
    pub x: C64,
    pub y_coef: C64,
    pub z_coef: C64,
}

/// Evaluates the printed polynomials with `w -> sign_omega w` and
/// `l -> sign_lambda l`. `A` and `e` are unaffected by the substitution.
pub fn structure_functions(
    params: &ModelParams,
    coeffs: &ChCoefficients,
    sign_omega: f64,
    sign_lambda: f64,
) -> StructureFunctions {
    let w = sign_omega * params.omega;
    let l = sign_lambda * params.lambda;
    let e = params.epsilon;
    let a = spectral(params).a;
    let [c0, c1, c2, c3] = coeffs.c;
    StructureFunctions {
        u: c0 + w * c1 + (a - 2.0 * e * e) * c2 + w * (2.0 * l * l - 2.0 * e * e + a) * c3,
        v: l * c1 + 2.0 * l * w * c2 + l * (2.0 * w * w - 2.0 * e * e + a) * c3,
        w: 2.0 * e * c1 + 2.0 * e * (l * l + a) * c3,
        x: c0 + w * c1 + (l * l + w * w) * c2 + w * (3.0 * l * l + w * w) * c3,
        y_coef: 2.0 * e * (l * c2 + w * c3),
        z_coef: -2.0 * l * l * e * c3,
    }
}

/// The four covariances entering the covariance measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub cov_ab: C64,
    pub cov_ab_dagger: C64,
    pub mean_na: f64,
    pub mean_nb: f64,
}

/// `G_ij = <v_i v_j>` for `|N,0>`: only `<a a+> = N+1`, `<a+ a> = N` and
/// `<b b+> = 1` are nonzero.
pub fn initial_second_moments(n_initial: u32) -> Mat4 {
    let n = f64::from(n_initial);
    let mut g = Mat4::zeros();
    g[(0, 2)] = C64::from(n + 1.0);
    g[(2, 0)] = C64::from(n);
    g[(1, 3)] = ONE;
    g
}

impl MomentSet {
    /// Reads the moments of `<v v^T>(t) = S G(0) S^T`. First moments stay
    /// zero without a linear drive, so raw second moments are covariances.
    pub fn from_propagator(s: &Mat4, n_initial: u32) -> Self {
        let g = s * initial_second_moments(n_initial) * s.transpose();
        Self {
            cov_ab: g[(0, 1)],
            cov_ab_dagger: g[(0, 3)],
            mean_na: g[(2, 0)].re,
            mean_nb: g[(3, 1)].re,
        }
    }
}

pub fn moments_transport(params: &ModelParams, t: f64) -> MomentSet {
    MomentSet::from_propagator(&propagator(params, t).s, params.n_initial)
}

/// Which sign convention for `C0`, `C1` to feed into the printed formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoefficientSigns {
    /// Coefficients satisfying the interpolation conditions.
    Corrected,
    /// `C0` and `C1` negated, as printed.
    AsPrinted,
}

/// Raw output of the printed closed-form moment expressions. Kept complex:
/// nothing in the printed layer guarantees real photon numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrintedMoments {
    pub cov_ab: C64,
    pub cov_ab_dagger: C64,
    pub mean_na: C64,
    pub mean_nb: C64,
}

/// Evaluates the printed moment formulas literally. Exists to be compared
/// against [`moments_transport`], which is authoritative. `None` when the
/// spectrum is degenerate.
pub fn moments_closed_form(
    params: &ModelParams,
    t: f64,
    signs: CoefficientSigns,
) -> Option<PrintedMoments> {
    let mut coeffs = ch_coefficients(&spectral(params), t)?;
    if signs == CoefficientSigns::AsPrinted {
        coeffs = coeffs.with_printed_signs();
    }
    let n = f64::from(params.n_initial);
    let pp = structure_functions(params, &coeffs, 1.0, 1.0);
    let mm = structure_functions(params, &coeffs, -1.0, -1.0);
    let mp = structure_functions(params, &coeffs, -1.0, 1.0);

    let cov_ab = (1.0 + n) * pp.x * pp.y_coef + n * pp.w * pp.v + pp.v * pp.z_coef;
    let cov_ab_dagger = (1.0 + n) * pp.u * mm.v + n * pp.w * mp.y_coef + pp.v * mm.x;
    let mean_na = (1.0 + n) * pp.u * mm.u - n * pp.w * pp.w + pp.v * mm.v - 1.0;
    let mean_nb = (1.0 + n) * pp.v * mm.v + n * pp.y_coef * mp.y_coef + pp.x * mm.x - 1.0;
    Some(PrintedMoments {
        cov_ab,
        cov_ab_dagger,
        mean_na,
        mean_nb,
    })
}

/// `Y = sqrt((|cov(a,b+)|^2 + |cov(a,b)|^2) / (2 (n_a + 1/2)(n_b + 1/2)))`.
pub fn covariance_measure(m: &MomentSet) -> f64 {
    covariance_measure_rescaled(m, 0.0)
}

/// Covariance measure of moments stored as `m * exp(-2 log_scale)`, for
/// propagators renormalized to avoid overflow in the unstable regime.
pub fn covariance_measure_rescaled(m: &MomentSet, log_scale: f64) -> f64 {
    let half = 0.5 * (-2.0 * log_scale).exp();
    let num = m.cov_ab_dagger.norm_sqr() + m.cov_ab.norm_sqr();
    (num / (2.0 * (m.mean_na + half) * (m.mean_nb + half))).sqrt()
}

/// `|n_a - n_b| / (n_a + n_b)`.
pub fn photon_difference_ratio(m: &MomentSet) -> Result<f64> {
    let total = m.mean_na + m.mean_nb;
    if total <= 0.0 {
        return Err(Error::NoPhotons(total));
    }
    Ok((m.mean_na - m.mean_nb).abs() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn max_rel_diff(a: &Mat4, b: &Mat4) -> f64 {
        max_abs(&(a - b)) / max_abs(b).max(1.0)
    }

    #[test]
    fn matrix_layout() {
        let m = build_matrix(&ModelParams::new(1.0, 0.1, 0.1, 5)).0;
        let row0: Vec<f64> = (0..4).map(|j| m[(0, j)].re).collect();
        assert_eq!(row0, vec![1.0, 0.1, 0.2, 0.0]);
        assert_eq!(m[(2, 0)].re, -0.2);
        assert_eq!(m[(3, 3)].re, -1.0);

        let free = build_matrix(&ModelParams::new(1.0, 0.1, 0.0, 5)).0;
        assert_eq!(free[(0, 2)], ZERO);
        assert_eq!(free[(2, 0)], ZERO);
    }

    #[test]
    fn pump_free_spectrum() {
        let s = spectral(&ModelParams::new(1.0, 0.1, 0.0, 5));
        assert!((s.a - 1.01).abs() < 1e-15);
        assert!(close(s.b, C64::from(0.1), 1e-15));
        assert!(close(s.alpha, C64::from(0.9), 1e-14));
        assert!(close(s.gamma, C64::from(1.1), 1e-14));
        assert_eq!(s.regime, Regime::Stable);
    }

    #[test]
    fn weak_coupling_strong_pump_spectrum() {
        let s = spectral(&ModelParams::new(1.0, 0.001, 0.3, 5));
        // Direct substitution.
        let a: f64 = 1.0 + 1e-6 - 2.0 * 0.09;
        let b: f64 = (1e-6 - 1e-6 * 0.09 + 0.0081f64).sqrt();
        assert!((s.a - a).abs() < 1e-15 && (s.a - 0.820001).abs() < 1e-12);
        assert!(close(s.b, C64::from(b), 1e-15));
        assert!((b - 0.090005).abs() < 1e-6);
    }

    #[test]
    fn threshold_pump_is_unstable() {
        let s = spectral(&ModelParams::new(1.0, 0.001, 0.5, 5));
        assert_eq!(s.regime, Regime::ParametricallyUnstable);
        assert!(s.alpha.re.abs() < 1e-12 && s.alpha.im > 0.0);
    }

    #[test]
    fn ch_identity_at_zero_and_printed_signs_fail() {
        let spec = spectral(&ModelParams::new(1.0, 0.1, 0.1, 5));
        let c = ch_coefficients(&spec, 0.0).unwrap();
        for (x, e) in c.c.iter().zip(ChCoefficients::identity().c) {
            assert!(close(*x, e, 1e-14));
        }
        let m = build_matrix(&ModelParams::new(1.0, 0.1, 0.1, 5));
        let printed = c.with_printed_signs().to_matrix(&m);
        assert!(max_abs(&(printed + Mat4::identity())) < 1e-12);
    }

    #[test]
    fn ch_interpolates_exponential_at_eigenvalues() {
        let spec = spectral(&ModelParams::new(1.0, 0.1, 0.0, 5));
        for t in [0.3, 7.0, 123.4] {
            let c = ch_coefficients(&spec, t).unwrap();
            for theta in [0.9, 1.1, -0.9, -1.1] {
                let want = C64::from_polar(1.0, -theta * t);
                assert!(close(c.interpolate(C64::from(theta)), want, 1e-10));
            }
        }
    }

    #[test]
    fn pump_free_block_is_rotation() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 5);
        let t = 4.2;
        let s = propagator(&p, t).s;
        let phase = C64::from_polar(1.0, -t);
        let (sl, cl) = (0.1 * t).sin_cos();
        let want = [[phase * cl, -I * phase * sl], [-I * phase * sl, phase * cl]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(s[(i, j)], want[i][j], 1e-12));
                assert!(s[(i, j + 2)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn propagator_conjugation_structure() {
        let p = ModelParams::new(1.0, 0.07, 0.23, 5);
        let s = propagator(&p, 17.0).s;
        for j in 0..4 {
            let swapped = (j + 2) % 4;
            for i in 0..2 {
                assert!(close(s[(i + 2, j)], s[(i, swapped)].conj(), 1e-10));
            }
        }
    }

    #[test]
    fn degenerate_spectrum_falls_back_to_dense() {
        // lambda = 0, epsilon = 0: B = 0.
        let p = ModelParams::new(1.0, 0.0, 0.0, 2);
        let prop = propagator(&p, 2.0);
        assert_eq!(prop.method, PropagatorMethod::DenseExponential);
        assert!(close(prop.s[(0, 0)], C64::from_polar(1.0, -2.0), 1e-12));
    }

    #[test]
    fn initial_moments() {
        let m = moments_transport(&ModelParams::new(1.0, 0.1, 0.1, 5), 0.0);
        assert_eq!(m.cov_ab, ZERO);
        assert_eq!(m.cov_ab_dagger, ZERO);
        assert!((m.mean_na - 5.0).abs() < 1e-14 && m.mean_nb.abs() < 1e-14);
        assert_eq!(covariance_measure(&m), 0.0);
        assert_eq!(photon_difference_ratio(&m).unwrap(), 1.0);
    }

    #[test]
    fn pump_free_moments_at_quarter_period() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 5);
        let m = moments_transport(&p, PI / 4.0 / 0.1);
        assert!((m.cov_ab_dagger.norm() - 2.5).abs() < 1e-12);
        assert!(m.cov_ab.norm() < 1e-12);
        assert!((m.mean_na - 2.5).abs() < 1e-12 && (m.mean_nb - 2.5).abs() < 1e-12);
        assert!((covariance_measure(&m) - 0.589255650988789).abs() < 1e-12);
        assert!(photon_difference_ratio(&m).unwrap() < 1e-12);
    }

    #[test]
    fn ratio_needs_photons() {
        let m = moments_transport(&ModelParams::new(1.0, 0.1, 0.0, 0), 1.0);
        assert!(matches!(
            photon_difference_ratio(&m),
            Err(Error::NoPhotons(_))
        ));
    }

    #[test]
    fn structure_functions_landmarks() {
        let p = ModelParams::new(1.0, 0.1, 0.1, 5);
        let id = ChCoefficients::identity();
        let f = structure_functions(&p, &id, 1.0, 1.0);
        assert_eq!((f.u, f.x), (ONE, ONE));
        assert_eq!([f.v, f.w, f.y_coef, f.z_coef], [ZERO; 4]);

        let c = ch_coefficients(&spectral(&p), 3.0).unwrap();
        let free = ModelParams::new(1.0, 0.1, 0.0, 5);
        let cf = ch_coefficients(&spectral(&free), 3.0).unwrap();
        let f = structure_functions(&free, &cf, -1.0, 1.0);
        assert_eq!([f.w, f.y_coef, f.z_coef], [ZERO; 3]);

        let uncoupled = ModelParams::new(1.0, 0.0, 0.1, 5);
        let f = structure_functions(&uncoupled, &c, 1.0, -1.0);
        assert_eq!(f.z_coef, ZERO);
    }

    #[test]
    fn printed_u_v_x_z_are_propagator_entries() {
        let p = ModelParams::new(1.0, 0.13, 0.21, 5);
        let t = 9.0;
        let c = ch_coefficients(&spectral(&p), t).unwrap();
        let s = c.to_matrix(&build_matrix(&p));
        let f = structure_functions(&p, &c, 1.0, 1.0);
        assert!(close(f.u, s[(0, 0)], 1e-12));
        assert!(close(f.v, s[(0, 1)], 1e-12));
        assert!(close(f.x, s[(1, 1)], 1e-12));
        assert!(close(f.z_coef, s[(1, 3)], 1e-12));
    }

    #[test]
    fn printed_moments_hold_at_time_zero() {
        let p = ModelParams::new(1.0, 0.1, 0.1, 5);
        let m = moments_closed_form(&p, 0.0, CoefficientSigns::Corrected).unwrap();
        assert!(close(m.cov_ab, ZERO, 1e-12));
        assert!(close(m.cov_ab_dagger, ZERO, 1e-12));
        assert!(close(m.mean_na, C64::from(5.0), 1e-12));
        assert!(close(m.mean_nb, ZERO, 1e-12));
    }

    fn params_strategy() -> impl Strategy<Value = (ModelParams, f64)> {
        (1e-3f64..0.2, 0.0f64..0.5, 0.0f64..2.0)
            .prop_map(|(l, e, s)| (ModelParams::new(1.0, l, e, 5), s * PI / l))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sigma_m_is_hermitian(w in 0.1f64..3.0, l in -1.0f64..1.0, e in -1.0f64..1.0) {
            let m = build_matrix(&ModelParams::new(w, l, e, 1));
            prop_assert_eq!(m.sigma_hermitian_defect(), 0.0);
        }

        #[test]
        fn gap_identity(w in 0.1f64..3.0, l in 0.0f64..1.0, e in 0.0f64..1.0) {
            let s = spectral(&ModelParams::new(w, l, e, 1));
            let gap = s.gamma * s.gamma - s.alpha * s.alpha - 4.0 * s.b;
            prop_assert!(gap.norm() < 1e-12);
        }

        #[test]
        fn claimed_eigenvalues_are_roots(w in 0.5f64..2.0, l in 1e-3f64..0.5, e in 0.0f64..0.6) {
            let p = ModelParams::new(w, l, e, 1);
            let s = spectral(&p);
            for r in s.eigen_residuals(&build_matrix(&p)) {
                prop_assert!(r < 1e-10, "{:?}", s);
            }
        }

        #[test]
        fn ch_matches_dense_and_is_symplectic((p, t) in params_strategy()) {
            let prop = propagator(&p, t);
            prop_assert_eq!(prop.method, PropagatorMethod::CayleyHamilton);
            let dense = dense_propagator(&p, t);
            prop_assert!(max_rel_diff(&prop.s, &dense) < 1e-9);
            prop_assert!(prop.symplectic_defect() < 1e-9 * max_abs(&prop.s).powi(2).max(1.0));
        }

        #[test]
        fn group_property((p, t) in params_strategy(), split in 0.0f64..1.0) {
            let t1 = split * t;
            let whole = propagator(&p, t).s;
            let parts = propagator(&p, t - t1).s * propagator(&p, t1).s;
            prop_assert!(max_rel_diff(&parts, &whole) < 1e-9);
        }

        #[test]
        fn pump_free_transport_matches_closed_form(l in 1e-3f64..0.2, s in 0.0f64..1.0) {
            let p = ModelParams::new(1.0, l, 0.0, 5);
            let t = s * PI / l;
            let y = covariance_measure(&moments_transport(&p, t));
            let want = crate::binomial::covariance_measure_closed(5, l, t);
            prop_assert!((y - want).abs() < 1e-9);
        }

        #[test]
        fn photon_numbers_non_negative((p, t) in params_strategy()) {
            let m = moments_transport(&p, t);
            prop_assert!(m.mean_na >= -1e-9 && m.mean_nb >= -1e-9);
            let y = covariance_measure(&m);
            prop_assert!((0.0..1.0).contains(&y));
        }
    }
}
