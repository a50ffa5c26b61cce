//! Physical parameters and the scaled-time convention shared by every
//! solver in the crate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the two-cavity Hamiltonian
/// `H = w (a+a + b+b) + l (a+b + ab+) + e (a+^2 + a^2)`
/// together with the photon number `N` of the initial state `|N,0>`.
///
/// All frequencies share one arbitrary unit. `omega` defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_initial: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            lambda: 0.1,
            epsilon: 0.0,
            n_initial: 5,
        }
    }
}

impl ModelParams {
    pub fn new(omega: f64, lambda: f64, epsilon: f64, n_initial: u32) -> Self {
        Self {
            omega,
            lambda,
            epsilon,
            n_initial,
        }
    }

    /// Returns the parameters unchanged if every invariant holds, otherwise
    /// an error listing each violation.
    pub fn validate(self) -> Result<Self> {
        let mut violations = Vec::new();
        for (name, value) in [
            ("omega", self.omega),
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
        ] {
            if !value.is_finite() {
                violations.push(format!("{name} must be finite (got {value})"));
            }
        }
        if self.omega.is_finite() && self.omega <= 0.0 {
            violations.push(format!("omega must be positive (got {})", self.omega));
        }
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(violations))
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_n_initial(self, n_initial: u32) -> Self {
        Self { n_initial, ..self }
    }

    pub fn is_pump_free(&self) -> bool {
        self.epsilon == 0.0
    }
}

/// Time in units of `pi / lambda`, the exchange period of the pump-free
/// evolution.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ScaledTime(pub f64);

impl ScaledTime {
    pub fn to_physical(self, params: &ModelParams) -> Result<f64> {
        to_physical_time(self, params)
    }
}

pub fn to_physical_time(s: ScaledTime, params: &ModelParams) -> Result<f64> {
    if params.lambda == 0.0 {
        return Err(Error::UncoupledCavities);
    }
    Ok(s.0 * PI / params.lambda)
}

pub fn to_scaled_time(t: f64, params: &ModelParams) -> Result<ScaledTime> {
    if params.lambda == 0.0 {
        return Err(Error::UncoupledCavities);
    }
    Ok(ScaledTime(t * params.lambda / PI))
}
