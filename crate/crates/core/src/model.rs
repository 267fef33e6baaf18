//! Physical parameters of the oscillator, the constants that appear in the
//! closed-form energies, and the classical energy functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 reduced Planck constant, J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// ħ = m0 = ω = 1; lengths in `√(ħ/m0ω)`, energies in `ħω`.
    Natural,
    Si,
}

/// Inputs of the model `m(x) = m0 + m1 x` with harmonic force `F = -m0 ω² x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m0: f64,
    pub m1: f64,
    pub omega: f64,
    pub hbar: f64,
    pub units: Units,
}

impl ModelParams {
    /// Natural units with the given dimensionless mass gradient.
    pub fn natural(m1: f64) -> Self {
        ModelParams { m0: 1.0, m1, omega: 1.0, hbar: 1.0, units: Units::Natural }
    }

    pub fn si(m0: f64, m1: f64, omega: f64, hbar: f64) -> Result<Self> {
        let p = ModelParams { m0, m1, omega, hbar, units: Units::Si };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m0, self.m1, self.omega, self.hbar].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.m0 <= 0.0 || self.omega <= 0.0 || self.hbar <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "m0, omega and hbar must be positive (m0={}, omega={}, hbar={})",
                self.m0, self.omega, self.hbar
            )));
        }
        if self.units == Units::Natural && (self.m0 != 1.0 || self.omega != 1.0 || self.hbar != 1.0) {
            return Err(Error::InvalidParams(
                "natural units require m0 = omega = hbar = 1".into(),
            ));
        }
        Ok(())
    }

    /// Oscillator length `√(ħ/m0ω)`.
    pub fn length_scale(&self) -> f64 {
        (self.hbar / (self.m0 * self.omega)).sqrt()
    }

    /// Energy quantum `ħω`.
    pub fn energy_scale(&self) -> f64 {
        self.hbar * self.omega
    }

    /// Mass gradient in units of `m0 / L`.
    pub fn m1_dimensionless(&self) -> f64 {
        self.m1 * self.length_scale() / self.m0
    }

    /// The same physical system expressed in natural units.
    pub fn to_natural(&self) -> ModelParams {
        ModelParams::natural(self.m1_dimensionless())
    }

    pub fn with_m1(&self, m1: f64) -> ModelParams {
        ModelParams { m1, ..*self }
    }

    pub fn scales(&self) -> Scales {
        let length = self.length_scale();
        let time = 1.0 / self.omega;
        Scales {
            length,
            time,
            momentum: self.m0 * length / time,
            velocity: length / time,
            energy: self.energy_scale(),
        }
    }
}

/// Conversion factors from natural units to the units of a [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub length: f64,
    pub time: f64,
    pub momentum: f64,
    pub velocity: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// `3 m1² ħ² / 2 m0³`
    pub sigma: f64,
    /// `(ħ / 2 m0) √(ħω / 2 m0)`
    pub beta: f64,
    /// `(m1 ω² / 3) (ħ / 2 m0 ω)^{3/2}`
    pub eta: f64,
    /// `√(m0 ω / ħ)`
    pub alpha: f64,
    /// spring constant `m0 ω²`
    pub k: f64,
}

pub fn derive_constants(params: &ModelParams) -> DerivedConstants {
    let ModelParams { m0, m1, omega, hbar, .. } = *params;
    DerivedConstants {
        sigma: 3.0 * m1 * m1 * hbar * hbar / (2.0 * m0.powi(3)),
        beta: hbar / (2.0 * m0) * (hbar * omega / (2.0 * m0)).sqrt(),
        eta: m1 * omega * omega / 3.0 * (hbar / (2.0 * m0 * omega)).powf(1.5),
        alpha: (m0 * omega / hbar).sqrt(),
        k: m0 * omega * omega,
    }
}

/// `m(x) = m0 + m1 x`, rejected once the mass is no longer positive.
pub fn mass_at(params: &ModelParams, x: f64) -> Result<f64> {
    let mass = params.m0 + params.m1 * x;
    if mass > 0.0 {
        Ok(mass)
    } else {
        Err(Error::Domain { x, mass })
    }
}

/// `(1/m0) ∫₀ˣ k s m(s) ds` for the linear mass model.
pub fn potential(params: &ModelParams, x: f64) -> f64 {
    let w2 = params.omega * params.omega;
    0.5 * params.m0 * w2 * x * x + params.m1 * w2 / 3.0 * x.powi(3)
}

pub fn classical_k_exact(params: &ModelParams, x: f64, v: f64) -> Result<f64> {
    let m = mass_at(params, x)?;
    Ok(m * m * v * v / (2.0 * params.m0) + potential(params, x))
}

pub fn classical_h_exact(params: &ModelParams, x: f64, p: f64) -> Result<f64> {
    let m = mass_at(params, x)?;
    Ok(params.m0 * p * p / (2.0 * m * m) + potential(params, x))
}

/// Unperturbed constant of motion `½ m0 v² + ½ m0 ω² x²`.
pub fn classical_k0(params: &ModelParams, x: f64, v: f64) -> f64 {
    0.5 * params.m0 * (v * v + params.omega * params.omega * x * x)
}

/// Unperturbed Hamiltonian `p²/2m0 + ½ m0 ω² x²`.
pub fn classical_h0(params: &ModelParams, x: f64, p: f64) -> f64 {
    p * p / (2.0 * params.m0) + 0.5 * params.m0 * params.omega * params.omega * x * x
}

pub fn classical_w_k(params: &ModelParams, x: f64, v: f64) -> f64 {
    let ModelParams { m0, m1, omega, .. } = *params;
    m1 * x * v * v + m1 * m1 / (2.0 * m0) * x * x * v * v + m1 * omega * omega / 3.0 * x.powi(3)
}

pub fn classical_w_h(params: &ModelParams, x: f64, p: f64) -> f64 {
    let ModelParams { m0, m1, omega, .. } = *params;
    let kinetic = -m1 * x / m0 + 3.0 * m1 * m1 * x * x / (2.0 * m0 * m0);
    kinetic * p * p / m0 + m1 * omega * omega / 3.0 * x.powi(3)
}

/// Velocity belonging to canonical momentum `p` at position `x`: `m0 p / m(x)²`.
pub fn velocity_from_momentum(params: &ModelParams, x: f64, p: f64) -> Result<f64> {
    let m = mass_at(params, x)?;
    Ok(params.m0 * p / (m * m))
}

pub fn momentum_from_velocity(params: &ModelParams, x: f64, v: f64) -> Result<f64> {
    let m = mass_at(params, x)?;
    Ok(m * m * v / params.m0)
}
