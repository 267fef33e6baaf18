//! Classical trajectories of `H(x, p) = m0 p² / 2m(x)² + V(x)` and the
//! conservation of `K(x, v)` along them.
//!
//! Plain RK4 is used: `H` is not separable, so the explicit symplectic
//! splittings do not apply, and RK4 already conserves `K` far below the
//! tolerances of interest at a thousand steps per period.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    /// `m0 p / m(x)²`
    pub v: f64,
    pub k_value: f64,
    pub h_value: f64,
}

impl TrajectoryState {
    pub fn at(params: &ModelParams, t: f64, x: f64, p: f64) -> Result<Self> {
        let v = model::velocity_from_momentum(params, x, p)?;
        Ok(TrajectoryState {
            t,
            x,
            p,
            v,
            k_value: model::classical_k_exact(params, x, v)?,
            h_value: model::classical_h_exact(params, x, p)?,
        })
    }
}

/// Unperturbed period `2π/ω`, the step-size reference.
pub fn period(params: &ModelParams) -> f64 {
    2.0 * PI / params.omega
}

/// Hamilton's equations `(ẋ, ṗ)`.
pub fn hamilton_rhs(params: &ModelParams, x: f64, p: f64) -> Result<(f64, f64)> {
    let ModelParams { m0, m1, omega, .. } = *params;
    let m = model::mass_at(params, x)?;
    let w2 = omega * omega;
    let dx = m0 * p / (m * m);
    let dp = m0 * p * p * m1 / (m * m * m) - m0 * w2 * x - m1 * w2 * x * x;
    Ok((dx, dp))
}

fn rk4_step(params: &ModelParams, x: f64, p: f64, dt: f64) -> Result<(f64, f64)> {
    let (k1x, k1p) = hamilton_rhs(params, x, p)?;
    let (k2x, k2p) = hamilton_rhs(params, x + 0.5 * dt * k1x, p + 0.5 * dt * k1p)?;
    let (k3x, k3p) = hamilton_rhs(params, x + 0.5 * dt * k2x, p + 0.5 * dt * k2p)?;
    let (k4x, k4p) = hamilton_rhs(params, x + dt * k3x, p + dt * k3p)?;
    Ok((
        x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    ))
}

/// `steps` RK4 steps from `(x0, p0)` at `t = 0`; returns `steps + 1` samples
/// including the initial state. A negative `dt` integrates backwards.
pub fn integrate(params: &ModelParams, x0: f64, p0: f64, dt: f64, steps: usize) -> Result<Vec<TrajectoryState>> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidParams(format!("time step must be finite and nonzero, got {dt}")));
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(TrajectoryState::at(params, 0.0, x0, p0)?);
    let (mut x, mut p) = (x0, p0);
    for step in 1..=steps {
        (x, p) = rk4_step(params, x, p, dt)?;
        if !(x.is_finite() && p.is_finite()) {
            return Err(Error::Step { step });
        }
        out.push(TrajectoryState::at(params, step as f64 * dt, x, p)?);
    }
    Ok(out)
}

/// `max |K(t) − K(0)| / |K(0)|`
pub fn relative_k_drift(trajectory: &[TrajectoryState]) -> f64 {
    let Some(first) = trajectory.first() else { return 0.0 };
    let k0 = first.k_value;
    trajectory
        .iter()
        .map(|s| (s.k_value - k0).abs() / k0.abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationCheck {
    pub drift: f64,
    pub drift_half_step: f64,
    /// `drift / drift_half_step`; 16 for a fourth-order energy error.
    pub ratio: f64,
}

/// Drift over `periods` at `steps_per_period`, and again at half the step.
pub fn conservation_check(params: &ModelParams, x0: f64, p0: f64, periods: usize, steps_per_period: usize) -> Result<ConservationCheck> {
    let t = period(params);
    let coarse = integrate(params, x0, p0, t / steps_per_period as f64, periods * steps_per_period)?;
    let fine = integrate(params, x0, p0, t / (2 * steps_per_period) as f64, 2 * periods * steps_per_period)?;
    let drift = relative_k_drift(&coarse);
    let drift_half_step = relative_k_drift(&fine);
    Ok(ConservationCheck { drift, drift_half_step, ratio: drift / drift_half_step })
}

pub const CSV_HEADER: &str = "t,x,p,v,K,H";

pub fn write_csv<W: Write>(out: &mut W, trajectory: &[TrajectoryState]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in trajectory {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t, s.x, s.p, s.v, s.k_value, s.h_value
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let nat = ModelParams::natural(0.0);
        assert_eq!(hamilton_rhs(&nat, 0.7, -0.3).unwrap(), (-0.3, -0.7));
        assert_eq!(hamilton_rhs(&ModelParams::natural(0.1), 0.0, 0.0).unwrap(), (0.0, 0.0));
        let (dx, dp) = hamilton_rhs(&ModelParams::natural(0.1), 1.0, 1.0).unwrap();
        assert!((dx - 1.0 / 1.21).abs() < 1e-15);
        assert!((dp - (0.1 / 1.331 - 1.0 - 0.1)).abs() < 1e-15);
        assert!(matches!(hamilton_rhs(&ModelParams::natural(0.5), -2.0, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn rhs_matches_finite_differences() {
        let params = ModelParams::natural(0.1);
        let h = 1e-6;
        for &(x, p) in &[(0.3, 0.2), (-1.0, 1.5), (2.0, -0.7), (0.0, 1.0)] {
            let hx = |x: f64| model::classical_h_exact(&params, x, p).unwrap();
            let hp = |p: f64| model::classical_h_exact(&params, x, p).unwrap();
            let dh_dx = (hx(x + h) - hx(x - h)) / (2.0 * h);
            let dh_dp = (hp(p + h) - hp(p - h)) / (2.0 * h);
            let (dx, dp) = hamilton_rhs(&params, x, p).unwrap();
            assert!((dx - dh_dp).abs() <= 1e-8 * dx.abs().max(1.0), "{x} {p}");
            assert!((dp + dh_dx).abs() <= 1e-8 * dp.abs().max(1.0), "{x} {p}");
        }
    }

    #[test]
    fn harmonic_limit_is_cosine() {
        let params = ModelParams::natural(0.0);
        let dt = period(&params) / 1000.0;
        let traj = integrate(&params, 1.0, 0.0, dt, 10_000).unwrap();
        for s in &traj {
            assert!((s.x - s.t.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn k_equals_h_along_trajectory() {
        let params = ModelParams::natural(0.05);
        let traj = integrate(&params, 1.0, 0.0, period(&params) / 200.0, 2000).unwrap();
        for s in &traj {
            assert!((s.k_value - s.h_value).abs() <= 4.0 * f64::EPSILON * s.h_value.abs());
        }
    }

    #[test]
    fn time_reversal() {
        let params = ModelParams::natural(0.05);
        let dt = period(&params) / 1000.0;
        let fwd = integrate(&params, 1.0, 0.3, dt, 5000).unwrap();
        let end = fwd.last().unwrap();
        let back = integrate(&params, end.x, end.p, -dt, 5000).unwrap();
        let home = back.last().unwrap();
        assert!((home.x - 1.0).abs() < 1e-8);
        assert!((home.p - 0.3).abs() < 1e-8);
    }

    #[test]
    fn mass_crossing_is_reported() {
        // far outside the regime: the particle reaches m(x) = 0
        let params = ModelParams::natural(0.9);
        let err = integrate(&params, -1.0, -3.0, 0.01, 10_000).unwrap_err();
        assert!(matches!(err, Error::Domain { .. } | Error::Step { .. }));
        assert!(integrate(&params, 0.0, 0.0, 0.0, 10).is_err());
    }

    #[test]
    fn csv_layout() {
        let params = ModelParams::natural(0.0);
        let traj = integrate(&params, 1.0, 0.0, 0.1, 3).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    }
}
