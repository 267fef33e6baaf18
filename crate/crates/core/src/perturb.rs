//! Rayleigh–Schrödinger perturbation theory to second order.
//!
//! Two independent routes produce the same energies: sums over matrix
//! elements of `Ŵ` in the truncated basis ([`PerturbationSystem`]), and
//! closed-form polynomials in `n` ([`closed_form_e1`], [`closed_form_e2`]).
//! The closed forms are parametrized by [`ClosedFormVariant`] so that the
//! published coefficients and any alternatives can be evaluated side by
//! side; [`ClosedFormVariant::printed`] is the published text.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasisSpec, OperatorMatrix, MATRIX_TOL, MAX_DEGREE};
use crate::model::{derive_constants, ModelParams};
use crate::quantize::{build_w, CubicSource, WhichPerturbation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyRoute {
    Numeric,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeEnergy {
    pub n: usize,
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub total: f64,
    pub which: WhichPerturbation,
    pub source: EnergyRoute,
}

impl PerturbativeEnergy {
    fn new(n: usize, e0: f64, e1: f64, e2: f64, which: WhichPerturbation, source: EnergyRoute) -> Self {
        PerturbativeEnergy { n, e0, e1, e2, total: e0 + e1 + e2, which, source }
    }
}

/// `ħω(n + ½)`
pub fn e0(params: &ModelParams, n: usize) -> f64 {
    params.energy_scale() * (n as f64 + 0.5)
}

/// `⟨n|W|n⟩`, requiring `n` inside the trusted block and a real diagonal.
pub fn first_order_numeric(w: &OperatorMatrix, basis: &FockBasisSpec, n: usize) -> Result<f64> {
    if w.dim() != basis.dim {
        return Err(Error::Size(format!("operator dim {} vs basis dim {}", w.dim(), basis.dim)));
    }
    if !basis.is_trusted(n) {
        return Err(Error::Truncation { n, dim: basis.dim, guard: basis.guard });
    }
    let z = w.get(n, n);
    if z.im.abs() > MATRIX_TOL {
        return Err(Error::NotHermitian { defect: z.im.abs() });
    }
    Ok(z.re)
}

/// Individual terms `|⟨m|W|n⟩|² / (E⁰ₙ − E⁰ₘ)` of the second-order sum, `m ≠ n`.
pub fn second_order_terms(w: &OperatorMatrix, params: &ModelParams, basis: &FockBasisSpec, n: usize) -> Result<Vec<(usize, f64)>> {
    if w.dim() != basis.dim {
        return Err(Error::Size(format!("operator dim {} vs basis dim {}", w.dim(), basis.dim)));
    }
    if !basis.is_trusted(n + MAX_DEGREE) {
        return Err(Error::Truncation { n, dim: basis.dim, guard: basis.guard });
    }
    let en = e0(params, n);
    Ok((0..w.dim())
        .filter(|&m| m != n)
        .map(|m| (m, w.get(m, n).norm_sqr() / (en - e0(params, m))))
        .collect())
}

pub fn second_order_numeric(w: &OperatorMatrix, params: &ModelParams, basis: &FockBasisSpec, n: usize) -> Result<f64> {
    Ok(second_order_terms(w, params, basis, n)?.iter().map(|(_, c)| c).sum())
}

/// A perturbation operator built once and queried per level.
#[derive(Debug, Clone)]
pub struct PerturbationSystem {
    pub params: ModelParams,
    pub which: WhichPerturbation,
    pub basis: FockBasisSpec,
    pub w: OperatorMatrix,
}

impl PerturbationSystem {
    pub fn new(params: &ModelParams, which: WhichPerturbation, basis: FockBasisSpec, cubic: CubicSource) -> Result<Self> {
        let w = build_w(params, basis.dim, which, cubic)?;
        Ok(PerturbationSystem { params: *params, which, basis, w })
    }

    pub fn first_order(&self, n: usize) -> Result<f64> {
        first_order_numeric(&self.w, &self.basis, n)
    }

    pub fn second_order(&self, n: usize) -> Result<f64> {
        second_order_numeric(&self.w, &self.params, &self.basis, n)
    }

    pub fn energy(&self, n: usize) -> Result<PerturbativeEnergy> {
        Ok(PerturbativeEnergy::new(
            n,
            e0(&self.params, n),
            self.first_order(n)?,
            self.second_order(n)?,
            self.which,
            EnergyRoute::Numeric,
        ))
    }

    /// Largest level whose second-order sum stays inside the trusted block.
    pub fn max_level(&self) -> Option<usize> {
        self.basis.trusted().checked_sub(MAX_DEGREE + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }
}

/// Leading power of `n` in the `|Δn| = 1` polynomial: `3n² + 3n + 1` or `3n³ + 3n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LeadingPower {
    Square,
    Cube,
}

/// Choices that distinguish the published second-order polynomials.
///
/// The second-order energy has the shape
/// `−(1/ħω) { (η ± m1β)² (3n²+3n+2) + (3η ± m1β)² (3n^k+3n+1) + (σ/d)² (4n³+6n²+14n+6) }`,
/// one channel per `|Δn| ∈ {3, 1, 4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClosedFormVariant {
    pub triple_step_sign: Sign,
    pub single_step_sign: Sign,
    pub single_step_power: LeadingPower,
    /// `d` in `(σ/d)²`.
    pub quartic_divisor: u32,
}

impl ClosedFormVariant {
    pub fn printed(which: WhichPerturbation) -> Self {
        match which {
            WhichPerturbation::HamiltonianP => ClosedFormVariant {
                triple_step_sign: Sign::Minus,
                single_step_sign: Sign::Minus,
                single_step_power: LeadingPower::Cube,
                quartic_divisor: 4,
            },
            WhichPerturbation::ConstantOfMotionV => ClosedFormVariant {
                triple_step_sign: Sign::Minus,
                single_step_sign: Sign::Plus,
                single_step_power: LeadingPower::Square,
                quartic_divisor: 12,
            },
        }
    }
}

fn first_order_polynomial(n: f64) -> f64 {
    (2.0 * n * n + 2.0 * n - 1.0) / 4.0 + 0.5
}

fn quartic_polynomial(n: f64) -> f64 {
    4.0 * n.powi(3) + 6.0 * n * n + 14.0 * n + 6.0
}

/// `σ{(2n²+2n−1)/4 + ½}` for `H`, one third of that for `K`.
pub fn closed_form_e1(which: WhichPerturbation, params: &ModelParams, n: usize) -> f64 {
    let sigma = derive_constants(params).sigma;
    let scale = match which {
        WhichPerturbation::HamiltonianP => 1.0,
        WhichPerturbation::ConstantOfMotionV => 1.0 / 3.0,
    };
    scale * sigma * first_order_polynomial(n as f64)
}

/// Both quantizations share one polynomial shape; `variant` carries every
/// difference between them, so the quantization tag is informational.
pub fn closed_form_e2(_which: WhichPerturbation, params: &ModelParams, n: usize, variant: &ClosedFormVariant) -> f64 {
    let c = derive_constants(params);
    let m1b = params.m1 * c.beta;
    let nf = n as f64;
    let triple = (c.eta + variant.triple_step_sign.value() * m1b).powi(2) * (3.0 * nf * nf + 3.0 * nf + 2.0);
    let lead = match variant.single_step_power {
        LeadingPower::Square => nf * nf,
        LeadingPower::Cube => nf.powi(3),
    };
    let single = (3.0 * c.eta + variant.single_step_sign.value() * m1b).powi(2) * (3.0 * lead + 3.0 * nf + 1.0);
    let quartic = (c.sigma / variant.quartic_divisor as f64).powi(2) * quartic_polynomial(nf);
    -(triple + single + quartic) / params.energy_scale()
}

pub fn closed_form_energy(which: WhichPerturbation, params: &ModelParams, n: usize, variant: &ClosedFormVariant) -> PerturbativeEnergy {
    PerturbativeEnergy::new(
        n,
        e0(params, n),
        closed_form_e1(which, params, n),
        closed_form_e2(which, params, n, variant),
        which,
        EnergyRoute::ClosedForm,
    )
}

/// Where a total energy comes from.
#[derive(Debug, Clone, Copy)]
pub enum EnergySource<'a> {
    Numeric(&'a PerturbationSystem),
    ClosedForm(&'a ClosedFormVariant),
}

pub fn total_energy(which: WhichPerturbation, params: &ModelParams, n: usize, source: EnergySource<'_>) -> Result<PerturbativeEnergy> {
    match source {
        EnergySource::Numeric(system) => {
            if system.which != which || system.params != *params {
                return Err(Error::InvalidParams("perturbation system built for different inputs".into()));
            }
            system.energy(n)
        }
        EnergySource::ClosedForm(variant) => Ok(closed_form_energy(which, params, n, variant)),
    }
}

/// `E_H,n − E_K,n` from two numeric systems.
pub fn delta_e_numeric(h: &PerturbationSystem, k: &PerturbationSystem, n: usize) -> Result<f64> {
    if h.which != WhichPerturbation::HamiltonianP || k.which != WhichPerturbation::ConstantOfMotionV {
        return Err(Error::InvalidParams("delta needs an H system and a K system".into()));
    }
    Ok(h.energy(n)?.total - k.energy(n)?.total)
}

/// `E_H,n − E_K,n` by subtracting closed forms.
pub fn delta_e_closed_form(params: &ModelParams, n: usize, h: &ClosedFormVariant, k: &ClosedFormVariant) -> f64 {
    closed_form_energy(WhichPerturbation::HamiltonianP, params, n, h).total
        - closed_form_energy(WhichPerturbation::ConstantOfMotionV, params, n, k).total
}

/// The published single-expression difference
/// `(2σ/3)((2n²+2n−1)/4 + ½) + (4m1ηβ/ħω)(6n²+6n+1) − (σ²/18ħω)(4n³+6n²+14n+6)`.
pub fn delta_e_printed(params: &ModelParams, n: usize) -> f64 {
    let c = derive_constants(params);
    let hw = params.energy_scale();
    let nf = n as f64;
    2.0 * c.sigma / 3.0 * first_order_polynomial(nf)
        + 4.0 * params.m1 * c.eta * c.beta / hw * (6.0 * nf * nf + 6.0 * nf + 1.0)
        - c.sigma * c.sigma / (18.0 * hw) * quartic_polynomial(nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, DEFAULT_GUARD};
    use crate::model::HBAR_SI;

    const PRINTED_H: ClosedFormVariant = ClosedFormVariant {
        triple_step_sign: Sign::Minus,
        single_step_sign: Sign::Minus,
        single_step_power: LeadingPower::Cube,
        quartic_divisor: 4,
    };

    fn basis() -> FockBasisSpec {
        FockBasisSpec::new(40, DEFAULT_GUARD).unwrap()
    }

    #[test]
    fn unperturbed_levels() {
        let nat = ModelParams::natural(0.0);
        assert_eq!(e0(&nat, 0), 0.5);
        assert_eq!(e0(&nat, 3), 3.5);
        let si = ModelParams::si(1e-17, 0.0, 1e10, HBAR_SI).unwrap();
        assert!((e0(&si, 0) - 0.5 * HBAR_SI * 1e10).abs() < 1e-40);
    }

    #[test]
    fn zero_operator_gives_zero_corrections() {
        let params = ModelParams::natural(0.0);
        let w = OperatorMatrix::zeros(40);
        for n in 0..10 {
            assert_eq!(first_order_numeric(&w, &basis(), n).unwrap(), 0.0);
            assert_eq!(second_order_numeric(&w, &params, &basis(), n).unwrap(), 0.0);
        }
    }

    #[test]
    fn parity_odd_operator_has_no_first_order() {
        let params = ModelParams::natural(0.0);
        let x = fock::position_op(&params, 40).unwrap();
        let x3 = OperatorMatrix::product([&x, &x, &x]).unwrap();
        for n in 0..20 {
            assert_eq!(first_order_numeric(&x3, &basis(), n).unwrap(), 0.0);
        }
    }

    #[test]
    fn trusted_block_is_enforced() {
        let params = ModelParams::natural(0.05);
        let sys = PerturbationSystem::new(&params, WhichPerturbation::HamiltonianP, basis(), CubicSource::Potential).unwrap();
        assert!(sys.first_order(31).is_ok());
        assert!(matches!(sys.first_order(32), Err(Error::Truncation { .. })));
        assert!(sys.second_order(27).is_ok());
        assert!(matches!(sys.second_order(28), Err(Error::Truncation { .. })));
        assert_eq!(sys.max_level(), Some(27));
    }

    #[test]
    fn ground_state_second_order_is_negative() {
        for m1 in [0.01, 0.05, -0.08] {
            for which in WhichPerturbation::BOTH {
                let sys = PerturbationSystem::new(&ModelParams::natural(m1), which, basis(), CubicSource::Potential).unwrap();
                assert!(sys.second_order(0).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn second_order_sum_is_banded() {
        let params = ModelParams::natural(0.05);
        for which in WhichPerturbation::BOTH {
            let sys = PerturbationSystem::new(&params, which, basis(), CubicSource::Potential).unwrap();
            for n in 0..10 {
                let terms = second_order_terms(&sys.w, &params, &sys.basis, n).unwrap();
                for (m, c) in terms {
                    if m.abs_diff(n) > 4 {
                        assert_eq!(c, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_forms_vanish_without_gradient() {
        let params = ModelParams::natural(0.0);
        for which in WhichPerturbation::BOTH {
            let v = ClosedFormVariant::printed(which);
            for n in 0..8 {
                assert_eq!(closed_form_e1(which, &params, n), 0.0);
                assert_eq!(closed_form_e2(which, &params, n, &v), 0.0);
                let e = closed_form_energy(which, &params, n, &v);
                assert_eq!(e.total, e0(&params, n));
            }
            assert_eq!(delta_e_printed(&params, 3), 0.0);
        }
    }

    #[test]
    fn published_first_order_relations() {
        let params = ModelParams::natural(0.05);
        let sigma = derive_constants(&params).sigma;
        assert!((closed_form_e1(WhichPerturbation::HamiltonianP, &params, 0) - sigma / 4.0).abs() < 1e-18);
        for n in 0..10 {
            let h = closed_form_e1(WhichPerturbation::HamiltonianP, &params, n);
            let k = closed_form_e1(WhichPerturbation::ConstantOfMotionV, &params, n);
            assert!((k / h - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn printed_variants() {
        assert_eq!(ClosedFormVariant::printed(WhichPerturbation::HamiltonianP), PRINTED_H);
        let k = ClosedFormVariant::printed(WhichPerturbation::ConstantOfMotionV);
        assert_eq!(k.single_step_power, LeadingPower::Square);
        assert_eq!(k.quartic_divisor, 12);
        assert_eq!(Sign::Plus.flipped(), Sign::Minus);
    }

    #[test]
    fn closed_form_e2_hand_value() {
        // n = 0, natural units, m1 = 0.1: η = m1/(6√2), m1β = m1/(2√2), σ = 3m1²/2
        let params = ModelParams::natural(0.1);
        let m1 = 0.1f64;
        let eta = m1 / (6.0 * 2f64.sqrt());
        let m1b = m1 / (2.0 * 2f64.sqrt());
        let sigma = 1.5 * m1 * m1;
        let expected = -((eta - m1b).powi(2) * 2.0 + (3.0 * eta + m1b).powi(2) + (sigma / 12.0).powi(2) * 6.0);
        let v = ClosedFormVariant::printed(WhichPerturbation::ConstantOfMotionV);
        assert!((closed_form_e2(WhichPerturbation::ConstantOfMotionV, &params, 0, &v) - expected).abs() < 1e-16);
    }

    #[test]
    fn closed_forms_scale_with_energy_unit() {
        let si = ModelParams::si(1e-17, 2e-5, 1e10, HBAR_SI).unwrap();
        let nat = si.to_natural();
        let hw = si.energy_scale();
        for which in WhichPerturbation::BOTH {
            let v = ClosedFormVariant::printed(which);
            for n in 0..6 {
                let a = closed_form_energy(which, &si, n, &v);
                let b = closed_form_energy(which, &nat, n, &v);
                assert!((a.e1 / hw - b.e1).abs() <= 1e-12 * b.e1.abs());
                assert!((a.e2 / hw - b.e2).abs() <= 1e-12 * b.e2.abs());
            }
            assert!((delta_e_printed(&si, 4) / hw - delta_e_printed(&nat, 4)).abs() < 1e-12 * delta_e_printed(&nat, 4).abs());
        }
    }

    #[test]
    fn numeric_route_through_total_energy() {
        let params = ModelParams::natural(0.05);
        let sys = PerturbationSystem::new(&params, WhichPerturbation::HamiltonianP, basis(), CubicSource::Potential).unwrap();
        let e = total_energy(WhichPerturbation::HamiltonianP, &params, 2, EnergySource::Numeric(&sys)).unwrap();
        assert_eq!(e.source, EnergyRoute::Numeric);
        assert!((e.total - (e.e0 + e.e1 + e.e2)).abs() < 1e-15);
        assert!(total_energy(WhichPerturbation::ConstantOfMotionV, &params, 2, EnergySource::Numeric(&sys)).is_err());
        let k = PerturbationSystem::new(&params, WhichPerturbation::ConstantOfMotionV, basis(), CubicSource::Potential).unwrap();
        assert!(delta_e_numeric(&k, &sys, 0).is_err());
        assert!(delta_e_numeric(&sys, &k, 0).unwrap().abs() > 1e-4);
    }
}
