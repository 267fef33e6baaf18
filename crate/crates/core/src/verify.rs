//! Invariant suite run by `pdmosc verify`.
//!
//! Each [`Check`] is pass/fail. Verdicts on the published formulas live in
//! the adjudication report and never fail the suite.

use serde::{Deserialize, Serialize};

use crate::classical;
use crate::error::Result;
use crate::fock::{self, MAX_DEGREE};
use crate::model::{self, ModelParams};
use crate::oracle::{self, AdjudicationReport, AdjudicationSettings, AGREEMENT_TOL, RESIDUAL_TOL};
use crate::perturb::{self, ClosedFormVariant, PerturbationSystem};
use crate::quantize::{self, WhichPerturbation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub adjudication: AdjudicationReport,
}

impl VerifyOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const WEYL_TOL: f64 = 1e-12;
pub const FIT_E1_TOL: f64 = 1e-8;
pub const FIT_E2_TOL: f64 = 1e-6;
pub const MIN_SLOPE: f64 = 2.7;
pub const DRIFT_TOL: f64 = 1e-8;
pub const MIN_HALVING_RATIO: f64 = 16.0;
pub const MIN_GAP: f64 = 0.9;
pub const EXPANSION_EXACT_TOL: f64 = 1e-14;
pub const MIN_CUBIC_RATIO: f64 = 7.0;

/// Natural-unit checks on the Weyl forms: compact form vs the average over
/// all orderings, on the trusted block.
pub fn weyl_check(dim: usize, guard: usize) -> Result<f64> {
    let nat = ModelParams::natural(0.0);
    let trusted = dim - guard;
    let x = fock::position_op(&nat, dim)?;
    let mut worst = 0.0f64;
    for (partner, hbar_eff) in [(fock::momentum_op(&nat, dim)?, nat.hbar), (fock::velocity_op(&nat, dim)?, nat.hbar / nat.m0)] {
        let compact = quantize::weyl_xp2(&x, &partner, hbar_eff)?;
        let average = quantize::symmetrization_oracle(&[&x, &partner, &partner])?;
        worst = worst.max(compact.max_abs_diff_on(&average, trusted));
        let compact = quantize::weyl_x2p2(&x, &partner, hbar_eff)?;
        let average = quantize::symmetrization_oracle(&[&x, &x, &partner, &partner])?;
        worst = worst.max(compact.max_abs_diff_on(&average, trusted));
    }
    Ok(worst)
}

/// Max deviation of `K₀ + W_K` from exact `K`, and the smallest error ratio of
/// `H₀ + W_H` against exact `H` when `m1 x / m0` is halved, over a grid.
pub fn expansion_checks() -> Result<(f64, f64)> {
    let mut k_dev = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for m1 in [0.02, 0.05, 0.1, 0.2] {
        let full = ModelParams::natural(m1);
        let half = ModelParams::natural(m1 / 2.0);
        for i in 0..9 {
            let x = -1.0 + 0.25 * i as f64;
            for v in [-1.0, 0.5, 2.0] {
                let exact = model::classical_k_exact(&full, x, v)?;
                let split = model::classical_k0(&full, x, v) + model::classical_w_k(&full, x, v);
                k_dev = k_dev.max((exact - split).abs() / exact.abs().max(1.0));
            }
            if x == 0.0 {
                continue;
            }
            let p = 1.0;
            let err = |q: &ModelParams| -> Result<f64> {
                Ok((model::classical_h_exact(q, x, p)? - model::classical_h0(q, x, p) - model::classical_w_h(q, x, p)).abs())
            };
            min_ratio = min_ratio.min(err(&full)? / err(&half)?);
        }
    }
    Ok((k_dev, min_ratio))
}

/// Runs the adjudication and every invariant check at `params`.
pub fn run_suite(params: &ModelParams, n_max: usize, settings: &AdjudicationSettings) -> Result<VerifyOutcome> {
    let nat = params.to_natural();
    let basis = settings.basis;
    let adjudication = oracle::adjudicate(&nat, n_max, settings)?;
    let mut checks = Vec::new();

    let h0 = oracle::eigen_spectrum(&fock::h0_matrix(&ModelParams::natural(0.0), basis.dim)?)?;
    let worst = h0.values.iter().enumerate().map(|(n, e)| (e - (n as f64 + 0.5)).abs()).fold(0.0, f64::max);
    checks.push(Check::new("unperturbed spectrum is n + 1/2", worst <= 1e-12, format!("max deviation {worst:e}")));

    let weyl = weyl_check(basis.dim, basis.guard)?;
    checks.push(Check::new("Weyl forms equal ordering average", weyl <= WEYL_TOL, format!("max deviation {weyl:e}")));

    let mut first = 0.0f64;
    let mut ratio = 0.0f64;
    let hs = &adjudication.spectra[0];
    let ks = &adjudication.spectra[1];
    for (h, k) in hs.levels.iter().zip(&ks.levels) {
        first = first.max((h.e1_numeric - h.e1_closed_form).abs()).max((k.e1_numeric - k.e1_closed_form).abs());
        if h.e1_numeric != 0.0 {
            ratio = ratio.max((k.e1_numeric / h.e1_numeric - 1.0 / 3.0).abs());
        }
    }
    checks.push(Check::new("first-order closed forms", first <= AGREEMENT_TOL, format!("max deviation {first:e}")));
    checks.push(Check::new("first-order ratio K/H = 1/3", ratio <= AGREEMENT_TOL, format!("max deviation {ratio:e}")));

    let (mut e1_fit, mut e2_fit) = (0.0f64, 0.0f64);
    for f in &adjudication.fits {
        e1_fit = e1_fit.max((f.e1_fit - f.e1_numeric).abs());
        e2_fit = e2_fit.max((f.e2_fit - f.e2_numeric).abs());
    }
    checks.push(Check::new("lambda fit vs first-order sums", e1_fit <= FIT_E1_TOL, format!("max deviation {e1_fit:e}")));
    checks.push(Check::new("lambda fit vs second-order sums", e2_fit <= FIT_E2_TOL, format!("max deviation {e2_fit:e}")));

    let mut residual = 0.0f64;
    let mut gap = f64::INFINITY;
    let mut converged = true;
    for s in &adjudication.spectra {
        gap = gap.min(s.min_gap);
        converged &= s.converged.iter().all(|&c| c);
        for l in &s.levels {
            residual = residual.max(l.residual_norm / s.matrix_norm);
        }
    }
    checks.push(Check::new("eigenpair residuals", residual <= RESIDUAL_TOL, format!("max relative residual {residual:e}")));
    checks.push(Check::new("level gaps stay open", gap >= MIN_GAP, format!("min gap {gap:.6} hbar*omega")));
    checks.push(Check::new("levels converged under truncation", converged, String::new()));

    let delta = adjudication.delta.iter().map(|r| r.numeric.abs()).fold(0.0, f64::max);
    let delta_ok = nat.m1 == 0.0 || delta > 100.0 * AGREEMENT_TOL;
    checks.push(Check::new("E_H and E_K differ", delta_ok, format!("max |dE| {delta:e}")));

    let levels: Vec<usize> = (0..=n_max.min(4)).collect();
    let lambdas: Vec<f64> = (0..10).map(|i| 0.05 * (i + 1) as f64).collect();
    let mut slope = f64::INFINITY;
    if nat.m1 != 0.0 {
        for which in WhichPerturbation::BOTH {
            let corrected = adjudication.corrected_variant(which).unwrap_or(ClosedFormVariant::printed(which));
            for route in [None, Some(&corrected)] {
                for row in oracle::error_scaling(&nat, which, &levels, &lambdas, basis, settings.cubic, route)? {
                    slope = slope.min(row.slope);
                }
            }
        }
    }
    checks.push(Check::new("perturbative error order", nat.m1 == 0.0 || slope >= MIN_SLOPE, format!("min log-log slope {slope:.3}")));

    let cons = classical::conservation_check(&nat, 1.0, 0.0, 100, 1000)?;
    checks.push(Check::new("classical K drift", cons.drift <= DRIFT_TOL, format!("relative drift {:e}", cons.drift)));
    checks.push(Check::new(
        "classical drift halving",
        nat.m1 == 0.0 || cons.ratio >= MIN_HALVING_RATIO,
        format!("ratio {:.2}", cons.ratio),
    ));

    let (k_dev, cubic_ratio) = expansion_checks()?;
    checks.push(Check::new("K expansion is exact", k_dev <= EXPANSION_EXACT_TOL, format!("max deviation {k_dev:e}")));
    checks.push(Check::new("H expansion error is cubic", cubic_ratio >= MIN_CUBIC_RATIO, format!("min halving ratio {cubic_ratio:.3}")));

    let mut identity = 0.0f64;
    for i in 0..9 {
        let x = -1.0 + 0.25 * i as f64;
        for v in [-1.5, 0.3, 1.0] {
            let p = model::momentum_from_velocity(&nat, x, v)?;
            let k = model::classical_k_exact(&nat, x, v)?;
            identity = identity.max((k - model::classical_h_exact(&nat, x, p)?).abs() / k.abs().max(1.0));
        }
    }
    checks.push(Check::new("K(x, v) = H(x, m^2 v / m0)", identity <= 4.0 * f64::EPSILON, format!("max deviation {identity:e}")));

    let sys = PerturbationSystem::new(&nat, WhichPerturbation::HamiltonianP, basis, settings.cubic)?;
    let top = sys.max_level().unwrap_or(0);
    let band = perturb::second_order_terms(&sys.w, &nat, &basis, top)?
        .iter()
        .all(|&(m, c)| m.abs_diff(top) <= MAX_DEGREE || c == 0.0);
    checks.push(Check::new("second-order couplings are band-limited", band, String::new()));

    Ok(VerifyOutcome { checks, adjudication })
}
