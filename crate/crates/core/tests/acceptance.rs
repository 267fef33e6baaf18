//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach the test log; exits nonzero on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pdmosc::classical;
use pdmosc::cli::{self, Cli, Command, RunConfig};
use pdmosc::fock::{self, FockBasisSpec};
use pdmosc::model::{self, derive_constants, ModelParams};
use pdmosc::oracle::{self, AdjudicationSettings, Outcome};
use pdmosc::perturb::{ClosedFormVariant, PerturbationSystem};
use pdmosc::quantize::{self, CubicSource, WhichPerturbation};

use clap::Parser;

const N: usize = 64;
const GUARD: usize = 8;
const M1: f64 = 0.05;

struct Line {
    id: u32,
    passed: bool,
    text: String,
}

fn config(args: &[&str]) -> RunConfig {
    let cli = Cli::try_parse_from(std::iter::once("pdmosc").chain(args.iter().copied())).unwrap();
    match &cli.command {
        Command::Spectrum(a) | Command::Delta(a) => RunConfig::from_args(a).unwrap(),
        _ => unreachable!(),
    }
}

/// Unperturbed levels come out as ħω(n + ½) for n = 0..10, within 1 s.
fn criterion_1() -> Line {
    let start = Instant::now();
    let out = cli::spectrum_output(&config(&["spectrum", "--m1", "0", "--n-max", "10"])).unwrap();
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    for r in &out.rows {
        let expected = r.n as f64 + 0.5;
        for v in [r.e_h_total, r.e_k_total, r.e_h_exact, r.e_k_exact] {
            worst = worst.max((v - expected).abs() / expected);
        }
    }
    let passed = out.rows.len() == 11 && worst <= 1e-12 && elapsed < Duration::from_secs(1);
    Line { id: 1, passed, text: format!("unperturbed spectrum: max rel dev {worst:e} (<= 1e-12), {elapsed:.2?} (< 1 s)") }
}

/// Compact Weyl forms equal the average over all orderings on the trusted block.
fn criterion_2() -> Line {
    let nat = ModelParams::natural(0.0);
    let x = fock::position_op(&nat, N).unwrap();
    let mut worst = 0.0f64;
    for (k, hbar_eff) in [(fock::momentum_op(&nat, N).unwrap(), 1.0), (fock::velocity_op(&nat, N).unwrap(), 1.0)] {
        let a = quantize::weyl_xp2(&x, &k, hbar_eff).unwrap();
        let b = quantize::symmetrization_oracle(&[&x, &k, &k]).unwrap();
        worst = worst.max(a.max_abs_diff_on(&b, N - GUARD));
        let a = quantize::weyl_x2p2(&x, &k, hbar_eff).unwrap();
        let b = quantize::symmetrization_oracle(&[&x, &x, &k, &k]).unwrap();
        worst = worst.max(a.max_abs_diff_on(&b, N - GUARD));
    }
    Line { id: 2, passed: worst <= 1e-12, text: format!("Weyl forms vs ordering average, N = {N}: max dev {worst:e} (<= 1e-12)") }
}

/// Diagonal elements against the first-order closed forms, written out here.
fn criterion_3() -> Line {
    let params = ModelParams::natural(M1);
    let basis = FockBasisSpec::new(N, GUARD).unwrap();
    let sigma = 1.5 * M1 * M1;
    let h = PerturbationSystem::new(&params, WhichPerturbation::HamiltonianP, basis, CubicSource::Potential).unwrap();
    let k = PerturbationSystem::new(&params, WhichPerturbation::ConstantOfMotionV, basis, CubicSource::Potential).unwrap();
    let (mut dev, mut ratio) = (0.0f64, 0.0f64);
    for n in 0..=6 {
        let nf = n as f64;
        let expected_h = sigma * ((2.0 * nf * nf + 2.0 * nf - 1.0) / 4.0 + 0.5);
        let (eh, ek) = (h.first_order(n).unwrap(), k.first_order(n).unwrap());
        dev = dev.max((eh - expected_h).abs()).max((ek - expected_h / 3.0).abs());
        ratio = ratio.max((ek / eh - 1.0 / 3.0).abs());
    }
    let passed = dev <= 1e-10 && ratio <= 1e-10;
    Line { id: 3, passed, text: format!("first order, n = 0..6: max dev {dev:e}, ratio dev {ratio:e} (<= 1e-10)") }
}

/// Second-order sums against the λ-fit, and a complete, self-consistent adjudication.
fn criterion_4() -> Line {
    let params = ModelParams::natural(M1);
    let settings = AdjudicationSettings::new(N, GUARD).unwrap();
    let levels: Vec<usize> = (0..=4).collect();
    let mut fit_dev = 0.0f64;
    for which in WhichPerturbation::BOTH {
        let sys = PerturbationSystem::new(&params, which, settings.basis, CubicSource::Potential).unwrap();
        let fits = oracle::extract_pt_orders(&params, which, &levels, &settings.lambda_grid, N, GUARD, CubicSource::Potential).unwrap();
        for f in fits {
            fit_dev = fit_dev.max((f.e2_fit - sys.second_order(f.n).unwrap()).abs());
        }
    }

    let report = oracle::adjudicate(&params, 6, &settings).unwrap();
    let mut consistent = true;
    let mut slots = 0;
    for which in WhichPerturbation::BOTH {
        let Some(corrected) = report.corrected.iter().find(|c| c.which == which) else {
            consistent = false;
            continue;
        };
        consistent &= corrected.max_deviation <= oracle::AGREEMENT_TOL;
        let printed = ClosedFormVariant::printed(which);
        for v in report.verdicts.iter().filter(|v| v.which == Some(which)) {
            let kept = match v.question.as_str() {
                q if q.contains("|dn|=3") => Some(corrected.variant.triple_step_sign == printed.triple_step_sign),
                q if q.contains("sign of m1*beta in the |dn|=1") => Some(corrected.variant.single_step_sign == printed.single_step_sign),
                q if q.contains("leading power") => Some(corrected.variant.single_step_power == printed.single_step_power),
                q if q.contains("sigma divisor") => Some(corrected.variant.quartic_divisor == printed.quartic_divisor),
                _ => None,
            };
            slots += usize::from(kept.is_some());
            consistent &= match (v.outcome, kept) {
                (Outcome::PrintedConfirmed, Some(k)) => k,
                (Outcome::PrintedRefuted, Some(k)) => !k,
                (Outcome::PrintedConfirmed, None) => v.printed_deviation <= oracle::AGREEMENT_TOL,
                (Outcome::PrintedRefuted, None) => v.alternative_deviation <= oracle::AGREEMENT_TOL,
                (Outcome::Indeterminate, _) => true,
                (Outcome::Unresolved, _) => false,
            };
        }
    }

    // corrected second-order H written out: (η + m1β)² in the triple-step slot
    let c = derive_constants(&params);
    let mut derived = 0.0f64;
    for n in 0..=6 {
        let nf = n as f64;
        let e2 = -((c.eta + M1 * c.beta).powi(2) * (3.0 * nf * nf + 3.0 * nf + 2.0)
            + (3.0 * c.eta - M1 * c.beta).powi(2) * (3.0 * nf * nf + 3.0 * nf + 1.0)
            + (c.sigma / 4.0).powi(2) * (4.0 * nf.powi(3) + 6.0 * nf * nf + 14.0 * nf + 6.0));
        derived = derived.max((report.spectra[0].levels[n].e2_numeric - e2).abs());
    }
    consistent &= derived <= oracle::AGREEMENT_TOL;

    let json = serde_json::to_string(&report).unwrap();
    let back: oracle::AdjudicationReport = serde_json::from_str(&json).unwrap();
    consistent &= back == report;

    let passed = fit_dev <= 1e-6 && consistent && slots == 8;
    Line {
        id: 4,
        passed,
        text: format!("second order vs lambda fit, n = 0..4: max dev {fit_dev:e} (<= 1e-6); {slots} second-order slot verdicts, consistent = {consistent}"),
    }
}

/// Error of second-order energies against exact levels scales at least as λ^2.7.
fn criterion_5(corrected_h: ClosedFormVariant) -> (Line, String) {
    let start = Instant::now();
    let params = ModelParams::natural(M1);
    let basis = FockBasisSpec::new(N, GUARD).unwrap();
    let levels: Vec<usize> = (0..=4).collect();
    let lambdas: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
    let mut worst = f64::INFINITY;
    for which in WhichPerturbation::BOTH {
        let closed = match which {
            WhichPerturbation::HamiltonianP => corrected_h,
            WhichPerturbation::ConstantOfMotionV => ClosedFormVariant::printed(which),
        };
        for route in [None, Some(&closed)] {
            for row in oracle::error_scaling(&params, which, &levels, &lambdas, basis, CubicSource::Potential, route).unwrap() {
                worst = worst.min(row.slope);
            }
        }
    }
    let printed_h = ClosedFormVariant::printed(WhichPerturbation::HamiltonianP);
    let printed_slope = oracle::error_scaling(&params, WhichPerturbation::HamiltonianP, &levels, &lambdas, basis, CubicSource::Potential, Some(&printed_h))
        .unwrap()
        .iter()
        .map(|r| r.slope)
        .fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    (
        Line {
            id: 5,
            passed: worst >= 2.7 && elapsed < Duration::from_secs(30),
            text: format!("error order, lambda in [0.05, 0.5], n = 0..4, numeric and closed form: min slope {worst:.3} (>= 2.7), {elapsed:.2?} (< 30 s)"),
        },
        format!("published H closed form, before adjudication: min slope {printed_slope:.3}"),
    )
}

/// The two quantizations give different levels; the figure dataset is emitted.
fn criterion_6() -> Line {
    let params = ModelParams::natural(M1);
    let basis = FockBasisSpec::new(N, GUARD).unwrap();
    let h = PerturbationSystem::new(&params, WhichPerturbation::HamiltonianP, basis, CubicSource::Potential).unwrap();
    let k = PerturbationSystem::new(&params, WhichPerturbation::ConstantOfMotionV, basis, CubicSource::Potential).unwrap();
    let max_delta = (0..=6)
        .map(|n| (h.energy(n).unwrap().total - k.energy(n).unwrap().total).abs())
        .fold(0.0, f64::max);
    let fig = cli::delta_output(&config(&["delta", "--units", "si"])).unwrap();
    let shaped = fig.m1_from_tolerance && fig.rows.len() == 7 && fig.rows.iter().skip(1).all(|r| r.numeric != 0.0);
    let passed = max_delta > 100.0 * oracle::AGREEMENT_TOL && shaped;
    Line {
        id: 6,
        passed,
        text: format!(
            "E_H != E_K: max |dE| {max_delta:e} (> {:e}); figure dataset at m1' = {} with {} rows",
            100.0 * oracle::AGREEMENT_TOL,
            fig.m1_dimensionless,
            fig.rows.len()
        ),
    }
}

/// K conserved along the Hamiltonian flow; drift shrinks by at least 16 on halving the step.
fn criterion_7() -> Line {
    let start = Instant::now();
    let check = classical::conservation_check(&ModelParams::natural(M1), 1.0, 0.0, 100, 1000).unwrap();
    let elapsed = start.elapsed();
    let passed = check.drift <= 1e-8 && check.ratio >= 16.0 && elapsed < Duration::from_secs(10);
    Line {
        id: 7,
        passed,
        text: format!("classical drift {:e} (<= 1e-8), halving ratio {:.2} (>= 16), {elapsed:.2?} (< 10 s)", check.drift, check.ratio),
    }
}

/// K₀ + W_K reproduces K exactly; H₀ + W_H misses H at third order.
fn criterion_8() -> Line {
    let mut k_dev = 0.0f64;
    let mut ratio = f64::INFINITY;
    for m1 in [0.01, 0.05, 0.1, 0.2] {
        let p = ModelParams::natural(m1);
        let half = ModelParams::natural(m1 / 2.0);
        for i in 0..=10 {
            let x = -1.0 + 0.2 * i as f64;
            // the same samples serve as v for K and as p for H
            for v in [-2.0, -0.5, 0.7, 1.5] {
                let exact = model::classical_k_exact(&p, x, v).unwrap();
                k_dev = k_dev.max((exact - model::classical_k0(&p, x, v) - model::classical_w_k(&p, x, v)).abs() / exact.abs().max(1.0));
                if x.abs() < 1e-12 {
                    continue;
                }
                let err = |q: &ModelParams| {
                    (model::classical_h_exact(q, x, v).unwrap() - model::classical_h0(q, x, v) - model::classical_w_h(q, x, v)).abs()
                };
                ratio = ratio.min(err(&p) / err(&half));
            }
        }
    }
    let passed = k_dev <= 1e-14 && ratio >= 7.0;
    Line { id: 8, passed, text: format!("K expansion dev {k_dev:e} (<= 1e-14); H expansion halving ratio {ratio:.3} (>= 7)") }
}

fn main() -> ExitCode {
    let settings = AdjudicationSettings::new(N, GUARD).unwrap();
    let report = oracle::adjudicate(&ModelParams::natural(M1), 6, &settings).unwrap();
    let corrected_h = report
        .corrected_variant(WhichPerturbation::HamiltonianP)
        .unwrap_or(ClosedFormVariant::printed(WhichPerturbation::HamiltonianP));

    let (c5, c5_info) = criterion_5(corrected_h);
    let lines = [criterion_1(), criterion_2(), criterion_3(), criterion_4(), c5, criterion_6(), criterion_7(), criterion_8()];
    let mut failed = 0;
    for l in &lines {
        let tag = if l.passed { "PASS" } else { "FAIL" };
        if !l.passed {
            failed += 1;
        }
        println!("[{tag}] criterion {}: {}", l.id, l.text);
    }
    println!("       info: {c5_info}");
    for v in &report.verdicts {
        let which = v.which.map_or("H-K", |w| w.label());
        println!("       verdict [{which}] {}: {:?} (printed dev {:e}, alternative dev {:e})", v.question, v.outcome, v.printed_deviation, v.alternative_deviation);
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
