//! Command implementations behind the `pdmosc` binary.
//!
//! All quantum computations run in natural units; SI runs convert the
//! mass gradient on the way in and multiply energies by `ħω` on the way out.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::classical::{self, TrajectoryState};
use crate::error::Error;
use crate::fock::{FockBasisSpec, DEFAULT_GUARD};
use crate::model::{self, DerivedConstants, ModelParams, Units, HBAR_SI};
use crate::oracle::{self, AdjudicationSettings, SpectrumReport, DEFAULT_LAMBDA_GRID};
use crate::perturb::{self, PerturbationSystem};
use crate::quantize::{CubicSource, WhichPerturbation};
use crate::verify::{self, VerifyOutcome};

pub const DEFAULT_M1: f64 = 0.05;
pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_N_MAX: usize = 6;
/// Figure parameters: `m0` in kg and `ω` in rad/s.
pub const FIGURE_M0: f64 = 1e-17;
pub const FIGURE_OMEGA: f64 = 1e10;
/// Perturbative corrections must stay below this fraction of `E⁰ₙ`.
pub const TOLERANCE_FRACTION: f64 = 0.01;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  invalid configuration (parameters, truncation, unwritable output)
  3  convergence failure (truncation or polynomial fit)
  4  internal error or failed invariant check

Environment:
  PDMOSC_SEED  reserved; ignored, every command is deterministic";

#[derive(Debug, Parser)]
#[command(name = "pdmosc", version, about = "Oscillator with linearly position-dependent mass: two quantizations, cross-checked", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perturbative and exact levels of both quantizations
    Spectrum(CommonArgs),
    /// Level-by-level energy difference E_H - E_K
    Delta(CommonArgs),
    /// Adjudication report and invariant suite
    Verify(CommonArgs),
    /// Classical trajectory with conserved-quantity columns
    Classical(ClassicalArgs),
    /// Derived constants
    Constants(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Natural,
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OmegaConvention {
    /// --omega is an angular frequency
    #[value(name = "rad_s")]
    RadPerSecond,
    /// --omega is a frequency in Hz, multiplied by 2 pi
    #[value(name = "hz_times_2pi")]
    HzTimes2Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum M1Mode {
    /// --m1 in mass per length
    Absolute,
    /// --m1 in units of m0 / sqrt(hbar / m0 omega)
    Dimensionless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CubicSourceArg {
    /// m1 w^2 / 3, from the classical potential
    #[value(name = "eq8b")]
    Potential,
    /// m1 w^2 / (3 m0)
    #[value(name = "eq26")]
    MassScaled,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Constant part of the mass (SI only; kg)
    #[arg(long, allow_negative_numbers = true)]
    pub m0: Option<f64>,
    /// Mass gradient; see --m1-mode
    #[arg(long, allow_negative_numbers = true)]
    pub m1: Option<f64>,
    /// Oscillator frequency (SI only); see --omega-convention
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Reduced Planck constant (SI only)
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long, value_enum, default_value = "natural")]
    pub units: UnitsArg,
    /// Fock-space truncation
    #[arg(long = "N", default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    /// Top levels excluded from the trusted block
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    pub guard: usize,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub n_max: usize,
    /// Comma-separated perturbation strengths for the order fits
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDA_GRID.to_vec())]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rad_s")]
    pub omega_convention: OmegaConvention,
    #[arg(long, value_enum, default_value = "dimensionless")]
    pub m1_mode: M1Mode,
    /// Coefficient of x^3 in the constant-of-motion operator
    #[arg(long, value_enum, default_value = "eq8b")]
    pub w_cubic_source: CubicSourceArg,
}

#[derive(Debug, Clone, Args)]
pub struct ClassicalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial position
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub x0: f64,
    /// Initial canonical momentum
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub p0: f64,
    #[arg(long, default_value_t = 100)]
    pub periods: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps_per_period: usize,
}

/// Validated settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Parameters in the requested units.
    pub params: ModelParams,
    /// The same system in natural units; every quantum computation uses this.
    pub natural: ModelParams,
    /// Whether the mass gradient was given rather than defaulted.
    pub m1_given: bool,
    pub basis: FockBasisSpec,
    pub n_max: usize,
    pub lambda_grid: Vec<f64>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub cubic: CubicSource,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Checks(String),
    /// Output was written but some levels failed the truncation test.
    #[error("levels {0:?} not converged under truncation")]
    Unconverged(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                Error::InvalidParams(_) | Error::Size(_) | Error::Truncation { .. } | Error::Domain { .. } => 2,
                Error::NotConverged { .. } | Error::Fit(_) => 3,
                Error::NotHermitian { .. } | Error::Step { .. } | Error::NotFound(_) => 4,
            },
            CliError::Io(_) => 2,
            CliError::Unconverged(_) => 3,
            CliError::Json(_) | CliError::Checks(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> CliResult<Self> {
        let m1 = args.m1.unwrap_or(DEFAULT_M1);
        let (params, natural) = match args.units {
            UnitsArg::Natural => {
                for (name, v) in [("m0", args.m0), ("omega", args.omega), ("hbar", args.hbar)] {
                    if v.is_some_and(|v| v != 1.0) {
                        return Err(Error::InvalidParams(format!("--{name} must be 1 (or omitted) in natural units")).into());
                    }
                }
                let p = ModelParams::natural(m1);
                p.validate()?;
                (p, p)
            }
            UnitsArg::Si => {
                let m0 = args.m0.unwrap_or(FIGURE_M0);
                let omega = match args.omega_convention {
                    OmegaConvention::RadPerSecond => args.omega.unwrap_or(FIGURE_OMEGA),
                    OmegaConvention::HzTimes2Pi => 2.0 * std::f64::consts::PI * args.omega.unwrap_or(FIGURE_OMEGA),
                };
                let hbar = args.hbar.unwrap_or(HBAR_SI);
                let base = ModelParams::si(m0, 0.0, omega, hbar)?;
                let (m1_si, m1_nat) = match args.m1_mode {
                    M1Mode::Dimensionless => (m1 * m0 / base.length_scale(), m1),
                    M1Mode::Absolute => {
                        let p = base.with_m1(m1);
                        (m1, p.m1_dimensionless())
                    }
                };
                let p = base.with_m1(m1_si);
                p.validate()?;
                (p, ModelParams::natural(m1_nat))
            }
        };
        if !args.lambda_grid.iter().all(|l| l.is_finite() && *l > 0.0 && *l <= 1.0) || args.lambda_grid.len() < 5 {
            return Err(Error::InvalidParams("--lambda-grid needs at least 5 values in (0, 1]".into()).into());
        }
        let basis = FockBasisSpec::new(args.dim, args.guard)?;
        let config = RunConfig {
            params,
            natural,
            m1_given: args.m1.is_some(),
            basis,
            n_max: args.n_max,
            lambda_grid: args.lambda_grid.clone(),
            format: args.format,
            out: args.out.clone(),
            cubic: match args.w_cubic_source {
                CubicSourceArg::Potential => CubicSource::Potential,
                CubicSourceArg::MassScaled => CubicSource::MassScaled,
            },
        };
        config.check_levels(config.n_max)?;
        Ok(config)
    }

    fn check_levels(&self, n_max: usize) -> CliResult<()> {
        let room = self.basis.trusted().checked_sub(crate::fock::MAX_DEGREE + 1);
        if room.is_none_or(|top| top < n_max) {
            return Err(Error::Truncation { n: n_max, dim: self.basis.dim, guard: self.basis.guard }.into());
        }
        Ok(())
    }

    fn settings(&self) -> CliResult<AdjudicationSettings> {
        let mut s = AdjudicationSettings::new(self.basis.dim, self.basis.guard)?;
        s.lambda_grid = self.lambda_grid.clone();
        s.cubic = self.cubic;
        Ok(s)
    }

    /// Natural energies are multiplied by this on output.
    pub fn energy_factor(&self) -> f64 {
        self.params.energy_scale()
    }

    pub fn energy_unit(&self) -> &'static str {
        match self.params.units {
            Units::Natural => "hbar*omega",
            Units::Si => "J",
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn emit(config: &RunConfig, text: &str) -> CliResult<()> {
    match &config.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub e0: f64,
    #[serde(rename = "eH1")]
    pub e_h1: f64,
    #[serde(rename = "eH2")]
    pub e_h2: f64,
    #[serde(rename = "eH_total")]
    pub e_h_total: f64,
    #[serde(rename = "eK1")]
    pub e_k1: f64,
    #[serde(rename = "eK2")]
    pub e_k2: f64,
    #[serde(rename = "eK_total")]
    pub e_k_total: f64,
    #[serde(rename = "eH_exact")]
    pub e_h_exact: f64,
    #[serde(rename = "eK_exact")]
    pub e_k_exact: f64,
}

pub const SPECTRUM_HEADER: &str = "n,e0,eH1,eH2,eH_total,eK1,eK2,eK_total,eH_exact,eK_exact";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOutput {
    pub energy_unit: String,
    pub rows: Vec<SpectrumRow>,
    /// Natural-unit reports behind the rows.
    pub hamiltonian: SpectrumReport,
    pub constant_of_motion: SpectrumReport,
}

pub fn spectrum_output(config: &RunConfig) -> CliResult<SpectrumOutput> {
    let settings = config.settings()?;
    let h = oracle::spectrum_report(&config.natural, WhichPerturbation::HamiltonianP, config.n_max, &settings)?;
    let k = oracle::spectrum_report(&config.natural, WhichPerturbation::ConstantOfMotionV, config.n_max, &settings)?;
    let f = config.energy_factor();
    let rows = h
        .levels
        .iter()
        .zip(&k.levels)
        .map(|(a, b)| SpectrumRow {
            n: a.n,
            e0: perturb::e0(&config.natural, a.n) * f,
            e_h1: a.e1_numeric * f,
            e_h2: a.e2_numeric * f,
            e_h_total: a.e_numeric_pt * f,
            e_k1: b.e1_numeric * f,
            e_k2: b.e2_numeric * f,
            e_k_total: b.e_numeric_pt * f,
            e_h_exact: a.e_exact_diag * f,
            e_k_exact: b.e_exact_diag * f,
        })
        .collect();
    Ok(SpectrumOutput { energy_unit: config.energy_unit().into(), rows, hamiltonian: h, constant_of_motion: k })
}

pub fn spectrum_csv(out: &SpectrumOutput) -> String {
    let mut s = format!("{SPECTRUM_HEADER}\n");
    for r in &out.rows {
        let vals = [r.e0, r.e_h1, r.e_h2, r.e_h_total, r.e_k1, r.e_k2, r.e_k_total, r.e_h_exact, r.e_k_exact];
        s.push_str(&r.n.to_string());
        for v in vals {
            s.push(',');
            s.push_str(&fmt(v));
        }
        s.push('\n');
    }
    s
}

fn unconverged(reports: &[&SpectrumReport]) -> Vec<String> {
    let mut out = Vec::new();
    for r in reports {
        for (l, ok) in r.levels.iter().zip(&r.converged) {
            if !ok {
                out.push(format!("{}{}", r.which.label(), l.n));
            }
        }
    }
    out
}

pub fn cmd_spectrum(config: &RunConfig) -> CliResult<()> {
    let out = spectrum_output(config)?;
    let text = match config.format {
        OutputFormat::Csv => spectrum_csv(&out),
        OutputFormat::Json => serde_json::to_string_pretty(&out)? + "\n",
    };
    emit(config, &text)?;
    let bad = unconverged(&[&out.hamiltonian, &out.constant_of_motion]);
    if bad.is_empty() { Ok(()) } else { Err(CliError::Unconverged(bad)) }
}

/// Whether both quantizations keep `|E⁽¹⁾ + E⁽²⁾| ≤ 1% · E⁰ₙ` for `n ≤ n_max`
/// at the dimensionless gradient `m1`.
fn within_tolerance(m1: f64, n_max: usize, basis: FockBasisSpec, cubic: CubicSource) -> crate::Result<bool> {
    let params = ModelParams::natural(m1);
    for which in WhichPerturbation::BOTH {
        let sys = PerturbationSystem::new(&params, which, basis, cubic)?;
        for n in 0..=n_max {
            let e = sys.energy(n)?;
            if (e.e1 + e.e2).abs() > TOLERANCE_FRACTION * e.e0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Largest dimensionless gradient, to three significant digits, for which
/// the perturbative corrections stay within 1% of the unperturbed levels.
/// The result passes the criterion and 1.1 times it fails.
pub fn max_m1_for_tolerance(n_max: usize, basis: FockBasisSpec, cubic: CubicSource) -> crate::Result<f64> {
    let ok = |m1: f64| within_tolerance(m1, n_max, basis, cubic);
    let mut hi = 1e-3;
    while ok(hi)? {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::NotFound("criterion holds for every gradient tried".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-5 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? { lo = mid } else { hi = mid }
    }
    if lo == 0.0 {
        return Err(Error::NotFound("criterion fails for every positive gradient".into()));
    }
    // round down to three significant digits
    let scale = 10f64.powi(2 - lo.log10().floor() as i32);
    let m1 = (lo * scale).floor() / scale;
    if !ok(m1)? || ok(1.1 * m1)? {
        return Err(Error::NotFound(format!("gradient {m1} fails the post-check")));
    }
    Ok(m1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub n: usize,
    #[serde(rename = "deltaE_numeric")]
    pub numeric: f64,
    #[serde(rename = "deltaE_closed_form")]
    pub closed_form: f64,
}

pub const DELTA_HEADER: &str = "n,deltaE_numeric,deltaE_closed_form";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaOutput {
    pub params: ModelParams,
    pub m1_dimensionless: f64,
    /// The gradient came from the 1% rule rather than the command line.
    pub m1_from_tolerance: bool,
    pub energy_unit: String,
    pub rows: Vec<DeltaRow>,
}

pub fn delta_output(config: &RunConfig) -> CliResult<DeltaOutput> {
    let mut config = config.clone();
    if !config.m1_given {
        let m1 = max_m1_for_tolerance(config.n_max, config.basis, config.cubic)?;
        config.natural = ModelParams::natural(m1);
        config.params = match config.params.units {
            Units::Natural => config.natural,
            Units::Si => config.params.with_m1(m1 * config.params.m0 / config.params.length_scale()),
        };
    }
    let nat = config.natural;
    let h = PerturbationSystem::new(&nat, WhichPerturbation::HamiltonianP, config.basis, config.cubic)?;
    let k = PerturbationSystem::new(&nat, WhichPerturbation::ConstantOfMotionV, config.basis, config.cubic)?;
    let f = config.energy_factor();
    let rows = (0..=config.n_max)
        .map(|n| {
            Ok(DeltaRow {
                n,
                numeric: perturb::delta_e_numeric(&h, &k, n)? * f,
                closed_form: perturb::delta_e_printed(&nat, n) * f,
            })
        })
        .collect::<crate::Result<_>>()?;
    Ok(DeltaOutput {
        params: config.params,
        m1_dimensionless: nat.m1,
        m1_from_tolerance: !config.m1_given,
        energy_unit: config.energy_unit().into(),
        rows,
    })
}

pub fn cmd_delta(config: &RunConfig) -> CliResult<()> {
    let out = delta_output(config)?;
    let text = match config.format {
        OutputFormat::Csv => {
            let mut s = format!("{DELTA_HEADER}\n");
            for r in &out.rows {
                s.push_str(&format!("{},{},{}\n", r.n, fmt(r.numeric), fmt(r.closed_form)));
            }
            s
        }
        OutputFormat::Json => serde_json::to_string_pretty(&out)? + "\n",
    };
    emit(config, &text)
}

pub fn cmd_verify(config: &RunConfig) -> CliResult<VerifyOutcome> {
    let settings = config.settings()?;
    let outcome = verify::run_suite(&config.natural, config.n_max, &settings)?;
    let text = match config.format {
        OutputFormat::Json => serde_json::to_string_pretty(&outcome)? + "\n",
        OutputFormat::Csv => {
            let mut s = String::from("kind,name,result,detail\n");
            for c in &outcome.checks {
                let result = if c.passed { "pass" } else { "FAIL" };
                s.push_str(&format!("check,\"{}\",{result},\"{}\"\n", c.name, c.detail));
            }
            for v in &outcome.adjudication.verdicts {
                let tag = v.which.map_or("H-K", |w| w.label());
                let result = serde_json::to_value(v.outcome)?;
                s.push_str(&format!(
                    "verdict,\"[{tag}] {}\",{},\"printed {} (dev {:e}); alternative {} (dev {:e})\"\n",
                    v.question,
                    result.as_str().unwrap_or_default(),
                    v.printed,
                    v.printed_deviation,
                    v.alternative,
                    v.alternative_deviation
                ));
            }
            s
        }
    };
    emit(config, &text)?;
    if outcome.all_passed() {
        Ok(outcome)
    } else {
        let failed: Vec<&str> = outcome.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Checks(format!("failed checks: {}", failed.join(", "))))
    }
}

pub fn classical_trajectory(config: &RunConfig, args: &ClassicalArgs) -> CliResult<Vec<TrajectoryState>> {
    if args.steps_per_period == 0 {
        return Err(Error::InvalidParams("--steps-per-period must be positive".into()).into());
    }
    let dt = classical::period(&config.params) / args.steps_per_period as f64;
    Ok(classical::integrate(&config.params, args.x0, args.p0, dt, args.periods * args.steps_per_period)?)
}

pub fn cmd_classical(config: &RunConfig, args: &ClassicalArgs) -> CliResult<()> {
    let traj = classical_trajectory(config, args)?;
    let text = match config.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            classical::write_csv(&mut buf, &traj)?;
            String::from_utf8(buf).expect("ascii output")
        }
        OutputFormat::Json => serde_json::to_string(&traj)? + "\n",
    };
    emit(config, &text)?;
    eprintln!("relative K drift: {:e}", classical::relative_k_drift(&traj));
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsOutput {
    pub params: ModelParams,
    pub m1_dimensionless: f64,
    pub length_scale: f64,
    pub energy_scale: f64,
    pub constants: DerivedConstants,
}

pub fn constants_output(config: &RunConfig) -> ConstantsOutput {
    ConstantsOutput {
        params: config.params,
        m1_dimensionless: config.natural.m1,
        length_scale: config.params.length_scale(),
        energy_scale: config.params.energy_scale(),
        constants: model::derive_constants(&config.params),
    }
}

pub fn cmd_constants(config: &RunConfig) -> CliResult<()> {
    let out = constants_output(config);
    let text = match config.format {
        OutputFormat::Json => serde_json::to_string_pretty(&out)? + "\n",
        OutputFormat::Csv => {
            let c = &out.constants;
            let p = &out.params;
            let rows = [
                ("m0", p.m0),
                ("m1", p.m1),
                ("omega", p.omega),
                ("hbar", p.hbar),
                ("m1_dimensionless", out.m1_dimensionless),
                ("length_scale", out.length_scale),
                ("energy_scale", out.energy_scale),
                ("sigma", c.sigma),
                ("beta", c.beta),
                ("eta", c.eta),
                ("alpha", c.alpha),
                ("k", c.k),
            ];
            let mut s = String::from("name,value\n");
            for (name, v) in rows {
                s.push_str(&format!("{name},{}\n", fmt(v)));
            }
            s
        }
    };
    emit(config, &text)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(&RunConfig::from_args(a)?),
        Command::Delta(a) => cmd_delta(&RunConfig::from_args(a)?),
        Command::Verify(a) => cmd_verify(&RunConfig::from_args(a)?).map(|_| ()),
        Command::Classical(a) => cmd_classical(&RunConfig::from_args(&a.common)?, a),
        Command::Constants(a) => cmd_constants(&RunConfig::from_args(a)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("pdmosc").chain(args.iter().copied())).unwrap()
    }

    fn common(cli: &Cli) -> &CommonArgs {
        match &cli.command {
            Command::Spectrum(a) | Command::Delta(a) | Command::Verify(a) | Command::Constants(a) => a,
            Command::Classical(a) => &a.common,
        }
    }

    #[test]
    fn defaults() {
        let cli = parse(&["spectrum"]);
        let c = RunConfig::from_args(common(&cli)).unwrap();
        assert_eq!(c.natural, ModelParams::natural(DEFAULT_M1));
        assert_eq!(c.basis, FockBasisSpec::new(64, 8).unwrap());
        assert_eq!(c.n_max, 6);
        assert_eq!(c.lambda_grid, DEFAULT_LAMBDA_GRID.to_vec());
        assert_eq!(c.cubic, CubicSource::Potential);
        assert!(!c.m1_given);
    }

    #[test]
    fn flag_values() {
        let cli = parse(&["delta", "--N", "40", "--w-cubic-source", "eq26", "--lambda-grid", "0.1,0.2,0.3,0.4,0.5,0.6", "--m1", "-0.02"]);
        let c = RunConfig::from_args(common(&cli)).unwrap();
        assert_eq!(c.basis.dim, 40);
        assert_eq!(c.cubic, CubicSource::MassScaled);
        assert_eq!(c.lambda_grid.len(), 6);
        assert_eq!(c.natural.m1, -0.02);
        assert!(Cli::try_parse_from(["pdmosc", "spectrum", "--w-cubic-source", "other"]).is_err());
    }

    #[test]
    fn si_conversion() {
        let cli = parse(&["constants", "--units", "si", "--m1", "0.05"]);
        let c = RunConfig::from_args(common(&cli)).unwrap();
        assert_eq!(c.params.m0, FIGURE_M0);
        assert_eq!(c.params.omega, FIGURE_OMEGA);
        assert_eq!(c.natural.m1, 0.05);
        assert!((c.params.m1_dimensionless() - 0.05).abs() < 1e-15);

        let hz = parse(&["constants", "--units", "si", "--omega", "1e10", "--omega-convention", "hz_times_2pi"]);
        let c = RunConfig::from_args(common(&hz)).unwrap();
        assert!((c.params.omega - 2.0 * std::f64::consts::PI * 1e10).abs() < 1.0);

        let abs = parse(&["constants", "--units", "si", "--m1-mode", "absolute", "--m1", "1e-9"]);
        let c = RunConfig::from_args(common(&abs)).unwrap();
        assert_eq!(c.params.m1, 1e-9);
        assert_eq!(c.natural.m1, c.params.m1_dimensionless());
    }

    #[test]
    fn config_errors_map_to_exit_two() {
        for args in [
            vec!["spectrum", "--m0", "2"],
            vec!["spectrum", "--N", "8"],
            vec!["spectrum", "--n-max", "60"],
            vec!["spectrum", "--lambda-grid", "0.1,0.2"],
            vec!["spectrum", "--units", "si", "--m0", "-1"],
        ] {
            let cli = parse(&args);
            let err = RunConfig::from_args(common(&cli)).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{args:?}");
        }
        assert_eq!(CliError::from(Error::NotConverged { n: 0, estimate: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::Checks(String::new()).exit_code(), 4);
    }

    #[test]
    fn unperturbed_spectrum_rows() {
        let cli = parse(&["spectrum", "--m1", "0", "--n-max", "10"]);
        let c = RunConfig::from_args(common(&cli)).unwrap();
        let out = spectrum_output(&c).unwrap();
        for r in &out.rows {
            assert_eq!(r.e_h_total, r.e0);
            assert_eq!(r.e_k_total, r.e0);
            assert_eq!(r.e_h_exact, r.e0);
        }
    }

    #[test]
    fn tolerance_gradient() {
        let basis = FockBasisSpec::new(64, 8).unwrap();
        assert!(within_tolerance(0.0, 6, basis, CubicSource::Potential).unwrap());
        let m2 = max_m1_for_tolerance(2, basis, CubicSource::Potential).unwrap();
        let m10 = max_m1_for_tolerance(10, basis, CubicSource::Potential).unwrap();
        assert!(m10 <= m2);
        assert!(within_tolerance(m10, 10, basis, CubicSource::Potential).unwrap());
        assert!(!within_tolerance(1.1 * m10, 10, basis, CubicSource::Potential).unwrap());
    }
}
