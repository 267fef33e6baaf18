//! Hermitian operators for the perturbations `W_H(x, p)` and `W_K(x, v)`.
//!
//! Mixed monomials are Weyl ordered: `xp² → x̂p̂² − iħp̂` and
//! `x²p² → x̂²p̂² − 2iħx̂p̂ − ħ²/2`, with `ħ` replaced by `ħ/m0` for the
//! `(x̂, v̂)` pair. [`symmetrization_oracle`] averages all orderings by brute
//! force and is the independent check on those compact forms.
//!
//! The ladder-operator expansions published for both operators are kept as
//! word lists in [`printed_blocks`]; they are evaluated exactly (no
//! truncation) and compared block by block with the Weyl construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, OperatorMatrix, DEFAULT_GUARD};
use crate::model::{derive_constants, ModelParams};

/// Smallest dimension accepted by the perturbation builders.
pub const MIN_BUILD_DIM: usize = 2 + DEFAULT_GUARD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WhichPerturbation {
    /// `Ŵ_H`, quantized with the momentum operator.
    HamiltonianP,
    /// `Ŵ_K`, quantized with the velocity operator.
    ConstantOfMotionV,
}

impl WhichPerturbation {
    pub const BOTH: [WhichPerturbation; 2] =
        [WhichPerturbation::HamiltonianP, WhichPerturbation::ConstantOfMotionV];

    pub fn label(&self) -> &'static str {
        match self {
            WhichPerturbation::HamiltonianP => "H",
            WhichPerturbation::ConstantOfMotionV => "K",
        }
    }
}

/// Coefficient of the `x̂³` term in `Ŵ_K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CubicSource {
    /// `m1 ω² / 3`, as in the classical `W_K`.
    #[default]
    Potential,
    /// `m1 ω² / (3 m0)`, as printed with the operator form of `Ŵ_K`.
    MassScaled,
}

fn check_build_dim(dim: usize) -> Result<()> {
    if dim < MIN_BUILD_DIM {
        Err(Error::Size(format!("perturbation operators need dim >= {MIN_BUILD_DIM}, got {dim}")))
    } else {
        Ok(())
    }
}

/// `x̂p̂² − i ħ_eff p̂`
pub fn weyl_xp2(x: &OperatorMatrix, p: &OperatorMatrix, hbar_eff: f64) -> Result<OperatorMatrix> {
    let xpp = OperatorMatrix::product([x, p, p])?;
    xpp.sub(&p.scale(Complex64::new(0.0, hbar_eff)))
}

/// `x̂²p̂² − 2i ħ_eff x̂p̂ − (ħ_eff²/2) I`
pub fn weyl_x2p2(x: &OperatorMatrix, p: &OperatorMatrix, hbar_eff: f64) -> Result<OperatorMatrix> {
    let dim = x.dim();
    let xxpp = OperatorMatrix::product([x, x, p, p])?;
    let xp = x.mul(p)?;
    let id = OperatorMatrix::identity(dim).scale_real(0.5 * hbar_eff * hbar_eff);
    xxpp.sub(&xp.scale(Complex64::new(0.0, 2.0 * hbar_eff)))?.sub(&id)
}

/// Average of the products over all distinct orderings of the factor multiset.
///
/// Factors that compare equal are treated as the same symbol, so
/// `(x̂, p̂, p̂)` averages three products, not six.
pub fn symmetrization_oracle(factors: &[&OperatorMatrix]) -> Result<OperatorMatrix> {
    let first = factors.first().ok_or_else(|| Error::Size("no factors".into()))?;
    let dim = first.dim();
    if factors.iter().any(|f| f.dim() != dim) {
        return Err(Error::Size("factors differ in dimension".into()));
    }
    let mut symbols: Vec<&OperatorMatrix> = Vec::new();
    let mut labels: Vec<usize> = factors
        .iter()
        .map(|f| match symbols.iter().position(|s| *s == *f) {
            Some(i) => i,
            None => {
                symbols.push(f);
                symbols.len() - 1
            }
        })
        .collect();
    labels.sort_unstable();

    let mut total = OperatorMatrix::zeros(dim);
    let mut count = 0usize;
    loop {
        let product = OperatorMatrix::product(labels.iter().map(|&l| symbols[l]))?;
        total = total.add(&product)?;
        count += 1;
        if !next_permutation(&mut labels) {
            break;
        }
    }
    Ok(total.scale_real(1.0 / count as f64))
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// The three operator monomials of a perturbation with their coefficients.
#[derive(Debug, Clone)]
pub struct PerturbationPieces {
    /// Weyl-ordered `x·(kinetic)²`, unit coefficient.
    pub mixed_linear: OperatorMatrix,
    /// Weyl-ordered `x²·(kinetic)²`, unit coefficient.
    pub mixed_quadratic: OperatorMatrix,
    pub cubic: OperatorMatrix,
    pub c_linear: f64,
    pub c_quadratic: f64,
    pub c_cubic: f64,
}

impl PerturbationPieces {
    pub fn assemble(&self) -> OperatorMatrix {
        let lin = self.mixed_linear.scale_real(self.c_linear);
        let quad = self.mixed_quadratic.scale_real(self.c_quadratic);
        let cub = self.cubic.scale_real(self.c_cubic);
        &(&lin + &quad) + &cub
    }
}

pub fn perturbation_pieces(
    params: &ModelParams,
    dim: usize,
    which: WhichPerturbation,
    cubic: CubicSource,
) -> Result<PerturbationPieces> {
    check_build_dim(dim)?;
    let ModelParams { m0, m1, omega, hbar, .. } = *params;
    let x = fock::position_op(params, dim)?;
    let x3 = OperatorMatrix::product([&x, &x, &x])?;
    let potential_cubic = m1 * omega * omega / 3.0;
    match which {
        WhichPerturbation::HamiltonianP => {
            let p = fock::momentum_op(params, dim)?;
            Ok(PerturbationPieces {
                mixed_linear: weyl_xp2(&x, &p, hbar)?,
                mixed_quadratic: weyl_x2p2(&x, &p, hbar)?,
                cubic: x3,
                c_linear: -m1 / (m0 * m0),
                c_quadratic: 3.0 * m1 * m1 / (2.0 * m0.powi(3)),
                c_cubic: potential_cubic,
            })
        }
        WhichPerturbation::ConstantOfMotionV => {
            let v = fock::velocity_op(params, dim)?;
            let hbar_eff = hbar / m0;
            Ok(PerturbationPieces {
                mixed_linear: weyl_xp2(&x, &v, hbar_eff)?,
                mixed_quadratic: weyl_x2p2(&x, &v, hbar_eff)?,
                cubic: x3,
                c_linear: m1,
                c_quadratic: m1 * m1 / (2.0 * m0),
                c_cubic: match cubic {
                    CubicSource::Potential => potential_cubic,
                    CubicSource::MassScaled => potential_cubic / m0,
                },
            })
        }
    }
}

/// `Ŵ_H = −(m1/m0²) W[xp²] + (3m1²/2m0³) W[x²p²] + (m1ω²/3) x̂³`
pub fn build_w_h(params: &ModelParams, dim: usize) -> Result<OperatorMatrix> {
    Ok(perturbation_pieces(params, dim, WhichPerturbation::HamiltonianP, CubicSource::Potential)?.assemble())
}

/// `Ŵ_K = m1 W[xv²] + (m1²/2m0) W[x²v²] + c x̂³`, `c` chosen by `cubic`.
pub fn build_w_k(params: &ModelParams, dim: usize, cubic: CubicSource) -> Result<OperatorMatrix> {
    Ok(perturbation_pieces(params, dim, WhichPerturbation::ConstantOfMotionV, cubic)?.assemble())
}

pub fn build_w(params: &ModelParams, dim: usize, which: WhichPerturbation, cubic: CubicSource) -> Result<OperatorMatrix> {
    Ok(perturbation_pieces(params, dim, which, cubic)?.assemble())
}

/// Product of ladder operators written as a string over `a` (lower) and
/// `A` (raise), applied right to left. The empty word is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderTerm {
    pub sign: f64,
    pub word: &'static str,
}

const fn t(sign: f64, word: &'static str) -> LadderTerm {
    LadderTerm { sign, word }
}

/// `⟨m|word|n⟩` for the untruncated oscillator, returned as `(m, value)`.
fn apply_word(word: &str, n: usize) -> Option<(usize, f64)> {
    let mut level = n;
    let mut amp = 1.0f64;
    for c in word.chars().rev() {
        match c {
            'a' => {
                if level == 0 {
                    return None;
                }
                amp *= (level as f64).sqrt();
                level -= 1;
            }
            'A' => {
                amp *= (level as f64 + 1.0).sqrt();
                level += 1;
            }
            other => panic!("invalid ladder symbol {other:?}"),
        }
    }
    Some((level, amp))
}

/// Exact matrix of `Σ sign · word` restricted to the first `dim` levels.
pub fn ladder_polynomial(terms: &[LadderTerm], dim: usize) -> OperatorMatrix {
    let mut out = OperatorMatrix::zeros(dim);
    for term in terms {
        for n in 0..dim {
            if let Some((m, amp)) = apply_word(term.word, n) {
                if m < dim {
                    let z = out.get(m, n) + Complex64::new(term.sign * amp, 0.0);
                    out.set(m, n, z);
                }
            }
        }
    }
    out
}

pub fn render_terms(terms: &[LadderTerm]) -> String {
    let mut s = String::new();
    for (i, term) in terms.iter().enumerate() {
        let word = if term.word.is_empty() {
            "1/2".to_string()
        } else {
            term.word.replace('A', "a†")
        };
        let op = if term.sign < 0.0 { "-" } else if i > 0 { "+" } else { "" };
        let sep = if i > 0 { " " } else { "" };
        s.push_str(&format!("{sep}{op}{word}"));
    }
    s
}

const CUBIC_WORDS: [LadderTerm; 8] = [
    t(1.0, "aaa"), t(1.0, "aAa"), t(1.0, "aaA"), t(1.0, "aAA"),
    t(1.0, "Aaa"), t(1.0, "AAa"), t(1.0, "AaA"), t(1.0, "AAA"),
];

const H_MIXED_LINEAR: [LadderTerm; 8] = [
    t(1.0, "aaa"), t(-1.0, "aaA"), t(-1.0, "aAa"), t(1.0, "aAA"),
    t(1.0, "Aaa"), t(-1.0, "AaA"), t(-1.0, "AAa"), t(1.0, "aaa"),
];

const K_MIXED_LINEAR: [LadderTerm; 8] = [
    t(1.0, "aaa"), t(-1.0, "aaA"), t(-1.0, "aAa"), t(1.0, "aAA"),
    t(1.0, "Aaa"), t(-1.0, "AaA"), t(-1.0, "AAa"), t(1.0, "AAA"),
];

const KINETIC_LINEAR: [LadderTerm; 2] = [t(1.0, "a"), t(-1.0, "A")];

const H_QUARTIC: [LadderTerm; 16] = [
    t(1.0, "aaaa"), t(-1.0, "aaAa"), t(-1.0, "aaAA"), t(1.0, "Aaaa"),
    t(-1.0, "AaAa"), t(-1.0, "AaaA"), t(1.0, "AaAA"), t(1.0, "aAaa"),
    t(-1.0, "aaaA"), t(-1.0, "AAaA"), t(-1.0, "aaAa"), t(-1.0, "aAaA"),
    t(1.0, "aAAA"), t(1.0, "AAaa"), t(-1.0, "AAAa"), t(1.0, "AAAA"),
];

const K_QUARTIC: [LadderTerm; 16] = [
    t(1.0, "aaaa"), t(-1.0, "aaAa"), t(-1.0, "aaAA"), t(1.0, "Aaaa"),
    t(-1.0, "AaAa"), t(-1.0, "AaaA"), t(1.0, "AaAA"), t(1.0, "aAaa"),
    t(-1.0, "aAAa"), t(-1.0, "aaaA"), t(-1.0, "aAaA"), t(1.0, "aAAA"),
    t(1.0, "AAaa"), t(-1.0, "AAAa"), t(-1.0, "AAaA"), t(1.0, "AAAA"),
];

const H_QUADRATIC: [LadderTerm; 5] =
    [t(1.0, "aa"), t(-1.0, "aA"), t(1.0, "Aa"), t(-1.0, "AA"), t(0.5, "")];

const K_QUADRATIC: [LadderTerm; 5] =
    [t(1.0, "aa"), t(-1.0, "aA"), t(-1.0, "Aa"), t(1.0, "AA"), t(0.5, "")];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transcription {
    /// Every word and coefficient exactly as published.
    Literal,
    /// Literal, except the final `a³` of the `H` linear block becomes `a†³`
    /// and the `K` quartic prefactor is replaced by the value fitted against
    /// the Weyl construction.
    Repaired,
}

/// One bracket of a published ladder expansion together with the piece of
/// the Weyl construction it claims to equal.
#[derive(Debug, Clone)]
pub struct PrintedBlock {
    pub location: &'static str,
    pub printed_prefactor: &'static str,
    pub prefactor: f64,
    pub terms: Vec<LadderTerm>,
}

/// The five brackets of the published ladder form, in printed order.
pub fn printed_blocks(params: &ModelParams, which: WhichPerturbation, transcription: Transcription) -> Vec<PrintedBlock> {
    let ModelParams { m0, m1, omega, hbar, .. } = *params;
    let c = derive_constants(params);
    let cubic_pref = m1 * omega * omega / 3.0 * (hbar / (2.0 * m0 * omega)).powf(1.5);
    match which {
        WhichPerturbation::HamiltonianP => {
            let mut linear = H_MIXED_LINEAR.to_vec();
            if transcription == Transcription::Repaired {
                linear[7] = t(1.0, "AAA");
            }
            vec![
                PrintedBlock {
                    location: "H linear x p^2 bracket",
                    printed_prefactor: "-(m1 hbar w / 2 m0) sqrt(hbar / 2 m0 w)",
                    prefactor: -(m1 * hbar * omega / (2.0 * m0)) * (hbar / (2.0 * m0 * omega)).sqrt(),
                    terms: linear,
                },
                PrintedBlock {
                    location: "H linear p bracket",
                    printed_prefactor: "-(m1 hbar / m0^2) sqrt(m0 hbar w / 2)",
                    prefactor: -(m1 * hbar / (m0 * m0)) * (m0 * hbar * omega / 2.0).sqrt(),
                    terms: KINETIC_LINEAR.to_vec(),
                },
                PrintedBlock {
                    location: "H quartic x^2 p^2 bracket",
                    printed_prefactor: "-3 m1^2 hbar^2 / 8 m0^3",
                    prefactor: -3.0 * m1 * m1 * hbar * hbar / (8.0 * m0.powi(3)),
                    terms: H_QUARTIC.to_vec(),
                },
                PrintedBlock {
                    location: "H quadratic x p bracket",
                    printed_prefactor: "-3 m1^2 hbar^2 / 2 m0^3",
                    prefactor: -3.0 * m1 * m1 * hbar * hbar / (2.0 * m0.powi(3)),
                    terms: H_QUADRATIC.to_vec(),
                },
                PrintedBlock {
                    location: "H cubic x^3 bracket",
                    printed_prefactor: "(m1 w^2 / 3) (hbar / 2 m0 w)^(3/2)",
                    prefactor: cubic_pref,
                    terms: CUBIC_WORDS.to_vec(),
                },
            ]
        }
        WhichPerturbation::ConstantOfMotionV => {
            let quartic_pref = match transcription {
                Transcription::Literal => -c.alpha / 12.0,
                Transcription::Repaired => fitted_quartic_prefactor(params),
            };
            vec![
                PrintedBlock {
                    location: "K linear x v^2 bracket",
                    printed_prefactor: "-(hbar / 2)(m1 / m0) sqrt(hbar w / 2 m0)",
                    prefactor: -(hbar / 2.0) * (m1 / m0) * (hbar * omega / (2.0 * m0)).sqrt(),
                    terms: K_MIXED_LINEAR.to_vec(),
                },
                PrintedBlock {
                    location: "K linear v bracket",
                    printed_prefactor: "-2 m1 beta",
                    prefactor: -2.0 * m1 * c.beta,
                    terms: KINETIC_LINEAR.to_vec(),
                },
                PrintedBlock {
                    location: "K quartic x^2 v^2 bracket",
                    printed_prefactor: "-alpha / 12",
                    prefactor: quartic_pref,
                    terms: K_QUARTIC.to_vec(),
                },
                PrintedBlock {
                    location: "K quadratic x v bracket",
                    printed_prefactor: "-(1/2) m1^2 hbar^2 / m0^3",
                    prefactor: -0.5 * m1 * m1 * hbar * hbar / m0.powi(3),
                    terms: K_QUADRATIC.to_vec(),
                },
                PrintedBlock {
                    location: "K cubic x^3 bracket",
                    printed_prefactor: "(w^2 m1 / 3) (hbar / 2 m0 w)^(3/2)",
                    prefactor: cubic_pref,
                    terms: CUBIC_WORDS.to_vec(),
                },
            ]
        }
    }
}

/// Whole published ladder expansion as one matrix (exact elements).
pub fn build_w_ladder_printed(
    params: &ModelParams,
    dim: usize,
    which: WhichPerturbation,
    transcription: Transcription,
) -> Result<OperatorMatrix> {
    check_build_dim(dim)?;
    let mut out = OperatorMatrix::zeros(dim);
    for block in printed_blocks(params, which, transcription) {
        out = out.add(&ladder_polynomial(&block.terms, dim).scale_real(block.prefactor))?;
    }
    Ok(out)
}

/// Weyl-built counterparts of the five printed brackets, same order.
fn rebuilt_blocks(params: &ModelParams, dim: usize, which: WhichPerturbation, cubic: CubicSource) -> Result<Vec<(String, OperatorMatrix)>> {
    let ModelParams { m0, hbar, .. } = *params;
    let pieces = perturbation_pieces(params, dim, which, cubic)?;
    let x = fock::position_op(params, dim)?;
    let (kin, hbar_eff, name) = match which {
        WhichPerturbation::HamiltonianP => (fock::momentum_op(params, dim)?, hbar, "p"),
        WhichPerturbation::ConstantOfMotionV => (fock::velocity_op(params, dim)?, hbar / m0, "v"),
    };
    let i = Complex64::new(0.0, 1.0);
    let xkk = OperatorMatrix::product([&x, &kin, &kin])?;
    let xxkk = OperatorMatrix::product([&x, &x, &kin, &kin])?;
    let xk = x.mul(&kin)?;
    let lin_k = kin.scale(-i * hbar_eff);
    let quad_rest = xk
        .scale(-2.0 * i * hbar_eff)
        .sub(&OperatorMatrix::identity(dim).scale_real(0.5 * hbar_eff * hbar_eff))?;
    Ok(vec![
        (format!("{:+e} x{name}{name}", pieces.c_linear), xkk.scale_real(pieces.c_linear)),
        (format!("{:+e} (-i hbar_eff {name})", pieces.c_linear), lin_k.scale_real(pieces.c_linear)),
        (format!("{:+e} xx{name}{name}", pieces.c_quadratic), xxkk.scale_real(pieces.c_quadratic)),
        (
            format!("{:+e} (-2i hbar_eff x{name} - hbar_eff^2/2)", pieces.c_quadratic),
            quad_rest.scale_real(pieces.c_quadratic),
        ),
        (format!("{:+e} xxx", pieces.c_cubic), pieces.cubic.scale_real(pieces.c_cubic)),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub location: String,
    pub printed: String,
    pub rebuilt: String,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticFit {
    /// Prefactor that reproduces `⟨4|·|0⟩` of the Weyl quartic piece.
    pub from_corner_entry: f64,
    /// Least-squares prefactor over the trusted block.
    pub least_squares: f64,
    /// Residual of the least-squares fit (max entry).
    pub residual: f64,
    /// The literal prefactor `-α/12` at the same parameters.
    pub literal: f64,
    /// `from_corner_entry / σ`.
    pub ratio_to_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub which: WhichPerturbation,
    pub dim: usize,
    pub trusted: usize,
    pub blocks: Vec<Discrepancy>,
    pub literal_hermiticity_defect: f64,
    pub repaired_hermiticity_defect: f64,
    pub literal_vs_weyl: f64,
    pub repaired_vs_weyl: f64,
    pub quartic_fit: Option<QuarticFit>,
}

/// `-c` such that `-c · P_printed` best reproduces `(m1²/2m0) W[x²v²]`.
fn quartic_target(params: &ModelParams, dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let pieces = perturbation_pieces(params, dim, WhichPerturbation::ConstantOfMotionV, CubicSource::Potential)?;
    let x = fock::position_op(params, dim)?;
    let v = fock::velocity_op(params, dim)?;
    let target = OperatorMatrix::product([&x, &x, &v, &v])?.scale_real(pieces.c_quadratic);
    Ok((ladder_polynomial(&K_QUARTIC, dim), target))
}

fn fitted_quartic_prefactor(params: &ModelParams) -> f64 {
    // ⟨4|a†⁴|0⟩ is the only word reaching that entry in both forms.
    let (printed, target) = quartic_target(params, MIN_BUILD_DIM).expect("fixed dimension is valid");
    target.get(4, 0).re / printed.get(4, 0).re
}

pub fn quartic_fit(params: &ModelParams, dim: usize, trusted: usize) -> Result<QuarticFit> {
    let (printed, target) = quartic_target(params, dim)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for m in 0..trusted {
        for n in 0..trusted {
            let p = printed.get(m, n);
            num += (p.conj() * target.get(m, n)).re;
            den += p.norm_sqr();
        }
    }
    let ls = if den > 0.0 { num / den } else { 0.0 };
    let residual = printed.scale_real(ls).max_abs_diff_on(&target, trusted);
    let corner = fitted_quartic_prefactor(params);
    let sigma = derive_constants(params).sigma;
    Ok(QuarticFit {
        from_corner_entry: corner,
        least_squares: ls,
        residual,
        literal: -derive_constants(params).alpha / 12.0,
        ratio_to_sigma: (sigma != 0.0).then(|| corner / sigma),
    })
}

/// Block-by-block comparison of the published ladder expansion with the
/// Weyl construction, on the trusted block of a `dim`-level basis.
pub fn ladder_discrepancies(
    params: &ModelParams,
    dim: usize,
    guard: usize,
    which: WhichPerturbation,
    cubic: CubicSource,
) -> Result<DiscrepancyReport> {
    check_build_dim(dim)?;
    let trusted = dim.saturating_sub(guard);
    let rebuilt = rebuilt_blocks(params, dim, which, cubic)?;
    let mut blocks = Vec::new();
    for (block, (rebuilt_form, rebuilt_matrix)) in
        printed_blocks(params, which, Transcription::Literal).iter().zip(&rebuilt)
    {
        let printed = ladder_polynomial(&block.terms, dim).scale_real(block.prefactor);
        blocks.push(Discrepancy {
            location: block.location.to_string(),
            printed: format!("{} * ({})", block.printed_prefactor, render_terms(&block.terms)),
            rebuilt: rebuilt_form.clone(),
            max_deviation: printed.max_abs_diff_on(rebuilt_matrix, trusted),
        });
    }
    let weyl = build_w(params, dim, which, cubic)?;
    let literal = build_w_ladder_printed(params, dim, which, Transcription::Literal)?;
    let repaired = build_w_ladder_printed(params, dim, which, Transcription::Repaired)?;
    let quartic = match which {
        WhichPerturbation::ConstantOfMotionV => Some(quartic_fit(params, dim, trusted)?),
        WhichPerturbation::HamiltonianP => None,
    };
    Ok(DiscrepancyReport {
        which,
        dim,
        trusted,
        blocks,
        literal_hermiticity_defect: literal.hermiticity_defect_on(trusted),
        repaired_hermiticity_defect: repaired.hermiticity_defect_on(trusted),
        literal_vs_weyl: literal.max_abs_diff_on(&weyl, trusted),
        repaired_vs_weyl: repaired.max_abs_diff_on(&weyl, trusted),
        quartic_fit: quartic,
    })
}
