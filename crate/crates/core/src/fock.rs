//! Dense operators on the truncated Fock basis `{|0⟩, …, |N-1⟩}` of the
//! constant-mass oscillator.
//!
//! Entry `(m, n)` of an [`OperatorMatrix`] is `⟨m|Ô|n⟩`. Products of
//! truncated matrices differ from the truncation of the exact product near
//! the `N-1` corner; [`FockBasisSpec::guard`] marks how many top levels are
//! excluded from trusted results.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Per-entry tolerance for matrix identities in natural units.
pub const MATRIX_TOL: f64 = 1e-12;

/// Highest monomial degree in either perturbation operator.
pub const MAX_DEGREE: usize = 4;

pub const DEFAULT_GUARD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockBasisSpec {
    pub dim: usize,
    pub guard: usize,
}

impl FockBasisSpec {
    pub fn new(dim: usize, guard: usize) -> Result<Self> {
        if guard < MAX_DEGREE {
            return Err(Error::Size(format!("guard {guard} is below {MAX_DEGREE}")));
        }
        if dim < guard + 1 {
            return Err(Error::Size(format!("dim {dim} leaves no levels below guard {guard}")));
        }
        Ok(FockBasisSpec { dim, guard })
    }

    /// Number of leading levels whose matrix elements are free of truncation artifacts.
    pub fn trusted(&self) -> usize {
        self.dim - self.guard
    }

    pub fn is_trusted(&self, n: usize) -> bool {
        n < self.trusted()
    }
}

#[derive(Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OperatorMatrix({}x{})", self.dim, self.dim)?;
        for m in 0..self.dim.min(8) {
            for n in 0..self.dim.min(8) {
                let z = self.get(m, n);
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::Size(format!("Fock dimension must be at least 2, got {dim}")))
    } else {
        Ok(())
    }
}

fn check_same(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<()> {
    if a.dim != b.dim {
        Err(Error::Size(format!("dimension mismatch: {} vs {}", a.dim, b.dim)))
    } else {
        Ok(())
    }
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal((0..dim).map(|_| 1.0))
    }

    pub fn diagonal(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let mut out = Self::zeros(values.len());
        for (i, v) in values.into_iter().enumerate() {
            out.set(i, i, Complex64::new(v, 0.0));
        }
        out
    }

    /// Builds a matrix from `f(m, n) = ⟨m|Ô|n⟩`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for m in 0..dim {
            for n in 0..dim {
                data.push(f(m, n));
            }
        }
        OperatorMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.dim + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        self.data[m * self.dim + n] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        check_same(self, other)?;
        let n = self.dim;
        let mut out = OperatorMatrix::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dst = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let src = &other.data[k * n..(k + 1) * n];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        check_same(self, other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        check_same(self, other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, c: Complex64) -> OperatorMatrix {
        OperatorMatrix { dim: self.dim, data: self.data.iter().map(|&z| c * z).collect() }
    }

    pub fn scale_real(&self, c: f64) -> OperatorMatrix {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix::from_fn(self.dim, |m, n| self.get(n, m).conj())
    }

    /// `AB - BA`
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Product of a non-empty sequence of same-sized factors, left to right.
    pub fn product<'a>(factors: impl IntoIterator<Item = &'a OperatorMatrix>) -> Result<OperatorMatrix> {
        let mut it = factors.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::Size("empty operator product".into()))?
            .clone();
        it.try_fold(first, |acc, f| acc.mul(f))
    }

    fn zip_with(&self, other: &OperatorMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> OperatorMatrix {
        OperatorMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Top-left `k × k` block.
    pub fn leading_block(&self, k: usize) -> OperatorMatrix {
        assert!(k <= self.dim, "block {k} larger than matrix {}", self.dim);
        OperatorMatrix::from_fn(k, |m, n| self.get(m, n))
    }

    /// `max |M - M†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect_on(self.dim)
    }

    /// Hermiticity defect restricted to the leading `k × k` block.
    pub fn hermiticity_defect_on(&self, k: usize) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..k {
            for n in m..k {
                worst = worst.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        worst
    }

    pub fn max_imag_on(&self, k: usize) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..k {
            for n in 0..k {
                worst = worst.max(self.get(m, n).im.abs());
            }
        }
        worst
    }

    pub fn max_real_on(&self, k: usize) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..k {
            for n in 0..k {
                worst = worst.max(self.get(m, n).re.abs());
            }
        }
        worst
    }

    /// Largest entrywise deviation on the leading `k × k` block.
    pub fn max_abs_diff_on(&self, other: &OperatorMatrix, k: usize) -> f64 {
        assert!(k <= self.dim && k <= other.dim);
        let mut worst = 0.0f64;
        for m in 0..k {
            for n in 0..k {
                worst = worst.max((self.get(m, n) - other.get(m, n)).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        check_same(self, other)?;
        Ok(self.max_abs_diff_on(other, self.dim))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::add(self, rhs).expect("operator dimensions differ")
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::sub(self, rhs).expect("operator dimensions differ")
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::mul(self, rhs).expect("operator dimensions differ")
    }
}

impl Mul<&OperatorMatrix> for Complex64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale(self)
    }
}

impl Mul<&OperatorMatrix> for f64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale_real(self)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale_real(-1.0)
    }
}

/// Annihilation operator: `a|n⟩ = √n |n-1⟩`.
pub fn ladder_lower(dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    Ok(OperatorMatrix::from_fn(dim, |m, n| {
        if n >= 1 && m == n - 1 {
            Complex64::new((n as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Creation operator `a†`.
pub fn ladder_raise(dim: usize) -> Result<OperatorMatrix> {
    Ok(ladder_lower(dim)?.adjoint())
}

/// `x̂ = √(ħ/2m0ω) (a + a†)`
pub fn position_op(params: &ModelParams, dim: usize) -> Result<OperatorMatrix> {
    let a = ladder_lower(dim)?;
    let ad = a.adjoint();
    let c = (params.hbar / (2.0 * params.m0 * params.omega)).sqrt();
    Ok((&a + &ad).scale_real(c))
}

/// `p̂ = -i √(m0ħω/2) (a - a†)`
pub fn momentum_op(params: &ModelParams, dim: usize) -> Result<OperatorMatrix> {
    let a = ladder_lower(dim)?;
    let ad = a.adjoint();
    let c = (params.m0 * params.hbar * params.omega / 2.0).sqrt();
    Ok((&a - &ad).scale(Complex64::new(0.0, -c)))
}

/// `v̂ = -i √(ħω/2m0) (a - a†)`, the velocity conjugate pairing with `[x̂, v̂] = iħ/m0`.
pub fn velocity_op(params: &ModelParams, dim: usize) -> Result<OperatorMatrix> {
    let a = ladder_lower(dim)?;
    let ad = a.adjoint();
    let c = (params.hbar * params.omega / (2.0 * params.m0)).sqrt();
    Ok((&a - &ad).scale(Complex64::new(0.0, -c)))
}

/// Diagonal `ħω(n + ½)`.
pub fn h0_matrix(params: &ModelParams, dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    let hw = params.energy_scale();
    Ok(OperatorMatrix::diagonal((0..dim).map(|n| hw * (n as f64 + 0.5))))
}

/// `p̂²/2m0 + ½ m0 ω² x̂²` assembled from truncated matrices.
pub fn h0_matrix_built(params: &ModelParams, dim: usize) -> Result<OperatorMatrix> {
    let x = position_op(params, dim)?;
    let p = momentum_op(params, dim)?;
    let kinetic = (&p * &p).scale_real(1.0 / (2.0 * params.m0));
    let pot = (&x * &x).scale_real(0.5 * params.m0 * params.omega * params.omega);
    Ok(&kinetic + &pot)
}
