//! Quantum and classical numerics for the 1-D harmonic oscillator whose mass
//! varies linearly with position, `m(x) = m0 + m1 x`.
//!
//! The Hamiltonian `H(x, p)` and the constant of motion `K(x, v)` of the
//! system are quantized separately (with `p̂` and with `v̂`), their
//! perturbative spectra are computed from truncated Fock-space matrices and
//! from closed forms, and every number is checked against exact
//! diagonalization of the same operators.
//!
//! Module map:
//!
//! * [`model`]: physical parameters, derived constants, classical energies
//! * [`fock`]: dense operator matrices on the truncated oscillator basis
//! * [`quantize`]: Weyl-ordered perturbation operators and their ladder transcriptions
//! * [`perturb`]: second-order Rayleigh–Schrödinger energies, numeric and closed form
//! * [`oracle`]: Jacobi eigensolver, truncation control, λ-scaling fits, adjudication
//! * [`classical`]: RK4 integration of Hamilton's equations with conservation checks
//! * [`cli`]: command implementations behind the `pdmosc` binary

pub mod classical;
pub mod cli;
pub mod error;
pub mod fock;
pub mod model;
pub mod oracle;
pub mod perturb;
pub mod quantize;
pub mod verify;

pub use error::{Error, Result};
