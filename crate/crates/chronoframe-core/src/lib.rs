//! Multi-clock history states on finite-dimensional clock and system spaces.
//!
//! The crate builds history states of the form
//! |Ψ⟩⟩ = Σ_t⃗ |t_1, …, t_N⟩_clocks ⊗ |ψ(t⃗)⟩_{system ⊗ ancillas},
//! conditions them on one agent's clock reading to obtain that agent's
//! perspectival trajectory, verifies the structural axioms a consistent
//! multi-agent scenario must satisfy, extracts the induced process matrix
//! together with its Choi representation, and checks constraint-projector
//! identities for the physical subspace spanned by such states.
//!
//! Module map:
//! - [`tensor`]: dense complex matrices over labeled tensor factor layouts.
//! - [`linalg`]: orthonormalization, Hermitian eigensolver, unitary
//!   completion, seeded Haar sampling.
//! - [`history`]: sparse history states keyed by clock-reading tuples,
//!   conditioning, and evolution matrices.
//! - [`norm`]: per-agent, per-time normalization operators.
//! - [`scenarios`]: concrete scenario builders (two-clock dilation pair,
//!   quantum switch, coherently controlled combs, desynchronization attempt,
//!   single-clock circuits).
//! - [`axioms`]: probe-based verification of the boundary, normalization,
//!   and step-unitary axioms, plus affine-linearity checks.
//! - [`process`]: process-matrix extraction, purity verification, Choi
//!   matrices, process distance, causal reference frame decompositions.
//! - [`projector`]: physical subspace projectors, constraint operators, and
//!   exponential projector identities.
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! route through `libm`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod axioms;
pub mod history;
pub mod linalg;
pub mod norm;
pub mod process;
pub mod projector;
pub mod scenarios;
pub mod tensor;

/// Complex double-precision scalar used for all amplitudes and operators.
pub type Complex64 = num_complex::Complex<f64>;

/// Default absolute tolerance for numerical predicates.
///
/// The shipped constructions involve only small integers and factors of
/// 1/√2, so double precision leaves several orders of magnitude of margin
/// below this threshold.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tight tolerance for identities expected to hold to rounding error.
pub const EXACT_TOL: f64 = 1e-12;

/// Complex unit shorthand used throughout the crate.
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Complex zero shorthand used throughout the crate.
pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
