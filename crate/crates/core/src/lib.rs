//! Construction of time-of-arrival (TOA) operator kernels for a particle in
//! an entire analytic potential `V(q) = Σ a_s q^s`.
//!
//! The operator kernel factors as `⟨q|T̂|q'⟩ = (μ/iħ) sgn(q−q') T(q,q')`, and in
//! the characteristic coordinates `u = q+q'`, `v = q−q'` the real symmetric
//! factor `T(u,v)` solves the time kernel equation
//!
//! ```text
//! −(2ħ²/μ) ∂²T/∂u∂v + [V((u+v)/2) − V((u−v)/2)] T = 0,
//! T(u,0) = u/4,  T(0,v) = 0.
//! ```
//!
//! `T` decomposes as `T₀ + T₁ + T₂ + …` where `T₀` is the Weyl-quantized
//! kernel factor and the `Tₙ` (n ≥ 1) are quantum corrections whose
//! Weyl–Wigner transforms carry an explicit `ħ^{2n}` factor. This crate
//! evaluates every term along several independent routes and cross-validates
//! them against each other:
//!
//! - [`series`]: exact power-series solution via coefficient recurrences,
//!   in double precision and in exact rational arithmetic;
//! - [`kernel`]: nested adaptive quadrature of the integral recurrences with
//!   memoized tensor-product grids, plus Picard iteration and PDE residuals;
//! - [`quartic`]: golden closed forms for `V(q) = λq⁴` in terms of
//!   generalized hypergeometric functions;
//! - [`wigner`]: exact term-level Weyl–Wigner transforms, the classical and
//!   local time of arrival, and ħ-scaling measurements;
//! - [`operator`]: Hermitian discretization of the operator kernel and
//!   expectation values on wavepackets;
//! - [`verify`]: the acceptance suite wiring all routes together.

pub mod error;
pub mod kernel;
pub mod operator;
pub mod potential;
pub mod quadrature;
pub mod quartic;
pub mod series;
pub mod specfun;
pub mod verify;
pub mod wigner;

pub use error::{Result, ToaError};
pub use potential::PotentialSeries;
