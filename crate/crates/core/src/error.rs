//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ToaError {
    /// A hypergeometric series failed to meet the stopping rule within the
    /// term cap.
    #[error("series did not converge within {max_terms} terms (last |term| = {last_term:.3e})")]
    NonConvergence { max_terms: usize, last_term: f64 },

    /// Argument outside the convergence domain of the requested function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature hit the panel cap before reaching tolerance.
    #[error("quadrature failed: error estimate {estimate:.3e} above tolerance {tol:.3e} after {panels} panels")]
    QuadratureFailure {
        tol: f64,
        panels: usize,
        estimate: f64,
    },

    /// A correction grid of lower order was required but could not be built.
    #[error("missing kernel grid dependency for order {0}")]
    MissingDependency(usize),

    /// The classical path from the initial point to the arrival point crosses
    /// a region where V(q') >= H.
    #[error("classically forbidden: V(q') >= H along the path at q' = {q}")]
    ClassicallyForbidden { q: f64 },

    /// The distributional transform produced a coefficient whose imaginary
    /// part did not cancel; indicates an indexing bug or an odd-parity term.
    #[error("Wigner transform produced a non-real coefficient (relative residue {0:.3e})")]
    NonRealResult(f64),

    /// An expectation value violated its reality contract.
    #[error("expectation value non-real: imag {imag:.3e} against real {real:.3e}")]
    NonRealExpectation { real: f64, imag: f64 },

    /// A measured signal was too small for a meaningful ratio test.
    #[error("degenerate signal: magnitude {0:.3e} below measurable threshold")]
    DegenerateSignal(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ToaError>;
