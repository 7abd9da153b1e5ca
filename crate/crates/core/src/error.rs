//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by circuit validation, simulation, and compilation.
#[derive(Debug, Error)]
pub enum Error {
    /// A gate parameter violates the template caps needed for the error
    /// budget to apply (for example a squeeze amount beyond the admissible
    /// range at the given energy bound).
    #[error("template violation: {0}")]
    TemplateViolation(String),

    /// A circuit is structurally invalid (bad mode index, wrong arity, ...).
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// A quantity fails a basic domain check (dimension not a power of two
    /// where one is required, non-odd quadrature node count, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Truncated-Fock simulation leaked too much population into the top
    /// levels even after the cutoff escalation limit was reached.
    #[error("truncation leakage {leak:.3e} above {tol:.3e} at cutoff {cutoff}")]
    Leakage {
        /// Population found in the top levels at the final attempt.
        leak: f64,
        /// The acceptance threshold.
        tol: f64,
        /// The cutoff of the final attempt.
        cutoff: usize,
    },

    /// A simulated energy crossed the declared budget `E*`.
    #[error("energy budget exceeded: E = {energy:.6} > E* = {budget:.6} after step {step}")]
    EnergyBudget {
        /// The offending exact energy.
        energy: f64,
        /// The circuit's declared budget.
        budget: f64,
        /// One-based index of the gate after which the energy was recorded
        /// (0 for the input state).
        step: usize,
    },

    /// A projection or renormalization left effectively no state behind.
    #[error("degenerate normalization: surviving mass {mass:.3e} below 1e-12")]
    DegenerateNormalization {
        /// The surviving mass.
        mass: f64,
    },

    /// Doubling the quadrature resolution still moved the result too much.
    #[error("quadrature not converged: refinement delta {delta:.3e} above {tol:.3e}")]
    QuadratureNotConverged {
        /// Max-norm change under node doubling.
        delta: f64,
        /// The acceptance threshold.
        tol: f64,
    },

    /// Sanitizing a density matrix would discard more mass than tolerated.
    #[error("sanitize correction {mass:.3e} exceeds 1e-4")]
    CorrectionTooLarge {
        /// Total clipped negative mass.
        mass: f64,
    },

    /// Problem size exceeds the guard rails (use the explicit override to
    /// lift them).
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Malformed JSON input.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// I/O failure while reading or writing circuit or report files.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Dense linear algebra failure (non-convergence in an eigensolver).
    #[error("linear algebra: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
