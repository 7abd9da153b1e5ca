//! Transpilation of finite-energy continuous-variable circuits to qudit
//! circuits, together with a truncated-Fock numerical harness that checks
//! the transpiler's analytic error budget against direct simulation.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`], [`hermite`]: dense complex linear algebra helpers and
//!   Hermite-function evaluation used everywhere else.
//! - [`circuit`]: the gate set, circuit IR, and the layered circuit template.
//! - [`fock`]: truncated-Fock representation of modes, gates, and states.
//! - [`measure`]: binned homodyne measurement operators and probability
//!   distributions (realistic, cutoff, modular).
//! - [`simulate`]: end-to-end simulation of a circuit in the realistic and
//!   cutoff models with an energy ledger and leakage control.
//! - [`ssd`]: the stabilizer subsystem decomposition map from a CV state to
//!   a qudit state.
//! - [`dv`]: the qudit backend and the CV-to-qudit gate compiler.
//! - [`budget`]: closed-form error bounds, energy propagation, and dimension
//!   selection.
//! - [`lowering`]: qudit-to-qubit lowering for power-of-two dimensions.
//! - [`compare`]: the top-level pipeline comparing all simulation routes.
//! - [`random`]: seeded random circuit and state generators.

pub mod budget;
pub mod circuit;
pub mod compare;
pub mod dv;
pub mod error;
pub mod fock;
pub mod hermite;
pub mod linalg;
pub mod lowering;
pub mod measure;
pub mod random;
pub mod simulate;
pub mod ssd;

pub use error::Error;

/// Shorthand used throughout for `num_complex::Complex64`.
pub type C64 = num_complex::Complex64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
