//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while classifying a drive, building an
/// expansion, or evaluating a propagator.
#[derive(Debug, Error)]
pub enum Error {
    /// Two series on incompatible frequency lattices were combined.
    #[error("frequency lattices differ: {a} vs {b}")]
    FrequencyMismatch { a: f64, b: f64 },

    /// An integrand handed to the primitive-from-zero operation has a
    /// non-negligible mean, so its primitive would grow linearly.
    #[error("integrand has non-zero mean {mean_abs:.3e} (scale {scale:.3e}); primitive would be secular")]
    SecularMean { mean_abs: f64, scale: f64 },

    /// The drive does not close on a periodic frequency lattice (for
    /// example a non-integer static-offset ratio), or an operation was
    /// requested outside the supported spectral class.
    #[error("unsupported spectrum: {0}")]
    UnsupportedSpectrum(String),

    /// An operation specific to one resonance-condition class was
    /// invoked on a drive of a different class.
    #[error("wrong condition class: expected {expected}, drive is {found}")]
    WrongCondition { expected: String, found: String },

    /// A drive parameter is degenerate (zero frequency, empty
    /// harmonic content where some is required, ...).
    #[error("degenerate drive: {0}")]
    DegenerateDrive(String),

    /// A small denominator `m*base + 2*Omega` fell below tolerance
    /// while building the oscillating primitive of the propagator.
    #[error("resonant denominator {denom:.3e} while building the propagator")]
    Resonance { denom: f64 },

    /// The mean of `f + g` disagrees with the quasi-energy the
    /// expansion reported.
    #[error("inconsistent quasi-energy: expected {expected:.12e}, found {found:.12e}")]
    InconsistentOmega { expected: f64, found: f64 },

    /// A quadrature or series refinement failed to reach the requested
    /// accuracy within its iteration budget.
    #[error("accuracy failure: {0}")]
    Accuracy(String),

    /// The symbolic constant-fixing oracle met a polynomial system it
    /// cannot reduce (degree blow-up or no solvable unknown).
    #[error("constant-fixing oracle failed: {0}")]
    OracleUnsolvable(String),

    /// Bad user-supplied argument (CLI or API).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The adaptive integrator stalled (step underflow), typically a
    /// stiffness or tolerance problem.
    #[error("integrator stalled at t = {t:.6e} with step {step:.3e}")]
    IntegratorStalled { t: f64, step: f64 },

    /// I/O error surfaced by the CLI.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization error surfaced by the CLI.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
