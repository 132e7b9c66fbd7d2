//! Secular-term-free Floquet propagators for driven two-level systems.
//!
//! The crate builds perturbative solutions of
//! `i dPhi/dt = (eps * sigma_1 + f(t) * sigma_3) Phi`
//! for periodic drives `f`, in powers of the coupling `eps`, with the
//! free constant of each order fixed so that no term ever grows in
//! time. The result is a Floquet-form propagator that stays accurate
//! over billions of drive cycles, plus the quasi-energy `Omega` that
//! controls coherent destruction of tunnelling.
//!
//! Pipeline: [`interaction::Interaction`] (the drive) ->
//! [`classifier`] (which resonance-condition class the drive falls in)
//! -> [`expansion`] (order-by-order coefficients, two independent
//! engines) -> [`propagator`] (the assembled two-sided Floquet
//! operator) -> cross-checked against [`oracle`] (direct adaptive
//! integration of the Schrödinger equation).

pub mod classifier;
pub mod cli;
pub mod error;
pub mod expansion;
pub mod fourier;
pub mod interaction;
pub mod oracle;
pub mod propagator;
pub mod special;

pub use error::{Error, Result};
