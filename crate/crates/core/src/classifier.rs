//! Resonance-condition classification of a drive.
//!
//! The secular-term-free expansion takes different forms depending on
//! which of the nested spectral means vanishes first:
//!
//! * condition I: `mean(Q0) != 0` — leading quasi-energy shift is
//!   first order in the coupling;
//! * condition II: `mean(Q0) = 0`, `mean(Q1) != 0` — shift starts at
//!   second order (classified here, not expanded);
//! * condition III: `mean(Q0) = mean(Q1) = 0`, `mean(Q3) != 0` —
//!   shift starts at third order; this is the dynamical-localisation
//!   regime.
//!
//! The module also provides the Bessel triple sums that give the
//! third-order shift in closed form for single-cosine drives, and the
//! Bessel-sum identity used to show `mean(Q1) = 0` analytically.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{Interaction, SpectralData};
use crate::special::{bessel_j_row, bessel_y, dj_dnu};

/// Default absolute tolerance for deciding a spectral mean vanishes.
pub const DEFAULT_MEAN_TOL: f64 = 1e-10;

/// The three supported resonance-condition classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    I,
    II,
    III,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::I => write!(f, "I"),
            Condition::II => write!(f, "II"),
            Condition::III => write!(f, "III"),
        }
    }
}

/// Outcome of classification: the class and the spectral means that
/// decided it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub mean_q0: Complex64,
    pub mean_q1: Complex64,
    /// `None` when the drive does not close on a harmonic lattice
    /// (non-integer offset ratio): only the first two means are then
    /// available through closed-form sums.
    pub mean_q3: Option<Complex64>,
    pub tolerance: f64,
}

/// Classify a drive by its nested spectral means.
///
/// Drives with non-integer offset ratio `chi2 = 2 F0 / w` do not close
/// on a lattice; for a single-cosine drive these are still classified
/// (condition II) through the closed Bessel-sum form of `mean(Q1)`.
pub fn classify(f: &Interaction, tol: f64) -> Result<ConditionReport> {
    match f.lattice_base() {
        Ok(_) => {
            let data = f.spectral_data()?;
            classify_from_data(&data, tol)
        }
        Err(Error::UnsupportedSpectrum(msg)) => {
            // Off-lattice: mean(Q0) vanishes automatically (no static
            // component in the squared phase); mean(Q1) from the
            // closed sum if the drive is a single cosine.
            if let Some(chi1) = f.chi1() {
                let m1 = offset_ratio_mean_q1(f.omega(), chi1, f.chi2())?;
                if m1.norm() <= tol {
                    return Err(Error::UnsupportedSpectrum(format!(
                        "off-lattice drive with vanishing second-order mean: {msg}"
                    )));
                }
                Ok(ConditionReport {
                    condition: Condition::II,
                    mean_q0: Complex64::ZERO,
                    mean_q1: m1,
                    mean_q3: None,
                    tolerance: tol,
                })
            } else {
                Err(Error::UnsupportedSpectrum(msg))
            }
        }
        Err(e) => Err(e),
    }
}

/// Classification from already-built spectral data.
pub fn classify_from_data(data: &SpectralData, tol: f64) -> Result<ConditionReport> {
    let m0 = data.q0.mean();
    let m1 = data.q1.mean();
    let m3 = data.q3.mean();
    let condition = if m0.norm() > tol {
        Condition::I
    } else if m1.norm() > tol {
        Condition::II
    } else if m3.norm() > tol {
        Condition::III
    } else {
        return Err(Error::UnsupportedSpectrum(
            "all classification means vanish below tolerance; \
             the drive is beyond the supported condition classes"
                .into(),
        ));
    };
    Ok(ConditionReport { condition, mean_q0: m0, mean_q1: m1, mean_q3: Some(m3), tolerance: tol })
}

/// Leading-order quasi-energy for a classified drive:
/// first / second / third order in the coupling for conditions
/// I / II / III respectively.
pub fn omega_leading(f: &Interaction, report: &ConditionReport, eps: f64) -> f64 {
    let f0 = f.f0();
    match report.condition {
        // kappa_1 mean(Q0) = |mean(Q0)| by the branch rule.
        Condition::I => f0 + eps * report.mean_q0.norm(),
        // Omega = F0 - i eps^2 mean(Q1); mean(Q1) is imaginary.
        Condition::II => f0 + eps * eps * (-Complex64::I * report.mean_q1).re,
        // kappa_1 mean(Q3) = |mean(Q3)| by the branch rule.
        Condition::III => {
            f0 + 2.0 * eps.powi(3) * report.mean_q3.map(|m| m.norm()).unwrap_or(0.0)
        }
    }
}

fn adaptive_bessel_row(x: f64, extra: usize) -> Result<Vec<f64>> {
    // J_k(x) decays super-geometrically once k > x; a modest margin
    // beyond the turning point reaches 1e-18 relative.
    let k = (x.abs().ceil() as usize + 40 + extra).min(200);
    bessel_j_row(k, x)
}

fn j_signed(row: &[f64], n: i64) -> f64 {
    let na = n.unsigned_abs() as usize;
    if na >= row.len() {
        return 0.0;
    }
    if n < 0 && na % 2 == 1 {
        -row[na]
    } else {
        row[na]
    }
}

/// The triple sum `T(x) = -sum_{n,m != 0} J_n J_{n-m} J_m / (n m)`
/// controlling the third-order quasi-energy of a zero-offset cosine
/// drive at a `J_0` zero: `Omega = F0 + 2 eps^3 T(x)/w^2 + ...`.
pub fn triple_sum(x: f64) -> Result<f64> {
    triple_sum_shifted(0, x)
}

/// The shifted triple sum
/// `T_m(x) = -sum_{k,p != 0} J_{m+p} J_{m+p-k} J_{m+k} / (k p)`
/// for drives with offset ratio `chi2 = -m` at a `J_m` zero.
pub fn triple_sum_shifted(m: i64, x: f64) -> Result<f64> {
    let row = adaptive_bessel_row(x, m.unsigned_abs() as usize + 10)?;
    let kmax = row.len() as i64 - 1 - m.abs();
    let mut total = 0.0f64;
    for k in -kmax..=kmax {
        if k == 0 {
            continue;
        }
        let jk = j_signed(&row, m + k);
        if jk == 0.0 {
            continue;
        }
        let mut inner = 0.0f64;
        for p in -kmax..=kmax {
            if p == 0 {
                continue;
            }
            inner += j_signed(&row, m + p) * j_signed(&row, m + p - k) / p as f64;
        }
        total += jk * inner / k as f64;
    }
    Ok(-total)
}

/// `mean(Q1)` for a single-cosine drive with non-integer offset ratio:
/// `(i/(w chi2)) [J_0(chi1)^2 + 2 chi2^2 sum_{k>=1} J_k(chi1)^2/(chi2^2 - k^2)]`.
pub fn offset_ratio_mean_q1(omega: f64, chi1: f64, chi2: f64) -> Result<Complex64> {
    if chi2 == 0.0 {
        return Err(Error::InvalidArgument("offset ratio must be non-zero".into()));
    }
    let row = adaptive_bessel_row(chi1, 0)?;
    let mut sum = row[0] * row[0];
    for (k, &jk) in row.iter().enumerate().skip(1) {
        let denom = chi2 * chi2 - (k * k) as f64;
        if denom.abs() < 1e-9 * chi2 * chi2 {
            return Err(Error::Resonance { denom });
        }
        sum += 2.0 * chi2 * chi2 * jk * jk / denom;
    }
    Ok(Complex64::new(0.0, sum / (omega * chi2)))
}

/// Residual of the Bessel-sum identity
/// `sum_{k != 0} J_{k+m}(x)^2 / k
///   = J_m(x) [ -2 (dJ/dnu)(m, x) + pi Y_m(x) ]`,
/// which proves `mean(Q1) = 0` at zeros of `J_m`. Small residuals
/// validate the special-function stack; the left side is the direct
/// route to `mean(Q1)`.
pub fn bessel_identity_residual(m: i64, x: f64) -> Result<f64> {
    let row = adaptive_bessel_row(x, m.unsigned_abs() as usize + 10)?;
    let kmax = row.len() as i64 - 1 - m.abs();
    let mut lhs = 0.0f64;
    for k in 1..=kmax {
        let a = j_signed(&row, k + m);
        let b = j_signed(&row, -k + m);
        lhs += (a * a - b * b) / k as f64;
    }
    let rhs = j_signed(&row, m) * (-2.0 * dj_dnu(m, x)? + PI * bessel_y(m, x)?);
    Ok((lhs - rhs).abs())
}
