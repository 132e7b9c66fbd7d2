//! The periodic drive and its derived spectral data.
//!
//! A drive is a real trigonometric polynomial
//! `f(t) = F0 + sum_{n>=1} (F_n e^{i n w t} + conj(F_n) e^{-i n w t})`.
//! The phase `q(t) = exp(i Int_0^t f)` closes on a periodic lattice
//! only when `chi2 = 2 F0 / w` is an integer: the lattice base is `w`
//! for even `chi2` and `w/2` for odd `chi2`. All downstream objects
//! (the squared phase and its nested renormalized pairings) live on
//! that lattice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{series_from_samples, FourierSeries};

/// Default lattice-index budget when projecting the phase factor.
const Q_MAX_INDEX: i64 = 64;

/// A real periodic drive given by its static offset and complex
/// harmonic amplitudes `F_n` (`n >= 1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interaction {
    omega: f64,
    f0: f64,
    harmonics: Vec<(u32, Complex64)>,
}

impl Interaction {
    /// Build a drive; harmonic indices must be >= 1 and distinct.
    pub fn new(omega: f64, f0: f64, harmonics: Vec<(u32, Complex64)>) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::DegenerateDrive(format!("frequency must be positive, got {omega}")));
        }
        if !f0.is_finite() {
            return Err(Error::DegenerateDrive("non-finite static offset".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(n, c) in &harmonics {
            if n == 0 {
                return Err(Error::DegenerateDrive(
                    "harmonic index 0 is the static offset; use f0".into(),
                ));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::DegenerateDrive("non-finite harmonic amplitude".into()));
            }
            if !seen.insert(n) {
                return Err(Error::DegenerateDrive(format!("duplicate harmonic index {n}")));
            }
        }
        Ok(Interaction { omega, f0, harmonics })
    }

    /// The common single-cosine drive `f = f0 + phi cos(w t)`.
    pub fn monochromatic(omega: f64, f0: f64, phi: f64) -> Result<Self> {
        Self::new(omega, f0, vec![(1, Complex64::new(phi / 2.0, 0.0))])
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn harmonics(&self) -> &[(u32, Complex64)] {
        &self.harmonics
    }

    /// `chi2 = 2 F0 / w`, the static-offset ratio.
    pub fn chi2(&self) -> f64 {
        2.0 * self.f0 / self.omega
    }

    /// `chi1 = 2 phi / w` for a purely first-harmonic drive of
    /// amplitude `phi = 2 |F_1|`; `None` if other harmonics exist.
    pub fn chi1(&self) -> Option<f64> {
        match self.harmonics.as_slice() {
            [] => Some(0.0),
            [(1, c)] => Some(4.0 * c.norm() / self.omega),
            _ => None,
        }
    }

    /// Base frequency of the closed lattice: `w` for even integer
    /// `chi2`, `w/2` for odd. Errors for non-integer `chi2`.
    pub fn lattice_base(&self) -> Result<f64> {
        let chi2 = self.chi2();
        let k = chi2.round();
        if (chi2 - k).abs() > 1e-9 * chi2.abs().max(1.0) {
            return Err(Error::UnsupportedSpectrum(format!(
                "static-offset ratio 2*F0/w = {chi2} is not an integer; \
                 the phase factor is not periodic on any harmonic lattice"
            )));
        }
        if (k as i64).rem_euclid(2) == 1 {
            Ok(self.omega / 2.0)
        } else {
            Ok(self.omega)
        }
    }

    /// The drive as a series on the closed lattice.
    pub fn f_series(&self) -> Result<FourierSeries> {
        let base = self.lattice_base()?;
        let ratio = (self.omega / base).round() as i64; // 1 or 2
        let mut s = FourierSeries::constant(base, Complex64::new(self.f0, 0.0));
        for &(n, c) in &self.harmonics {
            let m = n as i64 * ratio;
            s.set_coeff(m, s.coeff(m) + c);
            s.set_coeff(-m, s.coeff(-m) + c.conj());
        }
        Ok(s)
    }

    /// Closed-form primitive `Int_0^t f`.
    pub fn int_f(&self, t: f64) -> f64 {
        let mut acc = self.f0 * t;
        for &(n, c) in &self.harmonics {
            let iw = Complex64::new(0.0, n as f64 * self.omega);
            let term = c * ((iw * t).exp() - 1.0) / iw;
            acc += 2.0 * term.re;
        }
        acc
    }

    /// Evaluate the drive itself.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.f0;
        for &(n, c) in &self.harmonics {
            acc += 2.0 * (c * Complex64::new(0.0, n as f64 * self.omega * t).exp()).re;
        }
        acc
    }

    /// Project the phase factor `q(t) = exp(i Int_0^t f)` onto the
    /// closed lattice.
    pub fn build_q(&self) -> Result<FourierSeries> {
        let base = self.lattice_base()?;
        series_from_samples(base, Q_MAX_INDEX, |t| {
            Complex64::new(0.0, self.int_f(t)).exp()
        })
    }

    /// All spectral data the classifier and expansions need.
    pub fn spectral_data(&self) -> Result<SpectralData> {
        let q = self.build_q()?;
        let q0 = q.mul(&q)?;
        let q0c = q0.conj();
        let q1 = q0.renorm2(&q0c)?;
        let q2 = q0.renorm2(&q0)?;
        let q3 = q0.renorm2(&q1)?;
        Ok(SpectralData { q, q0, q1, q2, q3 })
    }
}

/// The phase factor `q`, the squared phase `Q0 = q^2`, and the nested
/// renormalized pairings `Q1 = R2(Q0 | conj Q0)`, `Q2 = R2(Q0 | Q0)`,
/// `Q3 = R2(Q0 | Q1)` whose means drive the condition classification.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub q: FourierSeries,
    pub q0: FourierSeries,
    pub q1: FourierSeries,
    pub q2: FourierSeries,
    pub q3: FourierSeries,
}
