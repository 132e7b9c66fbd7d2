//! Sparse trigonometric polynomials on a fixed frequency lattice.
//!
//! Everything in this crate lives in the algebra of finite Fourier
//! series `x(t) = sum_m C_m exp(i m w t)` over integer lattice indices
//! `m` with a common base frequency `w`. This module provides the
//! series type, its arithmetic, the mean / primitive / pairing
//! operations the perturbative machinery is built from, and a
//! sampling-based projection for composing with transcendental
//! functions (e.g. exponentiating a phase).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for deciding that two base frequencies describe
/// the same lattice.
const FREQ_REL_TOL: f64 = 1e-9;

/// Relative tolerance below which an integrand's mean counts as zero
/// for the primitive-from-zero operation.
pub const MEAN_REL_TOL: f64 = 1e-12;

/// Coefficients smaller than this (relative to the largest) are
/// dropped when a series is compacted.
const COMPACT_REL_TOL: f64 = 1e-16;

/// Hard cap on the lattice index retained after compaction. Products
/// grow the support; the perturbative coefficients decay
/// exponentially, so a fixed budget loses nothing at double precision.
pub const INDEX_BUDGET: i64 = 96;

/// A finite Fourier series `sum_m C_m exp(i m w t)` with sparse
/// complex coefficients on the lattice `m w`.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    base: f64,
    coeffs: BTreeMap<i64, Complex64>,
}

fn same_base(a: f64, b: f64) -> bool {
    (a - b).abs() <= FREQ_REL_TOL * a.abs().max(b.abs())
}

impl FourierSeries {
    /// The zero series on the lattice with base frequency `base`.
    pub fn new(base: f64) -> Self {
        assert!(base > 0.0, "base frequency must be positive");
        FourierSeries { base, coeffs: BTreeMap::new() }
    }

    /// The constant series `c`.
    pub fn constant(base: f64, c: Complex64) -> Self {
        let mut s = Self::new(base);
        s.set_coeff(0, c);
        s
    }

    /// A single harmonic `c exp(i m w t)`.
    pub fn harmonic(base: f64, m: i64, c: Complex64) -> Self {
        let mut s = Self::new(base);
        s.set_coeff(m, c);
        s
    }

    /// Base frequency of the lattice.
    pub fn base_freq(&self) -> f64 {
        self.base
    }

    /// Coefficient at lattice index `m` (zero if absent).
    pub fn coeff(&self, m: i64) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or(Complex64::ZERO)
    }

    /// Set (or clear) the coefficient at lattice index `m`.
    pub fn set_coeff(&mut self, m: i64, c: Complex64) {
        if c == Complex64::ZERO {
            self.coeffs.remove(&m);
        } else {
            self.coeffs.insert(m, c);
        }
    }

    /// Iterate over `(index, coefficient)` pairs in index order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// Whether no coefficients are stored.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest |index| with a stored coefficient.
    pub fn max_index(&self) -> i64 {
        self.coeffs.keys().map(|m| m.abs()).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum of coefficient magnitudes (an upper bound for `sup |x(t)|`).
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Time average: the coefficient at index 0.
    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    /// Pointwise complex conjugate: coefficients `conj(C_{-m})`.
    pub fn conj(&self) -> Self {
        let mut out = Self::new(self.base);
        for (&m, &c) in &self.coeffs {
            out.coeffs.insert(-m, c.conj());
        }
        out
    }

    /// Multiply by a complex scalar.
    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        if s == Complex64::ZERO {
            out.coeffs.clear();
            return out;
        }
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out
    }

    fn check_base(&self, other: &Self) -> Result<()> {
        if same_base(self.base, other.base) {
            Ok(())
        } else {
            Err(Error::FrequencyMismatch { a: self.base, b: other.base })
        }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        let mut out = self.clone();
        for (&m, &c) in &other.coeffs {
            let v = out.coeff(m) + c;
            out.set_coeff(m, v);
        }
        Ok(out)
    }

    /// Pointwise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-Complex64::ONE))
    }

    /// Add a constant.
    pub fn add_scalar(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.set_coeff(0, out.coeff(0) + c);
        out
    }

    /// Pointwise product (coefficient convolution), compacted.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        let mut out = Self::new(self.base);
        for (&ma, &ca) in &self.coeffs {
            for (&mb, &cb) in &other.coeffs {
                let m = ma + mb;
                let v = out.coeff(m) + ca * cb;
                out.set_coeff(m, v);
            }
        }
        out.compact();
        Ok(out)
    }

    /// The primitive vanishing at `t = 0`:
    /// `F(t) = sum_{m != 0} C_m (exp(i m w t) - 1)/(i m w)`.
    ///
    /// Fails with [`Error::SecularMean`] if the mean is not negligible
    /// relative to the largest coefficient, since the primitive would
    /// then grow linearly and leave the periodic algebra.
    pub fn integrate_zero(&self) -> Result<Self> {
        let scale = self.max_abs();
        let mean = self.mean().norm();
        if scale > 0.0 && mean > MEAN_REL_TOL * scale {
            return Err(Error::SecularMean { mean_abs: mean, scale });
        }
        let mut out = Self::new(self.base);
        let mut anchor = Complex64::ZERO;
        for (&m, &c) in &self.coeffs {
            if m == 0 {
                continue; // negligible residual mean
            }
            let a = c / Complex64::new(0.0, m as f64 * self.base);
            out.coeffs.insert(m, a);
            anchor += a;
        }
        out.set_coeff(0, -anchor);
        out.compact();
        Ok(out)
    }

    /// The pairing `(self | c)(t) = self(t) * Int_0^t c`.
    ///
    /// Only defined when `c` has (numerically) zero mean; use
    /// [`FourierSeries::renorm2`] otherwise.
    pub fn bracket(&self, c: &Self) -> Result<Self> {
        self.mul(&c.integrate_zero()?)
    }

    /// The mean-renormalized pairing: `(self | c - mean(c))`.
    pub fn renorm2(&self, c: &Self) -> Result<Self> {
        let mut cc = c.clone();
        cc.set_coeff(0, Complex64::ZERO);
        self.bracket(&cc)
    }

    /// The n-fold renormalized pairing, iterated right to left:
    /// `R_n(a_1 | ... | a_n) = R_2(a_1 | R_2(a_2 | ... ))`.
    pub fn renorm_n(parts: &[&Self]) -> Result<Self> {
        let (last, rest) = parts
            .split_last()
            .ok_or_else(|| Error::InvalidArgument("renorm_n needs at least one series".into()))?;
        let mut acc = (*last).clone();
        for a in rest.iter().rev() {
            acc = a.renorm2(&acc)?;
        }
        Ok(acc)
    }

    /// Mean of the pointwise product, `sum_m A_m B_{-m}`, without
    /// building the full convolution.
    pub fn mean_prod(&self, other: &Self) -> Result<Complex64> {
        self.check_base(other)?;
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut acc = Complex64::ZERO;
        for (&m, &c) in &small.coeffs {
            acc += c * big.coeff(-m);
        }
        Ok(acc)
    }

    /// Evaluate the series at time `t`.
    pub fn eval(&self, t: f64) -> Complex64 {
        let mut sum = Complex64::ZERO;
        for (&m, &c) in &self.coeffs {
            sum += c * Complex64::new(0.0, m as f64 * self.base * t).exp();
        }
        sum
    }

    /// Drop coefficients that are negligible relative to the largest,
    /// and anything beyond the index budget.
    pub fn compact(&mut self) {
        let scale = self.max_abs();
        if scale == 0.0 {
            return;
        }
        let floor = COMPACT_REL_TOL * scale;
        self.coeffs.retain(|m, c| c.norm() > floor && m.abs() <= INDEX_BUDGET);
    }

    /// Maximum coefficient magnitude of the difference (union of
    /// supports), for approximate comparisons in tests.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for (&m, &c) in &self.coeffs {
            d = d.max((c - other.coeff(m)).norm());
        }
        for (&m, &c) in &other.coeffs {
            d = d.max((c - self.coeff(m)).norm());
        }
        d
    }
}

/// Serialized form: base frequency plus `[index, re, im]` triples.
#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    base_freq: f64,
    coeffs: Vec<(i64, f64, f64)>,
}

impl Serialize for FourierSeries {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            base_freq: self.base,
            coeffs: self.terms().map(|(m, c)| (m, c.re, c.im)).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FourierSeries {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = SeriesRepr::deserialize(de)?;
        if !(repr.base_freq > 0.0) {
            return Err(serde::de::Error::custom("base_freq must be positive"));
        }
        let mut s = FourierSeries::new(repr.base_freq);
        for (m, re, im) in repr.coeffs {
            s.set_coeff(m, s.coeff(m) + Complex64::new(re, im));
        }
        Ok(s)
    }
}

/// Project a smooth periodic function onto the lattice by uniform
/// sampling over one period and a direct discrete Fourier transform,
/// doubling the sample count until the coefficients are stable.
///
/// `max_index` bounds the retained lattice index. Intended for entire
/// compositions of finite series (e.g. `exp(i * phase(t))`), whose
/// aliasing error decays faster than geometrically.
pub fn series_from_samples<F>(base: f64, max_index: i64, f: F) -> Result<FourierSeries>
where
    F: Fn(f64) -> Complex64,
{
    assert!(base > 0.0 && max_index > 0);
    let period = 2.0 * PI / base;
    let mut n = 4096usize.max(8 * max_index as usize).next_power_of_two();
    let mut prev: Option<FourierSeries> = None;
    while n <= 1 << 17 {
        let samples: Vec<Complex64> =
            (0..n).map(|j| f(period * j as f64 / n as f64)).collect();
        let mut s = FourierSeries::new(base);
        for m in -max_index..=max_index {
            let mut acc = Complex64::ZERO;
            let step = -2.0 * PI * m as f64 / n as f64;
            for (j, &v) in samples.iter().enumerate() {
                acc += v * Complex64::from_polar(1.0, step * j as f64);
            }
            s.set_coeff(m, acc / n as f64);
        }
        s.compact();
        if let Some(p) = &prev {
            let scale = s.max_abs().max(1e-300);
            if s.max_diff(p) <= 1e-13 * scale {
                return Ok(s);
            }
        }
        prev = Some(s);
        n *= 2;
    }
    Err(Error::Accuracy(
        "spectral projection did not stabilize within the sample budget".into(),
    ))
}
