//! Thin wasm-bindgen façade over the `twolevel` library for the static
//! browser page in `www/`.
//!
//! Three operations are exposed:
//!
//! * [`analyze_drive`] — classify a cosine drive, report the spectral
//!   means that decided the class, and (for expandable classes) the
//!   quasi-energy coefficients and a convergence-radius estimate.
//! * [`transition_curve`] — sample the perturbative propagator over a
//!   long horizon: transition probability, norm defect, and the
//!   quasi-energy actually used.
//! * [`resonance_decay`] — the closed-form third-order response at the
//!   first few localisation amplitudes, showing its slow decay.
//!
//! Every export returns plain data (a JSON string or a flat `Vec<f64>`)
//! so the page needs no glue beyond the generated bindings. The crate
//! also builds as a normal host library, which is how its tests run.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use twolevel::classifier::{self, triple_sum, DEFAULT_MEAN_TOL};
use twolevel::expansion;
use twolevel::interaction::Interaction;
use twolevel::propagator;
use twolevel::special::j0_zero;

/// JSON payload produced by [`analyze_drive`].
#[derive(Serialize)]
struct DriveReport {
    condition: String,
    mean_q0_abs: f64,
    mean_q1_abs: f64,
    mean_q3_abs: Option<f64>,
    /// Real parts of the quasi-energy coefficients `[c_0, c_1, ...]`
    /// (`Omega(eps) = sum_n c_n eps^n`); empty for condition II, which
    /// is classified but not expanded.
    omega_coeffs: Vec<f64>,
    radius_estimate: Option<f64>,
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
}

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::to_string(&ErrorReport { error: msg.to_string() }).unwrap()
}

/// Classify the drive `f(t) = f0 + phi cos(omega t)` and summarise its
/// expansion. Returns a JSON object; on failure the object has a
/// single `error` field.
#[wasm_bindgen]
pub fn analyze_drive(omega: f64, f0: f64, phi: f64, order: usize) -> String {
    let run = || -> twolevel::Result<String> {
        let f = Interaction::monochromatic(omega, f0, phi)?;
        let report = classifier::classify(&f, DEFAULT_MEAN_TOL)?;
        let (omega_coeffs, radius_estimate) = match report.condition {
            classifier::Condition::II => (Vec::new(), None),
            _ => {
                let exp = expansion::expand(&f, order)?;
                let coeffs = exp.omega_coeffs()?.iter().map(|c| c.re).collect();
                (coeffs, Some(exp.radius_estimate()))
            }
        };
        let out = DriveReport {
            condition: report.condition.to_string(),
            mean_q0_abs: report.mean_q0.norm(),
            mean_q1_abs: report.mean_q1.norm(),
            mean_q3_abs: report.mean_q3.map(|m| m.norm()),
            omega_coeffs,
            radius_estimate,
        };
        Ok(serde_json::to_string(&out).unwrap())
    };
    run().unwrap_or_else(err_json)
}

/// Sample the perturbative propagator for `f(t) = f0 + phi cos(omega t)`
/// at coupling `eps` over `cycles` drive periods.
///
/// The result is a flat array of `samples` triples
/// `[t, P(t), |N(t) - 1|]` — time, transition probability, and norm
/// defect — preceded by the quasi-energy: `[Omega, t_0, P_0, d_0, ...]`.
/// An empty array signals failure (inspect [`analyze_drive`] for the
/// reason).
#[wasm_bindgen]
pub fn transition_curve(
    omega: f64,
    f0: f64,
    phi: f64,
    eps: f64,
    order: usize,
    cycles: f64,
    samples: usize,
) -> Vec<f64> {
    let run = || -> twolevel::Result<Vec<f64>> {
        let f = Interaction::monochromatic(omega, f0, phi)?;
        let exp = expansion::expand(&f, order)?;
        let u = propagator::build_u(&f, &exp, eps)?;
        let horizon = cycles * 2.0 * std::f64::consts::PI / omega;
        let mut out = Vec::with_capacity(1 + 3 * samples);
        out.push(exp.omega(eps)?);
        for j in 0..samples {
            let t = horizon * (j + 1) as f64 / samples as f64;
            out.push(t);
            out.push(u.transition_probability(t));
            out.push(u.unitarity_defect(t));
        }
        Ok(out)
    };
    run().unwrap_or_default()
}

/// The third-order response magnitude at the first `max_zero`
/// localisation amplitudes: flat pairs `[x_a, |T(x_a)|]` for
/// `a = 1..=max_zero`. Empty on failure.
#[wasm_bindgen]
pub fn resonance_decay(max_zero: u32) -> Vec<f64> {
    let run = || -> twolevel::Result<Vec<f64>> {
        let mut out = Vec::with_capacity(2 * max_zero as usize);
        for a in 1..=max_zero {
            let x = j0_zero(a)?;
            out.push(x);
            out.push(triple_sum(x)?.abs());
        }
        Ok(out)
    };
    run().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_reports_localisation_class() {
        let x1 = j0_zero(1).unwrap();
        let json = analyze_drive(10.0, 0.0, 10.0 * x1 / 2.0, 4);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["condition"], "III");
        assert!(v["mean_q0_abs"].as_f64().unwrap() < 1e-10);
        // f0 = 0 and the first two orders carry no static part, so the
        // leading coefficients vanish and the cubic one does not.
        let coeffs = v["omega_coeffs"].as_array().unwrap();
        assert!(coeffs[0].as_f64().unwrap().abs() < 1e-12);
        assert!(coeffs[3].as_f64().unwrap().abs() > 1e-4);
    }

    #[test]
    fn analyze_reports_errors_as_json() {
        let json = analyze_drive(-1.0, 0.0, 1.0, 4);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["error"].as_str().unwrap().len() > 0);
    }

    #[test]
    fn curve_stays_normalised() {
        let x1 = j0_zero(1).unwrap();
        let data = transition_curve(10.0, 0.0, 10.0 * x1 / 2.0, 0.05, 4, 100.0, 50);
        assert_eq!(data.len(), 1 + 3 * 50);
        for triple in data[1..].chunks(3) {
            assert!(triple[1] >= 0.0 && triple[1] <= 1.0 + 1e-9);
            assert!(triple[2] < 1e-6, "norm defect {}", triple[2]);
        }
    }

    #[test]
    fn decay_is_monotone() {
        let data = resonance_decay(8);
        assert_eq!(data.len(), 16);
        let mags: Vec<f64> = data.chunks(2).map(|p| p[1]).collect();
        for w in mags.windows(2) {
            assert!(w[1] < w[0]);
        }
    }
}
