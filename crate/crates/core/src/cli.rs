//! Command-line interface.
//!
//! Subcommands: `classify`, `expand`, `propagate`, `compare`, `sweep`,
//! `bessel-check`. Drive parameters come from flags or a flat
//! `key = value` config file (flags win). Exit codes: 0 success,
//! 2 usage error, 3 numerical failure, 4 unsupported drive class.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use crate::classifier;
use crate::error::{Error, Result};
use crate::expansion::{self, affine};
use crate::interaction::Interaction;
use crate::oracle;
use crate::propagator;
use crate::special::j0_zero;

#[derive(Parser)]
#[command(
    name = "twolevel",
    version,
    about = "Secular-term-free Floquet propagators for driven two-level systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Clone)]
struct DriveArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Drive frequency w.
    #[arg(long)]
    omega: Option<f64>,
    /// Static offset F0 (default 0).
    #[arg(long)]
    f0: Option<f64>,
    /// Harmonic amplitude `n:re[:im]` (repeatable). The drive is
    /// `F0 + sum_n 2 Re[(re + i im) e^{i n w t}]`.
    #[arg(long = "harmonic")]
    harmonics: Vec<String>,
    /// Convenience: add a first harmonic of amplitude `w * x_a / 4`
    /// where `x_a` is the a-th zero of J_0 (the dynamical-localisation
    /// point `phi = w x_a / 2`).
    #[arg(long)]
    resonance_zero: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report the resonance-condition class and its spectral means.
    Classify {
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Mean tolerance for the classification.
        #[arg(long, default_value_t = classifier::DEFAULT_MEAN_TOL)]
        tol: f64,
        /// Also report the leading quasi-energy at this coupling.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Build the expansion: constants, quasi-energy coefficients,
    /// secular-freeness defects.
    Expand {
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        order: Option<usize>,
        /// Cross-check the constants against the symbolic engine.
        #[arg(long)]
        check: bool,
    },
    /// Evaluate the Floquet propagator on a (log-biased) time grid.
    Propagate {
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        order: Option<usize>,
        /// Horizon in drive cycles.
        #[arg(long)]
        cycles: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Compare the Floquet propagator against direct integration.
    Compare {
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        cycles: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Integrator tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Parameter sweeps: quasi-energy vs coupling, or triple-sum decay
    /// along the J_0 zeros.
    Sweep {
        #[command(flatten)]
        out: OutArgs,
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Residuals of the Bessel-sum identity behind the second-order
    /// cancellation.
    BesselCheck {
        #[command(flatten)]
        out: OutArgs,
        /// Largest order m to check.
        #[arg(long, default_value_t = 3)]
        m_max: i64,
        /// Arguments x (defaults: first two J_0 zeros, 1.0, 5.0).
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum SweepKind {
    /// Quasi-energy vs coupling for one drive (series + monodromy).
    Omega {
        #[command(flatten)]
        drive: DriveArgs,
        /// Comma-separated coupling values.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long)]
        order: Option<usize>,
        /// Integrator tolerance for the monodromy column.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// |T(x_a)| along the J_0 zeros a = 1..=max_zero.
    Tsum {
        #[arg(long, default_value_t = 15)]
        max_zero: u32,
    },
}

struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "config line {}: expected `key = value`",
                        lineno + 1
                    ))
                })?;
                // Accept both `resonance-zero` and `resonance_zero`.
                map.insert(k.trim().replace('_', "-"), v.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("config key {key}: bad number {v}"))
                })
            })
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    Error::InvalidArgument(format!("config key {key}: bad integer {v}"))
                })
            })
            .transpose()
    }
}

fn parse_harmonic(spec: &str) -> Result<(u32, Complex64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(Error::InvalidArgument(format!(
            "harmonic `{spec}`: expected n:re[:im]"
        )));
    }
    let n: u32 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("harmonic `{spec}`: bad index")))?;
    let re: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("harmonic `{spec}`: bad amplitude")))?;
    let im: f64 = if parts.len() == 3 {
        parts[2]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("harmonic `{spec}`: bad amplitude")))?
    } else {
        0.0
    };
    Ok((n, Complex64::new(re, im)))
}

impl DriveArgs {
    fn build(&self) -> Result<(Interaction, Config)> {
        let cfg = Config::load(self.config.as_ref())?;
        let omega = self
            .omega
            .or(cfg.f64("omega")?)
            .ok_or_else(|| Error::InvalidArgument("--omega is required".into()))?;
        let f0 = self.f0.or(cfg.f64("f0")?).unwrap_or(0.0);
        let mut harmonics = Vec::new();
        for spec in &self.harmonics {
            harmonics.push(parse_harmonic(spec)?);
        }
        if harmonics.is_empty() {
            if let Some(spec) = cfg.0.get("harmonic") {
                for part in spec.split(',') {
                    harmonics.push(parse_harmonic(part.trim())?);
                }
            }
        }
        let rz = self.resonance_zero.or(cfg.usize("resonance-zero")?.map(|v| v as u32));
        if let Some(a) = rz {
            let xa = j0_zero(a)?;
            harmonics.push((1, Complex64::new(omega * xa / 4.0, 0.0)));
        }
        Ok((Interaction::new(omega, f0, harmonics)?, cfg))
    }
}

fn emit(out: &OutArgs, text: String) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn c2(v: Complex64) -> serde_json::Value {
    json!([v.re, v.im])
}

/// Log-biased sample times on `(0, horizon]`, spanning six decades,
/// plus `t = 0`.
fn sample_times(horizon: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    let mut t = vec![0.0];
    for j in 1..n {
        let frac = j as f64 / (n - 1) as f64;
        t.push(horizon * 10f64.powf(-6.0 * (1.0 - frac)));
    }
    t.dedup();
    t
}

fn run_classify(drive: &DriveArgs, out: &OutArgs, tol: f64, epsilon: Option<f64>) -> Result<()> {
    let (f, _) = drive.build()?;
    let report = classifier::classify(&f, tol)?;
    let leading = epsilon.map(|e| classifier::omega_leading(&f, &report, e));
    match out.format {
        Format::Json => {
            let mut doc = json!({
                "condition": report.condition.to_string(),
                "mean_q0": c2(report.mean_q0),
                "mean_q1": c2(report.mean_q1),
                "mean_q3": report.mean_q3.map(c2),
                "tolerance": report.tolerance,
            });
            if let Some(l) = leading {
                doc["omega_leading"] = json!(l);
            }
            emit(out, serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Csv => {
            let mut s = String::from(
                "condition,re_mean_q0,im_mean_q0,re_mean_q1,im_mean_q1,re_mean_q3,im_mean_q3,tolerance,omega_leading\n",
            );
            let m3 = report.mean_q3.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                report.condition,
                report.mean_q0.re,
                report.mean_q0.im,
                report.mean_q1.re,
                report.mean_q1.im,
                m3.re,
                m3.im,
                report.tolerance,
                leading.map(|l| format!("{l:.16e}")).unwrap_or_default(),
            ));
            emit(out, s)
        }
    }
}

fn run_expand(drive: &DriveArgs, out: &OutArgs, order: Option<usize>, check: bool) -> Result<()> {
    let (f, cfg) = drive.build()?;
    let order = order.or(cfg.usize("order")?).unwrap_or(6);
    let exp = expansion::expand(&f, order)?;
    let coeffs = exp.omega_coeffs()?;
    let defects = exp.integrand_mean_abs()?;
    let check_result = if check {
        let sym = affine::fix_constants(&f, order)?;
        let max_rel = exp
            .kappa
            .iter()
            .zip(&sym.kappa)
            .map(|(a, b)| (a - b).norm() / a.norm().max(1e-12))
            .fold(0.0, f64::max);
        Some(max_rel)
    } else {
        None
    };
    match out.format {
        Format::Json => {
            let mut doc = json!({
                "condition": exp.condition.to_string(),
                "order": exp.order,
                "kappa": exp.kappa.iter().map(|&k| c2(k)).collect::<Vec<_>>(),
                "omega_coeffs": coeffs.iter().map(|&c| c2(c)).collect::<Vec<_>>(),
                "integrand_mean_abs": defects,
                "radius_estimate": exp.radius_estimate(),
            });
            if let Some(d) = check_result {
                doc["symbolic_check_max_rel_diff"] = json!(d);
            }
            emit(out, serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Csv => {
            let mut s =
                String::from("n,re_kappa,im_kappa,re_omega_coeff,im_omega_coeff,integrand_mean_abs\n");
            for n in 1..=order {
                let d = if n >= 2 { format!("{:.16e}", defects[n - 2]) } else { String::new() };
                s.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    n,
                    exp.kappa[n - 1].re,
                    exp.kappa[n - 1].im,
                    coeffs[n].re,
                    coeffs[n].im,
                    d
                ));
            }
            emit(out, s)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_propagate(
    drive: &DriveArgs,
    out: &OutArgs,
    epsilon: Option<f64>,
    order: Option<usize>,
    cycles: Option<f64>,
    samples: Option<usize>,
) -> Result<()> {
    let (f, cfg) = drive.build()?;
    let epsilon = epsilon
        .or(cfg.f64("epsilon")?)
        .ok_or_else(|| Error::InvalidArgument("--epsilon is required".into()))?;
    let order = order.or(cfg.usize("order")?).unwrap_or(6);
    let cycles = cycles.or(cfg.f64("cycles")?).unwrap_or(1e6);
    let samples = samples.or(cfg.usize("samples")?).unwrap_or(2000);
    let exp = expansion::expand(&f, order)?;
    if epsilon > exp.radius_estimate() {
        eprintln!(
            "warning: coupling {epsilon} exceeds the estimated convergence radius {:.3e}",
            exp.radius_estimate()
        );
    }
    let u = propagator::build_u(&f, &exp, epsilon)?;
    let horizon = cycles * 2.0 * std::f64::consts::PI / f.omega();
    let times = sample_times(horizon, samples);
    match out.format {
        Format::Csv => {
            let mut s = String::from("t,p,norm_defect,re_u11,im_u11,re_u12,im_u12\n");
            for &t in &times {
                let a = u.u11(t);
                let b = u.u12(t);
                s.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    t,
                    b.norm_sqr(),
                    a.norm_sqr() + b.norm_sqr() - 1.0,
                    a.re,
                    a.im,
                    b.re,
                    b.im
                ));
            }
            emit(out, s)
        }
        Format::Json => {
            let rows: Vec<_> = times
                .iter()
                .map(|&t| {
                    let a = u.u11(t);
                    let b = u.u12(t);
                    json!({
                        "t": t,
                        "p": b.norm_sqr(),
                        "norm_defect": a.norm_sqr() + b.norm_sqr() - 1.0,
                        "u11": c2(a),
                        "u12": c2(b),
                    })
                })
                .collect();
            let doc = json!({
                "omega_quasi": u.omega,
                "epsilon": epsilon,
                "order": order,
                "samples": rows,
            });
            emit(out, serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_compare(
    drive: &DriveArgs,
    out: &OutArgs,
    epsilon: Option<f64>,
    order: Option<usize>,
    cycles: Option<f64>,
    samples: Option<usize>,
    tol: Option<f64>,
) -> Result<()> {
    let (f, cfg) = drive.build()?;
    let epsilon = epsilon
        .or(cfg.f64("epsilon")?)
        .ok_or_else(|| Error::InvalidArgument("--epsilon is required".into()))?;
    let order = order.or(cfg.usize("order")?).unwrap_or(6);
    let cycles = cycles.or(cfg.f64("cycles")?).unwrap_or(100.0);
    let samples = samples.or(cfg.usize("samples")?).unwrap_or(200);
    let tol = tol.or(cfg.f64("tol")?).unwrap_or(1e-10);
    let exp = expansion::expand(&f, order)?;
    let u = propagator::build_u(&f, &exp, epsilon)?;
    let horizon = cycles * 2.0 * std::f64::consts::PI / f.omega();
    let times: Vec<f64> = (1..=samples)
        .map(|j| horizon * j as f64 / samples as f64)
        .collect();
    let sol = oracle::integrate_schrodinger(&f, epsilon, &times, tol)?;
    let mut max11: f64 = 0.0;
    let mut max12: f64 = 0.0;
    let mut s = String::from("t,d_u11,d_u12,p_floquet,p_ode\n");
    let mut rows = Vec::new();
    for (idx, &t) in sol.t.iter().enumerate() {
        let a = u.u11(t);
        let b = u.u12(t);
        let d11 = (a - sol.u[idx][0]).norm();
        let d12 = (b - sol.u[idx][1]).norm();
        max11 = max11.max(d11);
        max12 = max12.max(d12);
        let p_ode = sol.u[idx][1].norm_sqr();
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            t,
            d11,
            d12,
            b.norm_sqr(),
            p_ode
        ));
        rows.push(json!({
            "t": t, "d_u11": d11, "d_u12": d12,
            "p_floquet": b.norm_sqr(), "p_ode": p_ode,
        }));
    }
    match out.format {
        Format::Csv => emit(out, s),
        Format::Json => {
            let doc = json!({
                "epsilon": epsilon,
                "order": order,
                "max_d_u11": max11,
                "max_d_u12": max12,
                "samples": rows,
            });
            emit(out, serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}

fn run_sweep(out: &OutArgs, kind: &SweepKind) -> Result<()> {
    match kind {
        SweepKind::Tsum { max_zero } => {
            let mut s = String::from("a,x_a,abs_t\n");
            let mut rows = Vec::new();
            for a in 1..=*max_zero {
                let xa = j0_zero(a)?;
                let t = classifier::triple_sum(xa)?.abs();
                s.push_str(&format!("{a},{xa:.16e},{t:.16e}\n"));
                rows.push(json!({"a": a, "x_a": xa, "abs_t": t}));
            }
            match out.format {
                Format::Csv => emit(out, s),
                Format::Json => emit(out, serde_json::to_string_pretty(&rows)? + "\n"),
            }
        }
        SweepKind::Omega { drive, epsilons, order, tol } => {
            let (f, cfg) = drive.build()?;
            let order = order.or(cfg.usize("order")?).unwrap_or(6);
            if epsilons.is_empty() {
                return Err(Error::InvalidArgument("--epsilons is required".into()));
            }
            let exp = expansion::expand(&f, order)?;
            let mut s = String::from("epsilon,omega_series,omega_monodromy\n");
            let mut rows = Vec::new();
            for &eps in epsilons {
                let w = exp.omega(eps)?;
                let m = oracle::monodromy_quasi_energy(&f, eps, *tol, w)?;
                s.push_str(&format!("{eps},{w:.16e},{m:.16e}\n"));
                rows.push(json!({"epsilon": eps, "omega_series": w, "omega_monodromy": m}));
            }
            match out.format {
                Format::Csv => emit(out, s),
                Format::Json => emit(out, serde_json::to_string_pretty(&rows)? + "\n"),
            }
        }
    }
}

fn run_bessel_check(out: &OutArgs, m_max: i64, x: &[f64]) -> Result<()> {
    let xs: Vec<f64> = if x.is_empty() {
        vec![j0_zero(1)?, j0_zero(2)?, 1.0, 5.0]
    } else {
        x.to_vec()
    };
    let mut s = String::from("m,x,residual\n");
    let mut rows = Vec::new();
    for m in 0..=m_max {
        for &xv in &xs {
            let r = classifier::bessel_identity_residual(m, xv)?;
            s.push_str(&format!("{m},{xv:.16e},{r:.16e}\n"));
            rows.push(json!({"m": m, "x": xv, "residual": r}));
        }
    }
    match out.format {
        Format::Csv => emit(out, s),
        Format::Json => emit(out, serde_json::to_string_pretty(&rows)? + "\n"),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Classify { drive, out, tol, epsilon } => run_classify(drive, out, *tol, *epsilon),
        Cmd::Expand { drive, out, order, check } => run_expand(drive, out, *order, *check),
        Cmd::Propagate { drive, out, epsilon, order, cycles, samples } => {
            run_propagate(drive, out, *epsilon, *order, *cycles, *samples)
        }
        Cmd::Compare { drive, out, epsilon, order, cycles, samples, tol } => {
            run_compare(drive, out, *epsilon, *order, *cycles, *samples, *tol)
        }
        Cmd::Sweep { out, kind } => run_sweep(out, kind),
        Cmd::BesselCheck { out, m_max, x } => run_bessel_check(out, *m_max, x),
    }
}

/// Entry point used by the binary target.
pub fn run() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::InvalidArgument(_) | Error::DegenerateDrive(_) => 2,
                Error::UnsupportedSpectrum(_) | Error::WrongCondition { .. } => 4,
                _ => 3,
            };
            std::process::exit(code);
        }
    }
}
