//! `minimax-fir`: design, certify, response export and weight sweep.
//!
//! Exit codes: 0 optimal / success, 1 well-formed but suboptimal,
//! 2 input error, 3 solver error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod specfile;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use minimax_fir::certificate::{certify_with, Certificate, CertifyOptions};
use minimax_fir::io::{format_autocorr, format_filter, parse_filter};
use minimax_fir::par::Execution;
use minimax_fir::pipeline::{design_filter, PipelineOptions};
use minimax_fir::spectral_factor::{factor_roots, FactorMethod, PhaseSelection};
use minimax_fir::spectrum::{group_delay, magnitude_response, to_pi_units, uniform_omegas, DesignSpec};
use minimax_fir::weight::{analyze_sweep, k_lower_bound, k_sweep, log_spaced};
use minimax_fir::Error;
use serde::Serialize;

use specfile::SpecFile;

#[derive(Parser)]
#[command(name = "minimax-fir", version, about = "Minimax-optimal nonlinear-phase FIR design and certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a filter from a TOML spec and write it with its certificate.
    Design {
        spec: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Design grid points per basis function.
        #[arg(long)]
        grid_density: Option<usize>,
        /// Relative tolerance of the weight search.
        #[arg(long)]
        tol: Option<f64>,
        /// roots | cepstral | auto
        #[arg(long)]
        factorization: Option<String>,
        /// min | max | explicit:<0/1 mask>
        #[arg(long)]
        phase: Option<String>,
    },
    /// Certify a coefficient file against a spec.
    Certify { coeffs: PathBuf, spec: PathBuf },
    /// Export magnitude and group delay as CSV.
    Response {
        coeffs: PathBuf,
        /// Number of frequencies.
        #[arg(long, default_value_t = 1024)]
        points: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate attained and target deviation over log-spaced weights.
    Ksweep {
        spec: PathBuf,
        /// Smallest weight; defaults to the lower bound 4 k_des (k_des + 1).
        #[arg(long)]
        k_min: Option<f64>,
        #[arg(long, default_value_t = 1e5)]
        k_max: f64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Solver(m) => m,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn library(e: Error) -> Failure {
    match e {
        Error::InvalidInput(m) => Failure::Input(m),
        other => Failure::Solver(other.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<(SpecFile, DesignSpec), Failure> {
    let file = SpecFile::parse(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let spec = file.design_spec().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((file, spec))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize") + "\n"
}

/// Flat certificate report written by `design` and printed by `certify`.
#[derive(Serialize)]
struct CertificateReport {
    required: usize,
    found: usize,
    delta_p: f64,
    delta_s: f64,
    ratio_ok: bool,
    optimal: bool,
    alternation_freqs_pi: Vec<f64>,
    passband_error: f64,
    stopband_peak: f64,
    max_deviation_freq_pi: f64,
    adjusted_stop_desired: f64,
    adjusted_stop_weight: f64,
}

impl From<&Certificate> for CertificateReport {
    fn from(c: &Certificate) -> Self {
        CertificateReport {
            required: c.required,
            found: c.found,
            delta_p: c.deviations.delta_p,
            delta_s: c.deviations.delta_s,
            ratio_ok: c.ratio_ok,
            optimal: c.optimal,
            alternation_freqs_pi: c.alternation_freqs.clone(),
            passband_error: c.deviations.passband_error,
            stopband_peak: c.deviations.stopband_peak,
            max_deviation_freq_pi: c.deviations.arg_max_freq,
            adjusted_stop_desired: c.adjusted.d_prime_stop,
            adjusted_stop_weight: c.adjusted.w_prime_stop,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    order: usize,
    domain: &'a str,
    k_des: f64,
    k_star: f64,
    zero_phase_delta_p: f64,
    delta_p: f64,
    delta_s: f64,
    alternations: usize,
    required: usize,
    optimal: bool,
    ratio_ok: bool,
    factorization: &'a str,
    weight_evaluations: usize,
    timings_s: minimax_fir::pipeline::Timings,
}

fn cmd_design(
    spec_path: &Path,
    out: &Path,
    grid_density: Option<usize>,
    tol: Option<f64>,
    factorization: Option<String>,
    phase: Option<String>,
) -> Outcome {
    let (file, spec) = load_spec(spec_path)?;
    let phase: PhaseSelection = match phase {
        Some(p) => p.parse().map_err(library)?,
        None => file.phase().map_err(Failure::Input)?,
    };
    let method: FactorMethod = match factorization {
        Some(f) => f.parse().map_err(library)?,
        None => file.factorization().map_err(Failure::Input)?,
    };

    let mut opts = PipelineOptions::default();
    opts.factor.method = method;
    if let Some(d) = grid_density.or(file.grid_density) {
        opts.weight.grid_density = d;
    }
    let t = &file.tolerances;
    if let Some(v) = tol.or(t.weight) {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::Input(format!("tolerance must be positive, got {v}")));
        }
        opts.weight.tol = v;
    }
    if let Some(v) = t.pairing {
        opts.factor.pairing_tol = v;
    }
    if let Some(v) = t.psd {
        opts.psd_rel_tol = v;
    }
    if let Some(v) = t.alternation {
        opts.certify.rel_tol = v;
    }
    if let Some(v) = t.ratio {
        opts.certify.ratio_tol = v;
    }
    if let Some(v) = t.root_limit {
        opts.factor.root_limit = v;
    }
    opts.factor.fft_len = t.fft_len;

    let result = design_filter(&spec, &phase, &opts).map_err(|e| match e.source {
        Error::InvalidInput(m) => Failure::Input(m),
        _ => Failure::Solver(e.to_string()),
    })?;

    fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    write(&out.join("filter.txt"), &format_filter(&result.filter))?;
    write(&out.join("autocorr.txt"), &format_autocorr(&result.autocorr))?;
    let resolved = opts.factor.resolve(result.autocorr.order());
    if resolved == FactorMethod::Roots {
        let zs = factor_roots(&result.autocorr, opts.factor.pairing_tol, opts.factor.root_limit).map_err(library)?;
        write(&out.join("zeros.txt"), &(zs.to_lines().join("\n") + "\n"))?;
    }
    let cert = &result.certificate;
    write(&out.join("certificate.json"), &to_json(&CertificateReport::from(cert)))?;
    let summary = Summary {
        order: spec.order,
        domain: spec.domain.as_str(),
        k_des: spec.k_des,
        k_star: result.weight_solution.k_star,
        zero_phase_delta_p: result.weight_solution.design.delta_p,
        delta_p: cert.deviations.delta_p,
        delta_s: cert.deviations.delta_s,
        alternations: cert.found,
        required: cert.required,
        optimal: cert.optimal,
        ratio_ok: cert.ratio_ok,
        factorization: if resolved == FactorMethod::Roots { "roots" } else { "cepstral" },
        weight_evaluations: result.weight_solution.history.len(),
        timings_s: result.timings,
    };
    let text = to_json(&summary);
    write(&out.join("summary.json"), &text)?;
    print!("{text}");
    Ok(if cert.optimal { 0 } else { 1 })
}

fn cmd_certify(coeffs: &Path, spec_path: &Path) -> Outcome {
    let h = parse_filter(&read(coeffs)?).map_err(|e| Failure::Input(format!("{}: {e}", coeffs.display())))?;
    let (_, spec) = load_spec(spec_path)?;
    let cert = certify_with(&h, &spec, &CertifyOptions::default()).map_err(library)?;
    print!("{}", to_json(&CertificateReport::from(&cert)));
    Ok(if cert.optimal && cert.ratio_ok { 0 } else { 1 })
}

fn cmd_response(coeffs: &Path, points: usize, out: Option<&Path>) -> Outcome {
    if points == 0 {
        return Err(Failure::Input("--points must be positive".into()));
    }
    let h = parse_filter(&read(coeffs)?).map_err(|e| Failure::Input(format!("{}: {e}", coeffs.display())))?;
    let omegas = uniform_omegas(points, h.domain());
    let mag = magnitude_response(&h, &omegas);
    let gd = group_delay(&h, &omegas);
    let mut text = String::from("freq_pi,magnitude,magnitude_db,group_delay\n");
    for ((w, m), g) in omegas.iter().zip(&mag).zip(&gd) {
        let db = 20.0 * m.log10();
        let g = g.map_or_else(|| "nan".to_string(), |g| format!("{g:.16e}"));
        text.push_str(&format!("{:.16e},{m:.16e},{db:.16e},{g}\n", to_pi_units(*w)));
    }
    emit(out, &text)?;
    Ok(0)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_ksweep(spec_path: &Path, k_min: Option<f64>, k_max: f64, count: usize, out: Option<&Path>) -> Outcome {
    let (file, spec) = load_spec(spec_path)?;
    let bound = k_lower_bound(spec.k_des);
    let k_min = k_min.unwrap_or(bound);
    if count == 0 {
        return Err(Failure::Input("--count must be positive".into()));
    }
    if !(k_max >= k_min) {
        return Err(Failure::Input(format!("--k-max {k_max} is below --k-min {k_min}")));
    }
    let ks = log_spaced(k_min, k_max, count);
    let density = file.grid_density.unwrap_or(minimax_fir::remez::DEFAULT_GRID_DENSITY);
    let rows = k_sweep(&spec, &ks, density, &Default::default(), Execution::default()).map_err(library)?;
    let mut text = String::from("k,delta_p_res,delta_p_target,difference\n");
    for r in &rows {
        text.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r.k, r.delta_p_res, r.delta_p_target, r.difference()));
    }
    emit(out, &text)?;
    if rows.len() < 2 {
        eprintln!("single weight; no crossing check");
    } else {
        let a = analyze_sweep(&rows);
        eprintln!(
            "attained increasing: {}, target decreasing: {}, sign changes: {}",
            a.res_increasing, a.target_decreasing, a.sign_changes
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design { spec, out, grid_density, tol, factorization, phase } => {
            cmd_design(&spec, &out, grid_density, tol, factorization, phase)
        }
        Command::Certify { coeffs, spec } => cmd_certify(&coeffs, &spec),
        Command::Response { coeffs, points, out } => cmd_response(&coeffs, points, out.as_deref()),
        Command::Ksweep { spec, k_min, k_max, count, out } => cmd_ksweep(&spec, k_min, k_max, count, out.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let kind = if f.code() == 2 { "input error" } else { "solver error" };
            eprintln!("{kind}: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
