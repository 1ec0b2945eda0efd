//! Optimality certificate for a filter's magnitude response.
//!
//! The magnitude `|H|` of an order-`N` filter is the best weighted Chebyshev
//! approximation to the ideal response exactly when the adjusted error
//!
//! ```text
//! E'(w) = W'(w) (|H(w)| - D'(w)),  D' = 1, W' = 1 on passbands,
//!                                  D' = delta_s / 2, W' = 2 k_des on stopbands
//! ```
//!
//! alternates at least `N + 2` times (`2N + 2` for complex coefficients) at
//! the level `delta_p`. The adjusted targets map both a stopband ripple peak
//! (`|H| = delta_s`) and a stopband zero (`|H| = 0`) onto `+-delta_p`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::extrema::{bracket, golden_max, merge_sign_runs, refined_extreme, signed_extrema, Peak};
use crate::par::{self, Execution};
use crate::spectrum::{response_at, BandKind, CoeffDomain, DesignSpec, FirFilter, FrequencyGrid};

/// Maximum weighted deviation of a filter against a spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationReport {
    /// `max |W (|H| - D)|` over all bands, with stopband weight `k_des`.
    pub delta_p: f64,
    /// `delta_p / k_des`.
    pub delta_s: f64,
    /// Where the maximum occurs, in units of pi.
    pub arg_max_freq: f64,
    /// Largest passband deviation `max ||H| - 1|`.
    pub passband_error: f64,
    /// Largest stopband magnitude.
    pub stopband_peak: f64,
}

/// Stopband desired value and weight of the adjusted error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjustedTargets {
    pub d_prime_stop: f64,
    pub w_prime_stop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub required: usize,
    pub found: usize,
    /// Alternation frequencies in units of pi.
    pub alternation_freqs: Vec<f64>,
    /// Whether the band-wise deviations have the ratio `k_des`.
    pub ratio_ok: bool,
    pub optimal: bool,
    pub deviations: DeviationReport,
    pub adjusted: AdjustedTargets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Grid points per degree of freedom.
    pub density: usize,
    /// Relative tolerance on attaining `delta_p`. Stopband nulls are also
    /// accepted within [`null_resolution`] of zero.
    pub rel_tol: f64,
    /// Relative tolerance of the band-wise deviation ratio against `k_des`.
    pub ratio_tol: f64,
    pub exec: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { density: 32, rel_tol: 1e-4, ratio_tol: 1e-3, exec: Execution::default() }
    }
}

/// Required alternation count for an order-`n` filter.
pub fn required_alternations(order: usize, domain: CoeffDomain) -> usize {
    match domain {
        CoeffDomain::Real => order + 2,
        CoeffDomain::Complex => 2 * order + 2,
    }
}

/// Band grid with `density` points per degree of freedom and exact edges.
pub fn certification_grid(spec: &DesignSpec, density: usize) -> Result<FrequencyGrid> {
    if density == 0 {
        return invalid("certification density must be positive");
    }
    let dof = match spec.domain {
        CoeffDomain::Real => spec.order + 1,
        CoeffDomain::Complex => 2 * spec.order + 1,
    };
    FrequencyGrid::for_bands(&spec.bands, density * dof)
}

type IndexRanges = Vec<(usize, usize)>;

fn split_ranges(spec: &DesignSpec, grid: &FrequencyGrid) -> (IndexRanges, IndexRanges) {
    let mut pass = Vec::new();
    let mut stop = Vec::new();
    for (bi, r) in grid.band_ranges().into_iter().enumerate() {
        match spec.bands.bands()[bi].kind {
            BandKind::Pass => pass.push(r),
            BandKind::Stop => stop.push(r),
        }
    }
    (pass, stop)
}

/// Deviations of `h` with every sampled extremum refined off the grid.
pub fn measure_deviations(h: &FirFilter, spec: &DesignSpec, grid: &FrequencyGrid, exec: Execution) -> DeviationReport {
    let (pass, stop) = split_ranges(spec, grid);
    let mag = |w: f64| response_at(h.coeffs(), w).norm();
    let omegas = grid.omegas();
    let none = (f64::NAN, f64::NAN);
    let (w_hi, hi) = refined_extreme(&mag, omegas, &pass, true, exec).unwrap_or(none);
    let (w_lo, lo) = refined_extreme(&mag, omegas, &pass, false, exec).unwrap_or(none);
    let (w_s, s) = refined_extreme(&mag, omegas, &stop, true, exec).unwrap_or(none);
    let candidates = [(w_hi, hi - 1.0), (w_lo, 1.0 - lo), (w_s, spec.k_des * s)];
    let (arg, delta_p) = candidates
        .iter()
        .copied()
        .filter(|c| c.1.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0.0, 0.0));
    DeviationReport {
        delta_p,
        delta_s: delta_p / spec.k_des,
        arg_max_freq: arg / PI,
        passband_error: (hi - 1.0).max(1.0 - lo),
        stopband_peak: s,
    }
}

pub fn adjusted_targets(spec: &DesignSpec, dev: &DeviationReport) -> AdjustedTargets {
    AdjustedTargets { d_prime_stop: dev.delta_s / 2.0, w_prime_stop: 2.0 * spec.k_des }
}

fn adjusted_at(h: &FirFilter, adj: &AdjustedTargets, kind: BandKind, w: f64) -> f64 {
    let m = response_at(h.coeffs(), w).norm();
    match kind {
        BandKind::Pass => m - 1.0,
        BandKind::Stop => adj.w_prime_stop * (m - adj.d_prime_stop),
    }
}

/// Adjusted weighted error sampled on `grid`.
pub fn adjusted_error(h: &FirFilter, adj: &AdjustedTargets, grid: &FrequencyGrid, exec: Execution) -> Vec<f64> {
    let kinds = grid.kinds();
    par::map_range(exec, grid.len(), |i| adjusted_at(h, adj, kinds[i], grid.omegas()[i]))
}

/// Number of sign alternations among `(omega, value)` points whose
/// magnitude reaches `level (1 - rel_tol)`. Neighbouring same-sign
/// attainments (plateaus) count once. Returns the count and the chosen
/// frequencies.
pub fn count_alternations(points: &[(f64, f64)], level: f64, rel_tol: f64) -> (usize, Vec<f64>) {
    let slack: Vec<f64> = vec![0.0; points.len()];
    count_with_slack(points, &slack, level, rel_tol)
}

// As `count_alternations`, widening the tolerance of each point by an
// absolute `slack`.
fn count_with_slack(points: &[(f64, f64)], slack: &[f64], level: f64, rel_tol: f64) -> (usize, Vec<f64>) {
    let peaks: Vec<Peak> = points
        .iter()
        .zip(slack)
        .filter(|(p, &s)| p.1 != 0.0 && p.1.abs() >= level - (level * rel_tol).max(s))
        .map(|(&(omega, value), _)| Peak { omega, value })
        .collect();
    let merged = merge_sign_runs(&peaks);
    (merged.len(), merged.iter().map(|p| p.omega).collect())
}

/// Smallest `|H|` distinguishable from zero: `|H|^2` carries rounding of
/// order `(N + 1) eps p[0]` from the lift and the factorization, so a null
/// is resolved only to the square root of that (with a factor 2 margin).
pub fn null_resolution(h: &FirFilter) -> f64 {
    let p0: f64 = h.coeffs().iter().map(|c| c.norm_sqr()).sum();
    2.0 * ((h.order() + 1) as f64 * f64::EPSILON * p0).sqrt()
}

/// Certifies `h` against `spec` with default options.
pub fn certify(h: &FirFilter, spec: &DesignSpec) -> Result<Certificate> {
    certify_with(h, spec, &CertifyOptions::default())
}

pub fn certify_with(h: &FirFilter, spec: &DesignSpec, opts: &CertifyOptions) -> Result<Certificate> {
    if h.order() != spec.order {
        return invalid(format!("filter has order {}, spec declares {}", h.order(), spec.order));
    }
    if h.domain() != spec.domain {
        return invalid(format!(
            "filter has {} coefficients, spec declares {}",
            h.domain().as_str(),
            spec.domain.as_str()
        ));
    }
    let grid = certification_grid(spec, opts.density)?;
    let dev = measure_deviations(h, spec, &grid, opts.exec);
    let adj = adjusted_targets(spec, &dev);

    let omegas = grid.omegas();
    let kinds = grid.kinds();
    let ranges = grid.band_ranges();
    let samples = adjusted_error(h, &adj, &grid, opts.exec);
    let idx = signed_extrema(&samples, &ranges);
    let points: Vec<(f64, f64)> = par::map(opts.exec, &idx, |&i| {
        let sign = samples[i].signum();
        let (lo, hi) = bracket(omegas, &ranges, i);
        let (w, v) = golden_max(|w| sign * adjusted_at(h, &adj, kinds[i], w), lo, hi, omegas[i]);
        (w, sign * v)
    });
    // Stopband nulls attain the level only up to the null resolution of |H|.
    let null_slack = adj.w_prime_stop * null_resolution(h);
    let slack: Vec<f64> = idx
        .iter()
        .zip(&points)
        .map(|(&i, p)| if kinds[i] == BandKind::Stop && p.1 < 0.0 { null_slack } else { 0.0 })
        .collect();
    let (found, freqs) = count_with_slack(&points, &slack, dev.delta_p, opts.rel_tol);
    let required = required_alternations(spec.order, spec.domain);
    let ratio_ok = dev.stopband_peak > 0.0
        && ((dev.passband_error / dev.stopband_peak) / spec.k_des - 1.0).abs() <= opts.ratio_tol;
    Ok(Certificate {
        required,
        found,
        alternation_freqs: freqs.into_iter().map(|w| w / PI).collect(),
        ratio_ok,
        optimal: found >= required,
        deviations: dev,
        adjusted: adj,
    })
}
