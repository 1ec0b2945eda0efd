//! Stopband weight for the autocorrelation-domain design.
//!
//! Designing `G` with stopband weight `K` and lifting it to `P = aG + b`
//! yields a filter whose deviations are `delta_s = 4 k_des / K` and
//! `delta_p = k_des * delta_s` exactly when the attained deviation of `G`
//! equals [`delta_p_target`]. The attained deviation increases with `K`
//! while the target decreases, so the crossing is unique and bracketed
//! below by [`k_lower_bound`].

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::par::{self, Execution};
use crate::remez::{build_grid, design_zero_phase, BasisKind, RemezOptions, ZeroPhaseDesign};
use crate::spectrum::{DesignSpec, FrequencyGrid};

/// Smallest weight giving `delta_p + delta_s <= 1`: `4 k_des (k_des + 1)`.
pub fn k_lower_bound(k_des: f64) -> f64 {
    4.0 * k_des * (k_des + 1.0)
}

fn denominator(k: f64, k_des: f64) -> Result<f64> {
    if !(k > 0.0 && k_des > 0.0) {
        return invalid(format!("weights must be positive (K = {k}, k_des = {k_des})"));
    }
    let kd2 = k_des * k_des;
    let den = k * k + 16.0 * kd2 * kd2 - 8.0 * kd2;
    if den <= 0.0 {
        return invalid(format!("nonpositive denominator for K = {k}, k_des = {k_des}"));
    }
    Ok(den)
}

/// Stopband deviation of `G` required at weight `K`:
/// `8 k_des^2 / (K^2 + 16 k_des^4 - 8 k_des^2)`.
pub fn delta_s_target(k: f64, k_des: f64) -> Result<f64> {
    Ok(8.0 * k_des * k_des / denominator(k, k_des)?)
}

/// Passband deviation of `G` required at weight `K`, i.e. `K` times
/// [`delta_s_target`].
pub fn delta_p_target(k: f64, k_des: f64) -> Result<f64> {
    Ok(8.0 * k_des * k_des * k / denominator(k, k_des)?)
}

/// Scale `a` and shift `b` mapping `G` onto the autocorrelation spectrum:
/// `b = 8 k_des^2 / K^2`, `a = 8 k_des^2 / (K delta_p_res)`.
pub fn lift_coefficients(k: f64, k_des: f64, delta_p_res: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && k_des > 0.0 && delta_p_res > 0.0) {
        return invalid("lift coefficients need positive K, k_des and deviation");
    }
    let num = 8.0 * k_des * k_des;
    Ok((num / (k * delta_p_res), num / (k * k)))
}

/// Root-finding strategy on the weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    Bisection,
    /// Illinois-modified false position on `ln K`, falling back to
    /// bisection when it stalls.
    Secant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightOptions {
    /// Relative tolerance on `|delta_p_res - delta_p_target|`.
    pub tol: f64,
    pub max_iter: usize,
    pub grid_density: usize,
    /// Doubling of the upper bracket stops here.
    pub upper_cap: f64,
    pub method: RootMethod,
    pub remez: RemezOptions,
}

impl Default for WeightOptions {
    fn default() -> Self {
        WeightOptions {
            tol: 1e-8,
            max_iter: 60,
            grid_density: crate::remez::DEFAULT_GRID_DENSITY,
            upper_cap: 1e12,
            method: RootMethod::Bisection,
            remez: RemezOptions::default(),
        }
    }
}

/// One evaluation of the weight equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketStep {
    pub k: f64,
    pub delta_p_res: f64,
    pub delta_p_target: f64,
}

impl BracketStep {
    pub fn difference(&self) -> f64 {
        self.delta_p_res - self.delta_p_target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSolution {
    pub k_star: f64,
    pub design: ZeroPhaseDesign,
    pub target_delta_p: f64,
    pub residual: f64,
    pub history: Vec<BracketStep>,
}

impl WeightSolution {
    /// Filter stopband deviation `4 k_des / K*`.
    pub fn filter_delta_s(&self, k_des: f64) -> f64 {
        4.0 * k_des / self.k_star
    }

    /// Filter passband deviation `k_des * delta_s`.
    pub fn filter_delta_p(&self, k_des: f64) -> f64 {
        k_des * self.filter_delta_s(k_des)
    }
}

/// Design grid and basis for the zero-phase sequence of order `2N`.
pub fn design_setup(spec: &DesignSpec, density: usize) -> Result<(BasisKind, FrequencyGrid)> {
    let basis = BasisKind::for_domain(spec.domain, spec.order);
    let grid = build_grid(&spec.bands, basis.size(), density)?;
    Ok((basis, grid))
}

fn tightened(remez: &RemezOptions, tol: f64) -> RemezOptions {
    // The attained deviation feeds a relative-`tol` root test, so the
    // equiripple spread must sit well below it.
    RemezOptions { spread_tol: remez.spread_tol.min(1e-3 * tol), ..remez.clone() }
}

/// Solves for the weight `K*` where the attained deviation of the zero-phase
/// design meets [`delta_p_target`].
pub fn solve_weight(spec: &DesignSpec, opts: &WeightOptions) -> Result<WeightSolution> {
    let (basis, grid) = design_setup(spec, opts.grid_density)?;
    let k_des = spec.k_des;
    let mut remez = tightened(&opts.remez, opts.tol);
    let mut history = Vec::new();

    let eval = |k: f64, remez: &mut RemezOptions| -> Result<(ZeroPhaseDesign, BracketStep)> {
        let design = design_zero_phase(&spec.bands, k, basis, &grid, remez)?;
        // warm start the next design from this reference
        remez.initial_reference = Some(design.extremal_freqs.clone());
        let step = BracketStep {
            k,
            delta_p_res: design.delta_p,
            delta_p_target: delta_p_target(k, k_des)?,
        };
        Ok((design, step))
    };
    let converged = |s: &BracketStep| s.difference().abs() <= opts.tol * s.delta_p_target;

    let lower = k_lower_bound(k_des);
    let (design, step) = eval(lower, &mut remez)?;
    history.push(step);
    if converged(&step) {
        return Ok(finish(design, step, history));
    }
    if step.difference() > 0.0 {
        return Err(Error::BracketNotFound { k_des, cap: lower });
    }
    let mut lo = step;
    let mut upper = 4.0 * lower;
    let hi = loop {
        if upper > opts.upper_cap {
            return Err(Error::BracketNotFound { k_des, cap: opts.upper_cap });
        }
        let (design, step) = eval(upper, &mut remez)?;
        history.push(step);
        if converged(&step) {
            return Ok(finish(design, step, history));
        }
        if step.difference() > 0.0 {
            break step;
        }
        lo = step;
        upper *= 2.0;
    };

    let mut hi = hi;
    // Illinois bookkeeping: which end was retained last.
    let mut side = 0i8;
    let (mut f_lo, mut f_hi) = (lo.difference(), hi.difference());
    let mut best: Option<(ZeroPhaseDesign, BracketStep)> = None;
    for _ in 0..opts.max_iter {
        let (llo, lhi) = (lo.k.ln(), hi.k.ln());
        let mut x = 0.5 * (llo + lhi);
        if opts.method == RootMethod::Secant {
            let s = (llo * f_hi - lhi * f_lo) / (f_hi - f_lo);
            let margin = 1e-3 * (lhi - llo);
            if s.is_finite() && s > llo + margin && s < lhi - margin {
                x = s;
            }
        }
        let (design, step) = eval(x.exp(), &mut remez)?;
        history.push(step);
        if converged(&step) {
            return Ok(finish(design, step, history));
        }
        let better = best
            .as_ref()
            .is_none_or(|(_, b)| step.difference().abs() < b.difference().abs());
        if step.difference() > 0.0 {
            hi = step;
            f_hi = step.difference();
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = step;
            f_lo = step.difference();
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
        if better {
            best = Some((design, step));
        }
        if (hi.k - lo.k) <= 4.0 * f64::EPSILON * hi.k {
            break;
        }
    }
    let residual = best.map_or(f64::NAN, |(_, b)| b.difference().abs());
    Err(Error::WeightNotConverged { residual, iterations: opts.max_iter })
}

fn finish(design: ZeroPhaseDesign, step: BracketStep, history: Vec<BracketStep>) -> WeightSolution {
    WeightSolution {
        k_star: step.k,
        design,
        target_delta_p: step.delta_p_target,
        residual: step.difference().abs(),
        history,
    }
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Attained and target deviations over a set of weights. Each weight is an
/// independent design, so the rows are computed in parallel.
pub fn k_sweep(
    spec: &DesignSpec,
    ks: &[f64],
    density: usize,
    remez: &RemezOptions,
    exec: Execution,
) -> Result<Vec<BracketStep>> {
    let lower = k_lower_bound(spec.k_des);
    if let Some(&bad) = ks.iter().find(|&&k| k < lower * (1.0 - 1e-12)) {
        return invalid(format!(
            "K = {bad} is below the lower bound 4 k_des (k_des + 1) = {lower}"
        ));
    }
    let (basis, grid) = design_setup(spec, density)?;
    // Each design runs its own grid loops sequentially; the sweep itself is
    // the parallel axis.
    let inner = RemezOptions { exec: Execution::Sequential, ..remez.clone() };
    par::map_coarse(exec, ks, |&k| {
        let design = design_zero_phase(&spec.bands, k, basis, &grid, &inner)?;
        Ok(BracketStep {
            k,
            delta_p_res: design.delta_p,
            delta_p_target: delta_p_target(k, spec.k_des)?,
        })
    })
    .into_iter()
    .collect()
}

/// Shape of a sweep: monotonicity of both curves and sign changes of their
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SweepAnalysis {
    pub res_increasing: bool,
    pub target_decreasing: bool,
    pub sign_changes: usize,
}

pub fn analyze_sweep(rows: &[BracketStep]) -> SweepAnalysis {
    let res_increasing = rows.windows(2).all(|w| w[1].delta_p_res > w[0].delta_p_res);
    let target_decreasing = rows.windows(2).all(|w| w[1].delta_p_target < w[0].delta_p_target);
    let sign_changes = rows
        .windows(2)
        .filter(|w| (w[0].difference() > 0.0) != (w[1].difference() > 0.0))
        .count();
    SweepAnalysis { res_increasing, target_decreasing, sign_changes }
}
