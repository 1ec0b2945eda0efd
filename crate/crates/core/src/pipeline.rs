//! End-to-end design: weight search, zero-phase design of order `2N`, lift
//! to an autocorrelation, spectral factorization and self-certification.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::autocorr::{lift_with_tolerance, AutocorrSequence, DEFAULT_PSD_REL_TOL};
use crate::certificate::{certify_with, Certificate, CertifyOptions};
use crate::error::{invalid, Error, Result};
use crate::par::Execution;
use crate::remez::{build_grid, design_zero_phase, BasisKind, RemezOptions, DEFAULT_GRID_DENSITY};
use crate::spectral_factor::{spectral_factor, FactorOptions, PhaseSelection};
use crate::spectrum::{CoeffDomain, DesignSpec, FirFilter};
use crate::weight::{lift_coefficients, solve_weight, WeightOptions, WeightSolution};

/// Pipeline stage, used to tag errors and timings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Weight,
    Lift,
    Factor,
    Certify,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Weight => "weight",
            Stage::Lift => "lift",
            Stage::Factor => "factor",
            Stage::Certify => "certify",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An error together with the stage that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Error,
}

fn at<T>(stage: Stage, r: Result<T>) -> std::result::Result<T, PipelineError> {
    r.map_err(|source| PipelineError { stage, source })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub weight: WeightOptions,
    pub factor: FactorOptions,
    pub certify: CertifyOptions,
    /// Tolerated negative spectrum relative to `p[0]`.
    pub psd_rel_tol: f64,
    pub exec: Execution,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            weight: WeightOptions::default(),
            factor: FactorOptions::default(),
            certify: CertifyOptions::default(),
            psd_rel_tol: DEFAULT_PSD_REL_TOL,
            exec: Execution::default(),
        }
    }
}

impl PipelineOptions {
    /// Same options with every stage set to `exec`.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self.weight.remez.exec = exec;
        self.certify.exec = exec;
        self
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Timings {
    pub weight: f64,
    pub lift: f64,
    pub factor: f64,
    pub certify: f64,
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.weight + self.lift + self.factor + self.certify
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub filter: FirFilter,
    pub autocorr: AutocorrSequence,
    pub weight_solution: WeightSolution,
    pub certificate: Certificate,
    pub timings: Timings,
}

/// Designs the minimax-optimal order-`N` filter for `spec` with the
/// requested zero selection and certifies it. A certificate that fails
/// after a converged design is reported as an internal error.
pub fn design_filter(
    spec: &DesignSpec,
    phase: &PhaseSelection,
    opts: &PipelineOptions,
) -> std::result::Result<DesignResult, PipelineError> {
    let mut timings = Timings::default();

    let t = Instant::now();
    let sol = at(Stage::Weight, solve_weight(spec, &opts.weight))?;
    timings.weight = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let p = at(Stage::Lift, lift_coefficients(sol.k_star, spec.k_des, sol.design.delta_p).and_then(
        |(a, b)| lift_with_tolerance(&sol.design, a, b, opts.psd_rel_tol, opts.exec),
    ))?;
    timings.lift = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let h = at(Stage::Factor, spectral_factor(&p, phase, &opts.factor))?;
    timings.factor = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let cert = at(Stage::Certify, certify_with(&h, spec, &opts.certify))?;
    timings.certify = t.elapsed().as_secs_f64();
    if !(cert.optimal && cert.ratio_ok) {
        return Err(PipelineError {
            stage: Stage::Certify,
            source: Error::Internal(format!(
                "designed filter failed its certificate: found {} of {} alternations, ratio_ok = {}",
                cert.found, cert.required, cert.ratio_ok
            )),
        });
    }

    Ok(DesignResult { filter: h, autocorr: p, weight_solution: sol, certificate: cert, timings })
}

/// Symmetric (linear-phase) equiripple filter of even order `N` for the same
/// bands and weight `k_des`, used as a comparison design.
pub fn linear_phase_baseline(spec: &DesignSpec) -> Result<FirFilter> {
    linear_phase_baseline_with(spec, DEFAULT_GRID_DENSITY, &RemezOptions::default())
}

pub fn linear_phase_baseline_with(spec: &DesignSpec, density: usize, remez: &RemezOptions) -> Result<FirFilter> {
    if spec.domain != CoeffDomain::Real {
        return invalid("linear-phase baseline needs a real-domain spec");
    }
    if !spec.order.is_multiple_of(2) {
        return invalid(format!("linear-phase baseline needs an even order, got {}", spec.order));
    }
    let half = spec.order / 2;
    let basis = BasisKind::CosineOnly(half);
    let grid = build_grid(&spec.bands, basis.size(), density)?;
    let design = design_zero_phase(&spec.bands, spec.k_des, basis, &grid, remez)?;
    let coeffs: Vec<f64> = (0..=spec.order).map(|n| design.one_sided[n.abs_diff(half)].re).collect();
    FirFilter::from_real(&coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::certify;
    use crate::spectrum::Band;

    fn small_lowpass() -> DesignSpec {
        DesignSpec::new(8, vec![Band::pass(0.0, 0.3), Band::stop(0.5, 1.0)], 1.0, CoeffDomain::Real).unwrap()
    }

    #[test]
    fn small_design_self_certifies() {
        let spec = small_lowpass();
        let r = design_filter(&spec, &PhaseSelection::MinimumPhase, &PipelineOptions::default()).unwrap();
        assert_eq!(r.filter.order(), 8);
        assert!(r.certificate.optimal && r.certificate.ratio_ok);
        assert_eq!(r.certificate.required, 10);
        assert!(r.timings.total() >= 0.0);
    }

    #[test]
    fn execution_modes_agree() {
        let spec = small_lowpass();
        let seq = PipelineOptions::default().with_execution(Execution::Sequential);
        let par = PipelineOptions::default().with_execution(Execution::Parallel);
        let a = design_filter(&spec, &PhaseSelection::MinimumPhase, &seq).unwrap();
        let b = design_filter(&spec, &PhaseSelection::MinimumPhase, &par).unwrap();
        assert_eq!(a.filter, b.filter);
    }

    #[test]
    fn baseline_is_symmetric() {
        let spec = small_lowpass();
        let h = linear_phase_baseline(&spec).unwrap();
        let c = h.real_coeffs();
        for n in 0..=8 {
            assert_eq!(c[n], c[8 - n]);
        }
        let cert = certify(&h, &spec).unwrap();
        assert!(cert.found >= 2);
    }

    #[test]
    fn baseline_rejects_odd_order() {
        let spec = DesignSpec::new(7, vec![Band::pass(0.0, 0.3), Band::stop(0.5, 1.0)], 1.0, CoeffDomain::Real)
            .unwrap();
        assert!(linear_phase_baseline(&spec).is_err());
    }

    #[test]
    fn stage_tag_on_root_limit() {
        let spec = small_lowpass();
        let mut opts = PipelineOptions::default();
        opts.factor.method = crate::spectral_factor::FactorMethod::Roots;
        opts.factor.root_limit = 4;
        let e = design_filter(&spec, &PhaseSelection::MinimumPhase, &opts).unwrap_err();
        assert_eq!(e.stage, Stage::Factor);
        assert!(matches!(e.source, Error::RootLimitExceeded { .. }));
    }
}
