//! Lifting a zero-phase design into an autocorrelation sequence and checking
//! the resulting filter-domain constraints.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::extrema::refined_extreme;
use crate::par::{self, Execution};
use crate::remez::ZeroPhaseDesign;
use crate::spectrum::{
    autocorrelation_of, check_zero_phase, to_pi_units, zero_phase_at, BandKind, CoeffDomain,
    DesignSpec, FirFilter, FrequencyGrid,
};

/// Default spectral tolerance relative to `p[0]`. Values of `P` down to
/// `-DEFAULT_PSD_REL_TOL * p[0]` are treated as roundoff around a true zero.
pub const DEFAULT_PSD_REL_TOL: f64 = 1e-9;

/// Validation sampling density in points per basis function.
pub const VALIDATION_DENSITY: usize = 64;

/// One-sided autocorrelation `p[0..=N]` of an order-`N` filter. Negative lags
/// are implied by `p[-m] = conj(p[m])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrSequence {
    one_sided: Vec<Complex64>,
    domain: CoeffDomain,
    /// Scale and shift `(a, b)` when produced by lifting.
    lift: Option<(f64, f64)>,
}

impl AutocorrSequence {
    pub fn new(one_sided: Vec<Complex64>, domain: CoeffDomain) -> Result<Self> {
        check_zero_phase(&one_sided, domain)?;
        if !(one_sided[0].re > 0.0) || one_sided.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return invalid("autocorrelation needs finite values and p[0] > 0");
        }
        Ok(AutocorrSequence { one_sided, domain, lift: None })
    }

    /// Autocorrelation of an existing filter.
    pub fn from_filter(h: &FirFilter) -> Result<Self> {
        let mut r = autocorrelation_of(h);
        r[0].im = 0.0;
        if h.domain() == CoeffDomain::Real {
            r.iter_mut().for_each(|c| c.im = 0.0);
        }
        Self::new(r, h.domain())
    }

    pub fn one_sided(&self) -> &[Complex64] {
        &self.one_sided
    }

    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    pub fn lift(&self) -> Option<(f64, f64)> {
        self.lift
    }

    pub fn p0(&self) -> f64 {
        self.one_sided[0].re
    }

    /// Order `N` of the filters admitting this autocorrelation.
    pub fn order(&self) -> usize {
        self.one_sided.len() - 1
    }

    /// `P(e^{jw})`, real by symmetry.
    pub fn spectrum_at(&self, omega: f64) -> f64 {
        zero_phase_at(&self.one_sided, omega)
    }

    pub fn spectrum(&self, omegas: &[f64], exec: Execution) -> Vec<f64> {
        par::map(exec, omegas, |&w| self.spectrum_at(w))
    }

    /// Coefficients of the Laurent polynomial as the two-sided sequence
    /// `p[-N..=N]`.
    pub fn two_sided(&self) -> Vec<Complex64> {
        crate::spectrum::two_sided(&self.one_sided)
    }
}

/// Location and value of the smallest spectral sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumMin {
    pub value: f64,
    pub omega: f64,
}

/// Minimum of `P` over the unit circle (`[0, pi]` for real sequences),
/// sampled at [`VALIDATION_DENSITY`] points per basis function and refined.
pub fn spectrum_min(p: &AutocorrSequence, exec: Execution) -> SpectrumMin {
    let n = p.order();
    let (lo, count) = match p.domain {
        CoeffDomain::Real => (0.0, VALIDATION_DENSITY * (n + 1)),
        CoeffDomain::Complex => (-PI, VALIDATION_DENSITY * (2 * n + 1)),
    };
    let step = (PI - lo) / count as f64;
    let omegas: Vec<f64> = (0..=count).map(|i| lo + step * i as f64).collect();
    let f = |w: f64| p.spectrum_at(w);
    let (omega, value) = refined_extreme(&f, &omegas, &[(0, omegas.len())], false, exec)
        .expect("nonempty validation grid");
    SpectrumMin { value, omega }
}

/// Forms `p = a g + b delta` and checks that its spectrum is nonnegative up
/// to [`DEFAULT_PSD_REL_TOL`] times `p[0]`.
pub fn lift_to_autocorrelation(g: &ZeroPhaseDesign, a: f64, b: f64) -> Result<AutocorrSequence> {
    lift_with_tolerance(g, a, b, DEFAULT_PSD_REL_TOL, Execution::default())
}

pub fn lift_with_tolerance(
    g: &ZeroPhaseDesign,
    a: f64,
    b: f64,
    psd_rel_tol: f64,
    exec: Execution,
) -> Result<AutocorrSequence> {
    if !(a > 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return invalid(format!("lift needs a > 0 and b >= 0, got a = {a}, b = {b}"));
    }
    let mut one_sided: Vec<Complex64> = g.one_sided.iter().map(|&c| c * a).collect();
    one_sided[0] += b;
    let mut p = AutocorrSequence::new(one_sided, g.basis.domain())?;
    p.lift = Some((a, b));
    let min = spectrum_min(&p, exec);
    if min.value < -psd_rel_tol * p.p0() {
        return Err(Error::NegativeSpectrum { value: min.value, freq_pi: to_pi_units(min.omega) });
    }
    Ok(p)
}

/// Pass/fail tolerances for [`validate_constraints_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintTolerances {
    /// Absolute tolerance on `|(max - 1) - (1 - min)|` of the passband
    /// magnitude.
    pub symmetry: f64,
    /// Absolute tolerance on `delta_p / delta_s - k_des`.
    pub ratio: f64,
    /// Spectral floor relative to `p[0]`.
    pub psd_rel: f64,
}

impl Default for ConstraintTolerances {
    fn default() -> Self {
        ConstraintTolerances { symmetry: 1e-6, ratio: 1e-6, psd_rel: DEFAULT_PSD_REL_TOL }
    }
}

/// Filter-domain view of an autocorrelation against a spec: magnitudes are
/// `sqrt(max(P, 0))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub passband_max: f64,
    pub passband_min: f64,
    /// Half the passband magnitude swing.
    pub delta_p: f64,
    /// `|(passband_max - 1) - (1 - passband_min)|`.
    pub symmetry_error: f64,
    pub min_spectrum: f64,
    pub min_spectrum_freq_pi: f64,
    pub psd_floor: f64,
    /// Largest stopband magnitude.
    pub delta_s: f64,
    /// `delta_p / delta_s`; infinite when the stopband is exactly zero.
    pub ratio: f64,
    pub symmetric: bool,
    pub nonnegative: bool,
    pub ratio_ok: bool,
}

impl ConstraintReport {
    pub fn all_ok(&self) -> bool {
        self.symmetric && self.nonnegative && self.ratio_ok
    }
}

pub fn validate_constraints(p: &AutocorrSequence, spec: &DesignSpec) -> ConstraintReport {
    validate_constraints_with(p, spec, &ConstraintTolerances::default(), Execution::default())
}

pub fn validate_constraints_with(
    p: &AutocorrSequence,
    spec: &DesignSpec,
    tol: &ConstraintTolerances,
    exec: Execution,
) -> ConstraintReport {
    let size = match p.domain {
        CoeffDomain::Real => p.order() + 1,
        CoeffDomain::Complex => 2 * p.order() + 1,
    };
    let grid = FrequencyGrid::for_bands(&spec.bands, VALIDATION_DENSITY * size)
        .expect("validated band spec gives a valid grid");
    let (mut pass, mut stop) = (Vec::new(), Vec::new());
    for (bi, range) in grid.band_ranges().into_iter().enumerate() {
        match spec.bands.bands()[bi].kind {
            BandKind::Pass => pass.push(range),
            BandKind::Stop => stop.push(range),
        }
    }
    let omegas = grid.omegas();
    let f = |w: f64| p.spectrum_at(w);
    let pmax = refined_extreme(&f, omegas, &pass, true, exec).map_or(0.0, |e| e.1);
    let pmin = refined_extreme(&f, omegas, &pass, false, exec).map_or(0.0, |e| e.1);
    let smax = refined_extreme(&f, omegas, &stop, true, exec).map_or(0.0, |e| e.1);
    let mag = |v: f64| v.max(0.0).sqrt();
    let (passband_max, passband_min, delta_s) = (mag(pmax), mag(pmin), mag(smax));
    let delta_p = 0.5 * (passband_max - passband_min);
    let symmetry_error = (passband_max + passband_min - 2.0).abs();
    let min = spectrum_min(p, exec);
    let psd_floor = -tol.psd_rel * p.p0();
    let ratio = if delta_s > 0.0 { delta_p / delta_s } else { f64::INFINITY };
    ConstraintReport {
        passband_max,
        passband_min,
        delta_p,
        symmetry_error,
        min_spectrum: min.value,
        min_spectrum_freq_pi: to_pi_units(min.omega),
        psd_floor,
        delta_s,
        ratio,
        symmetric: symmetry_error <= tol.symmetry,
        nonnegative: min.value >= psd_floor,
        ratio_ok: (ratio - spec.k_des).abs() <= tol.ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::remez::BasisKind;
    use crate::spectrum::Band;

    fn design(one_sided: Vec<f64>) -> ZeroPhaseDesign {
        let m = one_sided.len() - 1;
        ZeroPhaseDesign {
            one_sided: one_sided.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            basis: BasisKind::CosineOnly(m),
            applied_weight: 1.0,
            delta_p: 0.0,
            extremal_freqs: Vec::new(),
            iterations: 0,
            delta_history: Vec::new(),
        }
    }

    #[test]
    fn impulse_lift() {
        let p = lift_to_autocorrelation(&design(vec![1.0]), 2.0, 0.5).unwrap();
        assert_eq!(p.one_sided(), &[Complex64::new(2.5, 0.0)]);
        assert_eq!(p.lift(), Some((2.0, 0.5)));
    }

    #[test]
    fn lift_is_linear_in_spectrum() {
        let g = design(vec![0.3, -0.2, 0.1, 0.05]);
        let (a, b) = (1.7, 0.9);
        let p = lift_to_autocorrelation(&g, a, b).unwrap();
        for i in 0..50 {
            let w = i as f64 * 0.0641;
            assert!((p.spectrum_at(w) - (a * g.value_at(w) + b)).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_spectrum_rejected() {
        // G = 2 cos w dips to -2; b = 1 leaves P = 1 + 2 cos w < 0 near pi.
        let r = lift_to_autocorrelation(&design(vec![0.0, 1.0]), 1.0, 1.0);
        match r {
            Err(Error::NegativeSpectrum { value, freq_pi }) => {
                assert!((value + 1.0).abs() < 1e-12);
                assert!((freq_pi - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn from_filter_matches_autocorrelation() {
        let h = FirFilter::from_real(&[2.0, 1.0]).unwrap();
        let p = AutocorrSequence::from_filter(&h).unwrap();
        assert_eq!(p.one_sided(), &[Complex64::new(5.0, 0.0), Complex64::new(2.0, 0.0)]);
        // P = 5 + 4 cos w has its minimum 1 at pi.
        let m = spectrum_min(&p, Execution::Sequential);
        assert!((m.value - 1.0).abs() < 1e-12 && (m.omega - PI).abs() < 1e-6);
    }

    #[test]
    fn degenerate_impulse_report() {
        let spec = DesignSpec::new(
            0,
            vec![Band::pass(0.0, 0.3), Band::stop(0.5, 1.0)],
            2.0,
            CoeffDomain::Real,
        )
        .unwrap();
        let p = AutocorrSequence::new(vec![Complex64::new(0.81, 0.0)], CoeffDomain::Real).unwrap();
        let r = validate_constraints(&p, &spec);
        assert!(!r.symmetric && r.nonnegative && !r.ratio_ok);
        assert_eq!(r.delta_p, 0.0);
        let p = AutocorrSequence::new(vec![Complex64::new(1.0, 0.0)], CoeffDomain::Real).unwrap();
        assert!(validate_constraints(&p, &spec).symmetric);
    }
}
