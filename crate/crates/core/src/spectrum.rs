//! Band specifications, FIR coefficient containers and frequency-domain
//! evaluation.
//!
//! Frequencies are radians internally. Band edges given by callers are in
//! units of pi (0.36 means 0.36 pi), see [`Band`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::par::{self, Execution};

/// Whether filter coefficients are restricted to real values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffDomain {
    Real,
    Complex,
}

impl CoeffDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            CoeffDomain::Real => "real",
            CoeffDomain::Complex => "complex",
        }
    }
}

impl std::str::FromStr for CoeffDomain {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(CoeffDomain::Real),
            "complex" => Ok(CoeffDomain::Complex),
            other => invalid(format!("unknown coefficient domain '{other}'")),
        }
    }
}

/// Passband (desired magnitude 1) or stopband (desired magnitude 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandKind {
    Pass,
    Stop,
}

impl BandKind {
    pub fn desired(self) -> f64 {
        match self {
            BandKind::Pass => 1.0,
            BandKind::Stop => 0.0,
        }
    }
}

/// A closed frequency interval `[lo, hi]` in units of pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub kind: BandKind,
}

impl Band {
    pub fn pass(lo: f64, hi: f64) -> Self {
        Band { lo, hi, kind: BandKind::Pass }
    }

    pub fn stop(lo: f64, hi: f64) -> Self {
        Band { lo, hi, kind: BandKind::Stop }
    }

    pub fn lo_rad(&self) -> f64 {
        self.lo * PI
    }

    pub fn hi_rad(&self) -> f64 {
        self.hi * PI
    }

    pub fn width_rad(&self) -> f64 {
        (self.hi - self.lo) * PI
    }
}

/// Validated, sorted set of pass and stop bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSpec {
    bands: Vec<Band>,
}

impl BandSpec {
    /// Sorts and validates `bands` for the given coefficient domain.
    ///
    /// Real-coefficient specs must lie in `[0, 1]`, complex ones in `(-1, 1]`.
    /// Intervals must be disjoint and there must be at least one passband and
    /// one stopband.
    pub fn new(mut bands: Vec<Band>, domain: CoeffDomain) -> Result<Self> {
        if bands.is_empty() {
            return invalid("no bands given");
        }
        for b in &bands {
            if !(b.lo.is_finite() && b.hi.is_finite()) {
                return invalid("band edges must be finite");
            }
            if b.lo > b.hi {
                return invalid(format!("band [{}, {}] has lo > hi", b.lo, b.hi));
            }
            let in_range = match domain {
                CoeffDomain::Real => b.lo >= 0.0 && b.hi <= 1.0,
                CoeffDomain::Complex => b.lo > -1.0 && b.hi <= 1.0,
            };
            if !in_range {
                let range = match domain {
                    CoeffDomain::Real => "[0, 1]",
                    CoeffDomain::Complex => "(-1, 1]",
                };
                return invalid(format!(
                    "band [{}, {}] outside {range} for {} coefficients",
                    b.lo,
                    b.hi,
                    domain.as_str()
                ));
            }
        }
        bands.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in bands.windows(2) {
            if w[1].lo <= w[0].hi {
                return invalid(format!(
                    "bands [{}, {}] and [{}, {}] overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                ));
            }
        }
        if !bands.iter().any(|b| b.kind == BandKind::Pass) {
            return invalid("at least one passband is required");
        }
        if !bands.iter().any(|b| b.kind == BandKind::Stop) {
            return invalid("at least one stopband is required");
        }
        Ok(BandSpec { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn passbands(&self) -> impl Iterator<Item = &Band> {
        self.bands.iter().filter(|b| b.kind == BandKind::Pass)
    }

    pub fn stopbands(&self) -> impl Iterator<Item = &Band> {
        self.bands.iter().filter(|b| b.kind == BandKind::Stop)
    }

    /// Total measure of all bands in radians.
    pub fn total_width_rad(&self) -> f64 {
        self.bands.iter().map(Band::width_rad).sum()
    }

    /// The band containing `omega` (radians), if any.
    pub fn kind_at(&self, omega: f64) -> Option<BandKind> {
        let tol = 1e-12;
        self.bands
            .iter()
            .find(|b| omega >= b.lo_rad() - tol && omega <= b.hi_rad() + tol)
            .map(|b| b.kind)
    }
}

/// Filter order, bands, desired passband/stopband deviation ratio and
/// coefficient domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSpec {
    pub order: usize,
    pub bands: BandSpec,
    pub k_des: f64,
    pub domain: CoeffDomain,
}

impl DesignSpec {
    pub fn new(order: usize, bands: Vec<Band>, k_des: f64, domain: CoeffDomain) -> Result<Self> {
        if !(k_des > 0.0 && k_des.is_finite()) {
            return invalid(format!("k_des must be positive, got {k_des}"));
        }
        let bands = BandSpec::new(bands, domain)?;
        Ok(DesignSpec { order, bands, k_des, domain })
    }

    /// Desired weight: 1 on passbands, `k_des` on stopbands.
    pub fn weight(&self, kind: BandKind) -> f64 {
        match kind {
            BandKind::Pass => 1.0,
            BandKind::Stop => self.k_des,
        }
    }
}

/// FIR coefficients `h[0..=N]`.
///
/// The order is nominal: trailing zeros are kept and count toward it.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coeffs: Vec<Complex64>,
    domain: CoeffDomain,
}

impl FirFilter {
    pub fn new(coeffs: Vec<Complex64>, domain: CoeffDomain) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("empty coefficient vector");
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return invalid("non-finite coefficient");
        }
        if domain == CoeffDomain::Real && coeffs.iter().any(|c| c.im != 0.0) {
            return invalid("real-domain filter with complex coefficient");
        }
        Ok(FirFilter { coeffs, domain })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect(), CoeffDomain::Real)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Real parts of the coefficients.
    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Sorted frequencies (radians) inside a [`BandSpec`], with the band kind of
/// each point. Every band edge appears exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    kinds: Vec<BandKind>,
    /// Index of the band each point belongs to.
    band_index: Vec<usize>,
}

impl FrequencyGrid {
    /// Distributes about `total_points` points over the bands in proportion
    /// to band width, using Chebyshev-node spacing within each band so that
    /// points cluster at the edges. Single-point bands get exactly one point.
    pub fn for_bands(bands: &BandSpec, total_points: usize) -> Result<Self> {
        let width = bands.total_width_rad();
        let mut omegas = Vec::with_capacity(total_points + 2 * bands.bands().len());
        let mut kinds = Vec::with_capacity(omegas.capacity());
        let mut band_index = Vec::with_capacity(omegas.capacity());
        for (bi, b) in bands.bands().iter().enumerate() {
            let (lo, hi) = (b.lo_rad(), b.hi_rad());
            let n = if lo == hi {
                1
            } else if width > 0.0 {
                ((total_points as f64 * b.width_rad() / width).round() as usize).max(2)
            } else {
                2
            };
            if n == 1 {
                omegas.push(lo);
            } else {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                for j in 0..n {
                    let w = if j == 0 {
                        lo
                    } else if j == n - 1 {
                        hi
                    } else {
                        mid - half * (PI * j as f64 / (n - 1) as f64).cos()
                    };
                    omegas.push(w);
                }
            }
            kinds.extend(std::iter::repeat_n(b.kind, n));
            band_index.extend(std::iter::repeat_n(bi, n));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("frequency grid is not strictly increasing");
        }
        Ok(FrequencyGrid { omegas, kinds, band_index })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn kinds(&self) -> &[BandKind] {
        &self.kinds
    }

    pub fn band_index(&self) -> &[usize] {
        &self.band_index
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Index ranges `[start, end)` of the points belonging to each band.
    pub fn band_ranges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.omegas.len() {
            if i == self.omegas.len() || self.band_index[i] != self.band_index[start] {
                out.push((start, i));
                start = i;
            }
        }
        out
    }
}

impl AsRef<[f64]> for FrequencyGrid {
    fn as_ref(&self) -> &[f64] {
        &self.omegas
    }
}

/// `n` equally spaced frequencies covering `[0, pi]` (real) or `(-pi, pi]`
/// (complex).
pub fn uniform_omegas(n: usize, domain: CoeffDomain) -> Vec<f64> {
    match domain {
        CoeffDomain::Real => match n {
            0 => vec![],
            1 => vec![0.0],
            _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
        },
        CoeffDomain::Complex => (1..=n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect(),
    }
}

// Horner evaluation of sum_n c[n] w^n.
#[inline]
pub(crate) fn horner(coeffs: &[Complex64], w: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c)
}

#[inline]
pub(crate) fn response_at(coeffs: &[Complex64], omega: f64) -> Complex64 {
    horner(coeffs, Complex64::from_polar(1.0, -omega))
}

/// `H(e^{jw}) = sum_n h[n] e^{-jwn}` at every frequency.
pub fn evaluate_frequency_response(h: &FirFilter, omegas: &[f64]) -> Vec<Complex64> {
    evaluate_frequency_response_with(h, omegas, Execution::default())
}

pub fn evaluate_frequency_response_with(
    h: &FirFilter,
    omegas: &[f64],
    exec: Execution,
) -> Vec<Complex64> {
    par::map(exec, omegas, |&w| response_at(&h.coeffs, w))
}

/// `|H(e^{jw})|` at every frequency.
pub fn magnitude_response(h: &FirFilter, omegas: &[f64]) -> Vec<f64> {
    magnitude_response_with(h, omegas, Execution::default())
}

pub fn magnitude_response_with(h: &FirFilter, omegas: &[f64], exec: Execution) -> Vec<f64> {
    par::map(exec, omegas, |&w| response_at(&h.coeffs, w).norm())
}

/// Default magnitude floor for [`group_delay`], relative to the largest
/// evaluated magnitude.
pub const GROUP_DELAY_FLOOR: f64 = 1e-8;

/// Group delay in samples. Points where `|H|` falls below
/// `GROUP_DELAY_FLOOR * max|H|` are `None`.
pub fn group_delay(h: &FirFilter, omegas: &[f64]) -> Vec<Option<f64>> {
    group_delay_with_floor(h, omegas, GROUP_DELAY_FLOOR)
}

pub fn group_delay_with_floor(h: &FirFilter, omegas: &[f64], rel_floor: f64) -> Vec<Option<f64>> {
    let ramp: Vec<Complex64> = h
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, &c)| c * n as f64)
        .collect();
    let pairs = par::map(Execution::default(), omegas, |&w| {
        let z = Complex64::from_polar(1.0, -w);
        (horner(&h.coeffs, z), horner(&ramp, z))
    });
    let peak = pairs.iter().map(|(d, _)| d.norm()).fold(0.0, f64::max);
    let floor = rel_floor * peak;
    pairs
        .into_iter()
        .map(|(den, num)| {
            if den.norm() <= floor || den.norm() == 0.0 {
                None
            } else {
                Some((num / den).re)
            }
        })
        .collect()
}

/// One-sided autocorrelation `r[m] = sum_n h[n+m] conj(h[n])`, `m = 0..=N`.
/// The negative lags follow from `r[-m] = conj(r[m])`.
pub fn autocorrelation_of(h: &FirFilter) -> Vec<Complex64> {
    autocorrelation_coeffs(&h.coeffs)
}

pub(crate) fn autocorrelation_coeffs(h: &[Complex64]) -> Vec<Complex64> {
    let n = h.len();
    (0..n)
        .map(|m| {
            h[m..]
                .iter()
                .zip(h.iter())
                .fold(Complex64::new(0.0, 0.0), |acc, (&a, &b)| acc + a * b.conj())
        })
        .collect()
}

/// Expands a one-sided sequence into the full two-sided one, index `k`
/// holding lag `k - M`.
pub fn two_sided(one_sided: &[Complex64]) -> Vec<Complex64> {
    let m = one_sided.len() - 1;
    let mut full = Vec::with_capacity(2 * m + 1);
    full.extend(one_sided[1..].iter().rev().map(|c| c.conj()));
    full.extend_from_slice(one_sided);
    full
}

/// Real transform of a symmetric (real domain) or conjugate-symmetric
/// (complex domain) sequence given by its one-sided half `c[0..=M]`:
/// `c[0] + sum 2 Re(c[n]) cos(nw) + 2 Im(c[n]) sin(nw)`.
pub fn zero_phase_value(
    one_sided: &[Complex64],
    domain: CoeffDomain,
    omegas: &[f64],
) -> Result<Vec<f64>> {
    check_zero_phase(one_sided, domain)?;
    Ok(par::map(Execution::default(), omegas, |&w| zero_phase_at(one_sided, w)))
}

pub(crate) fn check_zero_phase(one_sided: &[Complex64], domain: CoeffDomain) -> Result<()> {
    if one_sided.is_empty() {
        return invalid("empty sequence");
    }
    if one_sided[0].im != 0.0 {
        return invalid("zero-lag value must be real");
    }
    if domain == CoeffDomain::Real && one_sided.iter().any(|c| c.im != 0.0) {
        return invalid("real-domain sequence with complex value");
    }
    Ok(())
}

#[inline]
pub(crate) fn zero_phase_at(one_sided: &[Complex64], omega: f64) -> f64 {
    let z = Complex64::from_polar(1.0, -omega);
    let tail = horner(&one_sided[1..], z) * z;
    one_sided[0].re + 2.0 * tail.re
}

/// Converts radians to units of pi.
pub fn to_pi_units(omega: f64) -> f64 {
    omega / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Zero-padded DFT computed directly from the definition.
    fn dft(h: &[Complex64], len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|k| {
                h.iter().enumerate().fold(c(0.0, 0.0), |acc, (n, &x)| {
                    let ang = -2.0 * PI * (k * n) as f64 / len as f64;
                    acc + x * Complex64::from_polar(1.0, ang)
                })
            })
            .collect()
    }

    #[test]
    fn identity_and_average() {
        let one = FirFilter::from_real(&[1.0]).unwrap();
        for v in evaluate_frequency_response(&one, &[0.0, 1.0, 3.0]) {
            assert_eq!(v, c(1.0, 0.0));
        }
        let avg = FirFilter::from_real(&[0.5, 0.5]).unwrap();
        let v = evaluate_frequency_response(&avg, &[0.0, PI]);
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(v[1].norm() < 1e-15);
        let m = magnitude_response(&avg, &[PI / 2.0]);
        assert!((m[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(magnitude_response(&one, &[0.3, 2.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn empty_filter_rejected() {
        assert!(FirFilter::new(vec![], CoeffDomain::Real).is_err());
        assert!(FirFilter::new(vec![c(1.0, 1.0)], CoeffDomain::Real).is_err());
    }

    #[test]
    fn response_matches_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = FirFilter::from_real(&h).unwrap();
        let len = 1024;
        let omegas: Vec<f64> = (0..len).map(|k| 2.0 * PI * k as f64 / len as f64).collect();
        let got = evaluate_frequency_response(&f, &omegas);
        let want = dft(f.coeffs(), len);
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn autocorrelation_small_cases() {
        let r = autocorrelation_of(&FirFilter::from_real(&[1.0, 1.0]).unwrap());
        assert_eq!(r, vec![c(2.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(two_sided(&r), vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        let r = autocorrelation_of(&FirFilter::from_real(&[1.0]).unwrap());
        assert_eq!(r, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn autocorrelation_matches_inverse_dft_of_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h: Vec<Complex64> =
            (0..12).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f = FirFilter::new(h.clone(), CoeffDomain::Complex).unwrap();
        let len = 64;
        let power: Vec<f64> = dft(&h, len).iter().map(|v| v.norm_sqr()).collect();
        // r[m] = (1/L) sum_k |H_k|^2 e^{+j 2 pi k m / L}
        let r = autocorrelation_of(&f);
        for (m, rm) in r.iter().enumerate() {
            let inv = power.iter().enumerate().fold(c(0.0, 0.0), |acc, (k, &p)| {
                acc + Complex64::from_polar(p, 2.0 * PI * (k * m) as f64 / len as f64)
            }) / len as f64;
            assert!((inv - rm).norm() <= 1e-12, "lag {m}");
        }
    }

    #[test]
    fn zero_phase_examples() {
        let w = [0.0, 0.4, 1.3, 2.9];
        let v = zero_phase_value(&[c(0.0, 0.0), c(0.5, 0.0)], CoeffDomain::Real, &w).unwrap();
        for (a, &om) in v.iter().zip(&w) {
            assert!((a - om.cos()).abs() < 1e-15);
        }
        let v = zero_phase_value(&[c(0.0, 0.0), c(0.0, 0.5)], CoeffDomain::Complex, &w).unwrap();
        for (a, &om) in v.iter().zip(&w) {
            assert!((a - om.sin()).abs() < 1e-15);
        }
        assert!(zero_phase_value(&[c(1.0, 0.1)], CoeffDomain::Complex, &w).is_err());
    }

    #[test]
    fn zero_phase_matches_two_sided_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seq: Vec<Complex64> =
            (0..9).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        seq[0].im = 0.0;
        let full = two_sided(&seq);
        let m = seq.len() as isize - 1;
        let omegas = uniform_omegas(200, CoeffDomain::Complex);
        let v = zero_phase_value(&seq, CoeffDomain::Complex, &omegas).unwrap();
        for (val, &w) in v.iter().zip(&omegas) {
            let direct = full.iter().enumerate().fold(c(0.0, 0.0), |acc, (k, &x)| {
                acc + x * Complex64::from_polar(1.0, -w * (k as isize - m) as f64)
            });
            assert!(direct.im.abs() < 1e-12);
            assert!((direct.re - val).abs() <= 1e-13);
        }
    }

    #[test]
    fn group_delay_cases() {
        let one = FirFilter::from_real(&[1.0]).unwrap();
        assert!(group_delay(&one, &[0.1, 2.0]).iter().all(|d| *d == Some(0.0)));
        let sym = FirFilter::from_real(&[0.3, -0.2, 1.0, 0.7, 1.0, -0.2, 0.3]).unwrap();
        let omegas = uniform_omegas(301, CoeffDomain::Real);
        let gd = group_delay(&sym, &omegas);
        let defined: Vec<f64> = gd.iter().flatten().copied().collect();
        assert!(defined.len() > 250);
        for d in defined {
            assert!((d - 3.0).abs() < 1e-8, "{d}");
        }
        // Exact null at pi is flagged.
        let avg = FirFilter::from_real(&[0.5, 0.5]).unwrap();
        assert_eq!(group_delay(&avg, &[0.0, PI])[1], None);
    }

    #[test]
    fn grid_contract() {
        let bands =
            BandSpec::new(vec![Band::pass(0.0, 0.5), Band::stop(0.6, 1.0)], CoeffDomain::Real)
                .unwrap();
        let g = FrequencyGrid::for_bands(&bands, 16 * 5).unwrap();
        assert!((g.len() as isize - 80).abs() <= 2, "{}", g.len());
        for edge in [0.0, 0.5 * PI, 0.6 * PI, PI] {
            assert_eq!(g.omegas().iter().filter(|&&w| w == edge).count(), 1);
        }
        assert_eq!(g.band_ranges().len(), 2);
    }

    #[test]
    fn band_validation() {
        let r = CoeffDomain::Real;
        assert!(BandSpec::new(vec![Band::pass(0.5, 0.4), Band::stop(0.6, 1.0)], r).is_err());
        assert!(BandSpec::new(vec![Band::pass(0.0, 0.5), Band::stop(0.5, 1.0)], r).is_err());
        assert!(BandSpec::new(vec![Band::pass(0.0, 0.5)], r).is_err());
        assert!(BandSpec::new(vec![Band::pass(-0.5, 0.2), Band::stop(0.4, 1.0)], r).is_err());
        let cx = CoeffDomain::Complex;
        assert!(BandSpec::new(vec![Band::pass(-0.5, 0.2), Band::stop(0.4, 1.0)], cx).is_ok());
        assert!(BandSpec::new(vec![Band::pass(-1.0, 0.2), Band::stop(0.4, 1.0)], cx).is_err());
        assert!(DesignSpec::new(4, vec![Band::pass(0.0, 0.2), Band::stop(0.4, 1.0)], 0.0, r)
            .is_err());
    }
}
