//! Weighted minimax design of zero-phase sequences by Remez exchange.
//!
//! The approximating function is
//! `G(w) = c[0] + sum_{n=1..M} 2 Re(c[n]) cos(nw) + 2 Im(c[n]) sin(nw)`,
//! restricted to the cosine terms for [`BasisKind::CosineOnly`]. The target
//! is 1 on passbands and 0 on stopbands, with weight 1 on passbands and `K`
//! on stopbands.
//!
//! The cosine basis uses the classical barycentric form in `x = cos w`. The
//! cosine+sine basis solves the full `(2M+2)`-unknown reference system at
//! every iteration. After each exchange the grid extrema are refined off the
//! grid by golden-section search, so the converged design approximates the
//! continuous-frequency optimum rather than the grid-restricted one.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::extrema::{bracket, golden_max, merge_sign_runs, signed_extrema, Peak};
use crate::par::{self, Execution};
use crate::spectrum::{to_pi_units, zero_phase_at, BandKind, BandSpec, CoeffDomain, FrequencyGrid};

/// Basis spanned by the zero-phase approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BasisKind {
    /// `{cos(nw) : n = 0..=M}`
    CosineOnly(usize),
    /// `{cos(nw) : n = 0..=M} ∪ {sin(nw) : n = 1..=M}`
    CosineAndSine(usize),
}

impl BasisKind {
    pub fn for_domain(domain: CoeffDomain, degree: usize) -> Self {
        match domain {
            CoeffDomain::Real => BasisKind::CosineOnly(degree),
            CoeffDomain::Complex => BasisKind::CosineAndSine(degree),
        }
    }

    pub fn degree(self) -> usize {
        match self {
            BasisKind::CosineOnly(m) | BasisKind::CosineAndSine(m) => m,
        }
    }

    /// Number of basis functions.
    pub fn size(self) -> usize {
        match self {
            BasisKind::CosineOnly(m) => m + 1,
            BasisKind::CosineAndSine(m) => 2 * m + 1,
        }
    }

    /// Number of alternations characterizing the best approximation.
    pub fn required_alternations(self) -> usize {
        self.size() + 1
    }

    pub fn domain(self) -> CoeffDomain {
        match self {
            BasisKind::CosineOnly(_) => CoeffDomain::Real,
            BasisKind::CosineAndSine(_) => CoeffDomain::Complex,
        }
    }
}

/// Result of a converged exchange.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroPhaseDesign {
    /// One-sided coefficients `c[0..=M]`; real for the cosine basis.
    pub one_sided: Vec<Complex64>,
    pub basis: BasisKind,
    /// Stopband weight `K` used in the design.
    pub applied_weight: f64,
    /// Maximum weighted error (equal to the passband deviation).
    pub delta_p: f64,
    /// Final reference frequencies in radians, sorted.
    pub extremal_freqs: Vec<f64>,
    pub iterations: usize,
    /// `|delta|` of the reference system at every iteration.
    pub delta_history: Vec<f64>,
}

impl ZeroPhaseDesign {
    pub fn value_at(&self, omega: f64) -> f64 {
        zero_phase_at(&self.one_sided, omega)
    }

    /// Stopband deviation `delta_p / K`.
    pub fn delta_s(&self) -> f64 {
        self.delta_p / self.applied_weight
    }
}

/// Exchange controls.
#[derive(Debug, Clone, PartialEq)]
pub struct RemezOptions {
    pub max_iter: usize,
    /// Stop when `|delta|` changes by at most this much, relatively.
    pub rel_delta_tol: f64,
    /// Stop when the extremal magnitudes agree to this relative spread.
    pub spread_tol: f64,
    /// Refine grid extrema off the grid. Disable to solve the
    /// grid-restricted problem exactly.
    pub refine: bool,
    /// Once the spread is below this level, stop if it has not improved for
    /// `stall_iters` iterations and return the best iterate. Guards against
    /// cycling at the rounding floor for large bases.
    pub stall_tol: f64,
    pub stall_iters: usize,
    /// Starting reference (radians); must have the required length.
    pub initial_reference: Option<Vec<f64>>,
    pub exec: Execution,
}

impl Default for RemezOptions {
    fn default() -> Self {
        RemezOptions {
            max_iter: 100,
            rel_delta_tol: 1e-12,
            spread_tol: 1e-8,
            refine: true,
            stall_tol: 1e-6,
            stall_iters: 5,
            initial_reference: None,
            exec: Execution::default(),
        }
    }
}

/// Default grid density in points per basis function.
pub const DEFAULT_GRID_DENSITY: usize = 16;

/// Dense design grid of about `density * basis_size` points.
pub fn build_grid(bands: &BandSpec, basis_size: usize, density: usize) -> Result<FrequencyGrid> {
    if density < 4 {
        return invalid(format!("grid density must be at least 4, got {density}"));
    }
    FrequencyGrid::for_bands(bands, density * basis_size.max(1))
}

/// Coefficients and signed deviation solving the reference interpolation
/// problem `W(w_i) (G(w_i) - D(w_i)) = (-1)^i delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub one_sided: Vec<Complex64>,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy)]
struct Target {
    desired: f64,
    weight: f64,
}

fn target_at(bands: &BandSpec, k: f64, omega: f64) -> Result<Target> {
    match bands.kind_at(omega) {
        Some(kind) => Ok(target_of(kind, k)),
        None => invalid(format!("frequency {} pi is outside every band", to_pi_units(omega))),
    }
}

fn target_of(kind: BandKind, k: f64) -> Target {
    match kind {
        BandKind::Pass => Target { desired: 1.0, weight: 1.0 },
        BandKind::Stop => Target { desired: 0.0, weight: k },
    }
}

/// Current approximant during the exchange.
enum Interpolant {
    /// Barycentric form over `x = cos w` (cosine basis).
    Barycentric { nodes: Vec<f64>, values: Vec<f64>, weights: Vec<f64> },
    /// Explicit one-sided coefficients.
    Coefficients(Vec<Complex64>),
}

fn barycentric_eval(nodes: &[f64], values: &[f64], weights: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xi, &yi), &bi) in nodes.iter().zip(values).zip(weights) {
        let d = x - xi;
        if d == 0.0 {
            return yi;
        }
        let t = bi / d;
        num += t * yi;
        den += t;
    }
    num / den
}

impl Interpolant {
    fn eval(&self, omega: f64) -> f64 {
        match self {
            Interpolant::Barycentric { nodes, values, weights } => barycentric_eval(nodes, values, weights, omega.cos()),
            Interpolant::Coefficients(c) => zero_phase_at(c, omega),
        }
    }

    fn one_sided(&self) -> Vec<Complex64> {
        match self {
            Interpolant::Coefficients(c) => c.clone(),
            Interpolant::Barycentric { nodes, values, .. } => {
                // Collocation at the interpolation nodes. Sampling elsewhere
                // would evaluate the interpolant inside transition bands,
                // where its Lebesgue function is large and the rounding
                // reaches the stopband as an absolute error.
                let m = nodes.len() - 1;
                let a = nalgebra::DMatrix::<f64>::from_fn(m + 1, m + 1, |i, k| (k as f64 * nodes[i].acos()).cos());
                let y = nalgebra::DVector::from_column_slice(values);
                let lu = a.clone().lu();
                let amps = match lu.solve(&y) {
                    Some(mut c) => {
                        // one step of iterative refinement
                        if let Some(d) = lu.solve(&(&y - &a * &c)) {
                            c += d;
                        }
                        c
                    }
                    None => return self.sampled_one_sided(),
                };
                amps.iter()
                    .enumerate()
                    .map(|(n, &v)| Complex64::new(if n == 0 { v } else { 0.5 * v }, 0.0))
                    .collect()
            }
        }
    }

    // Coefficients from samples at `pi j / M` and an inverse DCT-I.
    fn sampled_one_sided(&self) -> Vec<Complex64> {
        match self {
            Interpolant::Coefficients(c) => c.clone(),
            Interpolant::Barycentric { nodes, .. } => {
                let m = nodes.len() - 1;
                if m == 0 {
                    return vec![Complex64::new(self.eval(0.0), 0.0)];
                }
                // Sample at w_j = pi j / M and invert the DCT-I.
                let samples: Vec<f64> = (0..=m)
                    .map(|j| self.eval(std::f64::consts::PI * j as f64 / m as f64))
                    .collect();
                let two_m = 2 * m;
                let cos_table: Vec<f64> = (0..two_m)
                    .map(|k| (std::f64::consts::PI * k as f64 / m as f64).cos())
                    .collect();
                (0..=m)
                    .map(|n| {
                        let mut acc = 0.0;
                        for (j, &s) in samples.iter().enumerate() {
                            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                            acc += w * s * cos_table[(n * j) % two_m];
                        }
                        let mut a = 2.0 * acc / m as f64;
                        if n == 0 || n == m {
                            a *= 0.5;
                        }
                        // cosine amplitude a_n = 2 c[n] for n >= 1
                        Complex64::new(if n == 0 { a } else { 0.5 * a }, 0.0)
                    })
                    .collect()
            }
        }
    }
}

// Barycentric weights proportional to 1 / prod_{j != i} (x_i - x_j). The
// products over/underflow for a few hundred clustered nodes, so they are
// formed in log space and normalized by the largest; only ratios are used.
fn barycentric_weights(x: &[f64]) -> Option<Vec<f64>> {
    let mut logs = Vec::with_capacity(x.len());
    let mut signs = Vec::with_capacity(x.len());
    for (i, &xi) in x.iter().enumerate() {
        let mut log = 0.0;
        let mut negative = false;
        for (j, &xj) in x.iter().enumerate() {
            if i != j {
                let d = xi - xj;
                if d == 0.0 {
                    return None;
                }
                log -= d.abs().ln();
                negative ^= d < 0.0;
            }
        }
        logs.push(log);
        signs.push(if negative { -1.0 } else { 1.0 });
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(logs.iter().zip(&signs).map(|(l, s)| s * (l - top).exp()).collect())
}

fn singular(refs: &[f64]) -> Error {
    Error::SingularSystem { refs: refs.iter().map(|&w| to_pi_units(w)).collect() }
}

fn solve_reference(refs: &[f64], targets: &[Target], basis: BasisKind) -> Result<(Interpolant, f64)> {
    let need = basis.required_alternations();
    if refs.len() != need {
        return invalid(format!("reference set has {} points, need {need}", refs.len()));
    }
    match basis {
        BasisKind::CosineOnly(m) => {
            if refs.iter().any(|&w| !(0.0..=std::f64::consts::PI).contains(&w)) {
                return invalid("cosine basis requires reference frequencies in [0, pi]");
            }
            let x: Vec<f64> = refs.iter().map(|w| w.cos()).collect();
            let gamma = barycentric_weights(&x).ok_or_else(|| singular(refs))?;
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, (g, t)) in gamma.iter().zip(targets).enumerate() {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                num += g * t.desired;
                den += g * sign / t.weight;
            }
            if den == 0.0 || !den.is_finite() || !num.is_finite() {
                return Err(singular(refs));
            }
            let delta = -num / den;
            // Interpolate through all points but one. Dropping the point with
            // the largest weight minimizes the Lebesgue function there, so the
            // rounding error in delta is not amplified at the dropped point.
            let drop = gamma
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| i)
                .expect("nonempty reference");
            debug_assert_eq!(x.len(), m + 2);
            let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            let mut nodes = Vec::with_capacity(m + 1);
            let mut base = Vec::with_capacity(m + 1);
            let mut slope = Vec::with_capacity(m + 1);
            let mut weights = Vec::with_capacity(m + 1);
            for (i, t) in targets.iter().enumerate() {
                if i == drop {
                    continue;
                }
                nodes.push(x[i]);
                base.push(t.desired);
                slope.push(sign(i) / t.weight);
                weights.push(gamma[i] * (x[i] - x[drop]));
            }
            let values: Vec<f64> = base.iter().zip(&slope).map(|(b, s)| b + s * delta).collect();
            Ok((Interpolant::Barycentric { nodes, values, weights }, delta))
        }
        BasisKind::CosineAndSine(m) => {
            let n = 2 * m + 2;
            let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
            let mut rhs = nalgebra::DVector::<f64>::zeros(n);
            for (i, (&w, t)) in refs.iter().zip(targets).enumerate() {
                a[(i, 0)] = 1.0;
                for k in 1..=m {
                    let (s, c) = (k as f64 * w).sin_cos();
                    a[(i, k)] = c;
                    a[(i, m + k)] = s;
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                a[(i, n - 1)] = -sign / t.weight;
                rhs[i] = t.desired;
            }
            let lu = a.lu();
            let sol = lu.solve(&rhs).ok_or_else(|| singular(refs))?;
            if sol.iter().any(|v| !v.is_finite()) {
                return Err(singular(refs));
            }
            let mut one_sided = Vec::with_capacity(m + 1);
            one_sided.push(Complex64::new(sol[0], 0.0));
            for k in 1..=m {
                one_sided.push(Complex64::new(0.5 * sol[k], 0.5 * sol[m + k]));
            }
            Ok((Interpolant::Coefficients(one_sided), sol[n - 1]))
        }
    }
}

/// Solves the interpolation problem on an explicit reference set.
pub fn solve_reference_system(
    refs: &[f64],
    bands: &BandSpec,
    k: f64,
    basis: BasisKind,
) -> Result<ReferenceSolution> {
    if refs.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("reference frequencies must be strictly increasing");
    }
    let targets = refs.iter().map(|&w| target_at(bands, k, w)).collect::<Result<Vec<_>>>()?;
    let (interp, delta) = solve_reference(refs, &targets, basis)?;
    Ok(ReferenceSolution { one_sided: interp.one_sided(), delta })
}

/// Grid with precomputed desired values and weights.
struct Problem<'a> {
    grid: &'a FrequencyGrid,
    ranges: Vec<(usize, usize)>,
    targets: Vec<Target>,
    bands: &'a BandSpec,
}

impl<'a> Problem<'a> {
    fn new(grid: &'a FrequencyGrid, bands: &'a BandSpec, k: f64) -> Self {
        let targets = grid.kinds().iter().map(|&kind| target_of(kind, k)).collect();
        Problem { grid, ranges: grid.band_ranges(), targets, bands }
    }
}

/// Outcome of one exchange: the new reference with its error values.
struct Exchange {
    peaks: Vec<Peak>,
}

fn exchange(
    prob: &Problem<'_>,
    interp: &Interpolant,
    current: &[Peak],
    delta: f64,
    required: usize,
    refine: bool,
    exec: Execution,
) -> Result<Exchange> {
    let omegas = prob.grid.omegas();
    let err = |w: f64, t: Target| t.weight * (interp.eval(w) - t.desired);
    let errors = par::map_range(exec, omegas.len(), |i| err(omegas[i], prob.targets[i]));
    let idx = signed_extrema(&errors, &prob.ranges);

    let peaks: Vec<Peak> = par::map(exec, &idx, |&i| {
        if !refine {
            return Peak { omega: omegas[i], value: errors[i] };
        }
        let t = prob.targets[i];
        let sign = errors[i].signum();
        let (lo, hi) = bracket(omegas, &prob.ranges, i);
        let (w, v) = golden_max(|w| sign * err(w, t), lo, hi, omegas[i]);
        Peak { omega: w, value: sign * v }
    });
    // Reference entries win over coincident grid extrema. A zero levelled
    // error carries no sign, so the grid extrema decide alone.
    let mut tagged: Vec<(Peak, bool)> = peaks.into_iter().map(|p| (p, false)).collect();
    tagged.extend(current.iter().filter(|p| p.value != 0.0).map(|&p| (p, true)));
    tagged.sort_by(|a, b| a.0.omega.total_cmp(&b.0.omega).then(b.1.cmp(&a.1)));
    tagged.dedup_by(|b, a| {
        if (b.0.omega - a.0.omega).abs() > 1e-13 {
            return false;
        }
        if !a.1 && (b.1 || b.0.value.abs() > a.0.value.abs()) {
            *a = *b;
        }
        true
    });
    let mut peaks: Vec<Peak> = tagged.into_iter().map(|(p, _)| p).collect();
    let level = delta.abs() * (1.0 - 1e-7);
    peaks.retain(|p| p.value.abs() >= level);
    let peaks = reduce_to(merge_sign_runs(&peaks), required);
    if peaks.len() < required {
        return Err(Error::TooFewExtrema { found: peaks.len(), required });
    }
    Ok(Exchange { peaks })
}

/// Drops alternating extrema until `required` remain, never dropping the
/// largest. Interior removals take out the smallest point together with its
/// smaller neighbour so the signs keep alternating.
fn reduce_to(mut peaks: Vec<Peak>, required: usize) -> Vec<Peak> {
    while peaks.len() > required {
        let n = peaks.len();
        if n - required == 1 {
            if peaks[0].value.abs() < peaks[n - 1].value.abs() {
                peaks.remove(0);
            } else {
                peaks.pop();
            }
            continue;
        }
        let (imin, _) = peaks
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.value.abs().total_cmp(&b.1.value.abs()))
            .expect("nonempty");
        if imin == 0 || imin == n - 1 {
            peaks.remove(imin);
        } else {
            peaks.remove(imin);
            // neighbours now share a sign; keep the larger of the two
            let (l, r) = (imin - 1, imin);
            if peaks[l].value.abs() >= peaks[r].value.abs() {
                peaks.remove(r);
            } else {
                peaks.remove(l);
            }
        }
    }
    peaks
}

fn initial_reference(prob: &Problem<'_>, required: usize, given: Option<&[f64]>) -> Vec<f64> {
    if let Some(refs) = given {
        if refs.len() == required
            && refs.windows(2).all(|w| w[1] > w[0])
            && refs.iter().all(|&w| prob.bands.kind_at(w).is_some())
        {
            return refs.to_vec();
        }
    }
    let picks = spread_reference(prob, required);
    let bands = prob.grid.band_index();
    let covered = (0..prob.ranges.len()).all(|b| picks.iter().any(|&i| bands[i] == b));
    let picks = if covered || required < prob.ranges.len() { picks } else { per_band_reference(prob, required) };
    picks.into_iter().map(|i| prob.grid.omegas()[i]).collect()
}

// Grid indices spread evenly over the band measure.
fn spread_reference(prob: &Problem<'_>, required: usize) -> Vec<usize> {
    let omegas = prob.grid.omegas();
    let mut cumulative = Vec::with_capacity(omegas.len());
    let mut acc = 0.0;
    for i in 0..omegas.len() {
        if i > 0 && prob.grid.band_index()[i] == prob.grid.band_index()[i - 1] {
            acc += omegas[i] - omegas[i - 1];
        }
        cumulative.push(acc);
    }
    let total = acc;
    let n = omegas.len();
    let mut picks: Vec<usize> = Vec::with_capacity(required);
    for k in 0..required {
        let target = total * k as f64 / (required - 1).max(1) as f64;
        let mut i = cumulative.partition_point(|&c| c < target).min(n - 1);
        if i > 0 && (target - cumulative[i - 1]) < (cumulative[i] - target) {
            i -= 1;
        }
        // keep strictly increasing while leaving room for the rest
        let min_i = picks.last().map_or(0, |&p| p + 1);
        let max_i = n - (required - k);
        picks.push(i.clamp(min_i, max_i));
    }
    picks
}

// Grid indices allotted to bands by measure with at least one per band, for
// narrow bands the plain spread would skip.
fn per_band_reference(prob: &Problem<'_>, required: usize) -> Vec<usize> {
    let omegas = prob.grid.omegas();
    let ranges = &prob.ranges;
    let widths: Vec<f64> = ranges.iter().map(|&(s, e)| omegas[e - 1] - omegas[s]).collect();
    let total: f64 = widths.iter().sum();
    let nb = ranges.len();
    let mut counts: Vec<usize> = widths
        .iter()
        .zip(ranges)
        .map(|(&w, &(s, e))| {
            let share = if total > 0.0 { w / total } else { 1.0 / nb as f64 };
            ((required as f64 * share).round() as usize).max(1).min(e - s)
        })
        .collect();
    // Fix the total on the band furthest from its share that has room.
    while counts.iter().sum::<usize>() != required {
        let over = counts.iter().sum::<usize>() > required;
        let key = |i: usize| (counts[i] as f64 + 0.5) / widths[i].max(f64::MIN_POSITIVE);
        let pick = (0..nb)
            .filter(|&b| if over { counts[b] > 1 } else { counts[b] < ranges[b].1 - ranges[b].0 })
            .max_by(|&a, &b| if over { key(a).total_cmp(&key(b)) } else { key(b).total_cmp(&key(a)) });
        match pick {
            Some(b) if over => counts[b] -= 1,
            Some(b) => counts[b] += 1,
            None => break,
        }
    }
    let mut picks: Vec<usize> = Vec::with_capacity(required);
    for (&(s, e), &c) in ranges.iter().zip(&counts) {
        let len = e - s;
        for j in 0..c {
            let pos = if c == 1 { (len - 1) / 2 } else { (j * (len - 1) + (c - 1) / 2) / (c - 1) };
            let min_i = picks.last().map_or(s, |&p| p + 1);
            picks.push((s + pos).max(min_i).min(e - (c - j)));
        }
    }
    picks
}

/// Weighted minimax approximation of the 0/1 band target on `grid`.
pub fn design_zero_phase(
    bands: &BandSpec,
    k: f64,
    basis: BasisKind,
    grid: &FrequencyGrid,
    opts: &RemezOptions,
) -> Result<ZeroPhaseDesign> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("weight must be positive, got {k}"));
    }
    let required = basis.required_alternations();
    if basis.size() + 2 > grid.len() {
        return invalid(format!(
            "basis of size {} needs at least {} grid points, grid has {}",
            basis.size(),
            basis.size() + 2,
            grid.len()
        ));
    }
    let prob = Problem::new(grid, bands, k);
    let mut refs = initial_reference(&prob, required, opts.initial_reference.as_deref());
    let mut history = Vec::new();
    let mut last_delta = f64::NAN;
    let mut best: Option<(f64, usize, ZeroPhaseDesign)> = None;

    for iter in 1..=opts.max_iter {
        let targets = refs.iter().map(|&w| target_at(bands, k, w)).collect::<Result<Vec<_>>>()?;
        let (interp, delta) = solve_reference(&refs, &targets, basis)?;
        history.push(delta.abs());
        // By construction the reference error is exactly (-1)^i delta;
        // re-evaluating it would only add rounding noise.
        let current: Vec<Peak> = refs
            .iter()
            .enumerate()
            .map(|(i, &w)| Peak { omega: w, value: if i % 2 == 0 { delta } else { -delta } })
            .collect();
        let ex = exchange(&prob, &interp, &current, delta, required, opts.refine, opts.exec)?;
        let mags: Vec<f64> = ex.peaks.iter().map(|p| p.value.abs()).collect();
        let max = mags.iter().copied().fold(0.0, f64::max);
        let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = if max > 0.0 { (max - min) / max } else { 0.0 };
        let settled = last_delta.is_finite()
            && (delta.abs() - last_delta).abs() <= opts.rel_delta_tol * delta.abs();
        last_delta = delta.abs();
        let new_refs: Vec<f64> = ex.peaks.iter().map(|p| p.omega).collect();
        let design = |refs: Vec<f64>, history: &[f64]| ZeroPhaseDesign {
            one_sided: interp.one_sided(),
            basis,
            applied_weight: k,
            delta_p: max,
            extremal_freqs: refs,
            iterations: iter,
            delta_history: history.to_vec(),
        };
        if spread <= opts.spread_tol || settled {
            return Ok(design(new_refs, &history));
        }
        if spread <= opts.stall_tol && best.as_ref().is_none_or(|b| spread < b.0) {
            best = Some((spread, iter, design(new_refs.clone(), &history)));
        }
        if let Some((_, at, _)) = &best {
            if iter - at >= opts.stall_iters {
                let (_, _, mut d) = best.take().expect("checked");
                d.delta_history = history;
                return Ok(d);
            }
        }
        refs = new_refs;
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, last_delta, last_reference: refs })
}

/// One exchange applied to an existing design: returns the new reference set
/// (radians) chosen from the extrema of its weighted error on `grid`.
pub fn exchange_step(
    design: &ZeroPhaseDesign,
    bands: &BandSpec,
    grid: &FrequencyGrid,
    refine: bool,
) -> Result<Vec<f64>> {
    let prob = Problem::new(grid, bands, design.applied_weight);
    let interp = Interpolant::Coefficients(design.one_sided.clone());
    // Use the smallest reference magnitude as the acceptance level.
    let level = design
        .extremal_freqs
        .iter()
        .map(|&w| {
            target_at(bands, design.applied_weight, w)
                .map(|t| (t.weight * (interp.eval(w) - t.desired)).abs())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let current = design
        .extremal_freqs
        .iter()
        .map(|&w| {
            target_at(bands, design.applied_weight, w)
                .map(|t| Peak { omega: w, value: t.weight * (interp.eval(w) - t.desired) })
        })
        .collect::<Result<Vec<_>>>()?;
    let ex = exchange(
        &prob,
        &interp,
        &current,
        level,
        design.basis.required_alternations(),
        refine,
        Execution::default(),
    )?;
    Ok(ex.peaks.iter().map(|p| p.omega).collect())
}

/// Signed weighted error `W (G - D)` of a design at each grid point.
pub fn weighted_error(design: &ZeroPhaseDesign, grid: &FrequencyGrid) -> Vec<f64> {
    grid.omegas()
        .iter()
        .zip(grid.kinds())
        .map(|(&w, &kind)| {
            let t = target_of(kind, design.applied_weight);
            t.weight * (design.value_at(w) - t.desired)
        })
        .collect()
}
