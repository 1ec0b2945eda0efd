//! Local-extremum detection on sampled functions and off-grid refinement.

use crate::par::{self, Execution};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of `f` on `[a, b]`. The endpoints
/// and `start` are also compared so a boundary maximum is never lost.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, start: f64) -> (f64, f64) {
    let mut best = (start, f(start));
    for x in [a, b] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    if b <= a {
        return best;
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let scale = a.abs().max(b.abs()).max(1.0);
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Indices of signed local extrema of `values` within each `[start, end)`
/// range: positive local maxima and negative local minima. Range endpoints
/// are compared against their single in-range neighbour.
pub(crate) fn signed_extrema(values: &[f64], ranges: &[(usize, usize)]) -> Vec<usize> {
    let mut out = Vec::new();
    for &(s, e) in ranges {
        for i in s..e {
            let v = values[i];
            if v == 0.0 {
                continue;
            }
            let left = (i > s).then(|| values[i - 1]);
            let right = (i + 1 < e).then(|| values[i + 1]);
            let keep = if v > 0.0 {
                left.is_none_or(|l| v >= l) && right.is_none_or(|r| v >= r)
            } else {
                left.is_none_or(|l| v <= l) && right.is_none_or(|r| v <= r)
            };
            if keep {
                out.push(i);
            }
        }
    }
    out
}

/// Neighbouring grid interval of index `i` clamped to its range.
pub(crate) fn bracket(omegas: &[f64], ranges: &[(usize, usize)], i: usize) -> (f64, f64) {
    let &(s, e) = ranges
        .iter()
        .find(|&&(s, e)| i >= s && i < e)
        .expect("index inside some range");
    let lo = if i > s { omegas[i - 1] } else { omegas[i] };
    let hi = if i + 1 < e { omegas[i + 1] } else { omegas[i] };
    (lo, hi)
}

/// Global extremum of `f` over the sampled `ranges`, with every sampled
/// local extremum refined off the grid. Returns `(omega, value)`.
pub(crate) fn refined_extreme<F>(
    f: &F,
    omegas: &[f64],
    ranges: &[(usize, usize)],
    maximize: bool,
    exec: Execution,
) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let sign = if maximize { 1.0 } else { -1.0 };
    let g = |w: f64| sign * f(w);
    let samples = par::map(exec, omegas, |&w| g(w));
    let mut candidates = Vec::new();
    for &(s, e) in ranges {
        for i in s..e {
            let v = samples[i];
            if (i == s || v >= samples[i - 1]) && (i + 1 == e || v >= samples[i + 1]) {
                candidates.push(i);
            }
        }
    }
    let refined = par::map(exec, &candidates, |&i| {
        let (lo, hi) = bracket(omegas, ranges, i);
        golden_max(g, lo, hi, omegas[i])
    });
    refined
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(w, v)| (w, sign * v))
}

/// A point of the weighted error with its signed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Peak {
    pub omega: f64,
    pub value: f64,
}

/// Collapses runs of equal sign to their largest-magnitude member.
pub(crate) fn merge_sign_runs(peaks: &[Peak]) -> Vec<Peak> {
    let mut out: Vec<Peak> = Vec::with_capacity(peaks.len());
    for &p in peaks {
        match out.last_mut() {
            Some(last) if (last.value > 0.0) == (p.value > 0.0) => {
                if p.value.abs() > last.value.abs() {
                    *last = p;
                }
            }
            _ => out.push(p),
        }
    }
    out
}
