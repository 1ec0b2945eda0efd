//! Linear-programming solution of the grid-restricted weighted Chebyshev
//! problem, used as an independent check on the exchange algorithm.
//!
//! The unknowns are the real amplitudes of the basis functions and the
//! deviation `delta`; each grid point contributes the two inequalities
//! `+-W (G - D) <= delta`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::remez::BasisKind;
use crate::spectrum::{BandKind, FrequencyGrid};

/// Optimal coefficients of the discretized problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// One-sided zero-phase coefficients `c[0..=M]`.
    pub one_sided: Vec<Complex64>,
    /// Optimal weighted deviation on the grid.
    pub delta: f64,
}

/// Solves `min_c max_grid |W (G_c - D)|` exactly on `grid` by the simplex
/// method. Intended for small bases; cost grows with grid size times basis
/// size.
pub fn lp_oracle_design(grid: &FrequencyGrid, k: f64, basis: BasisKind) -> Result<LpSolution> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("weight must be positive, got {k}"));
    }
    if grid.len() < basis.size() + 1 {
        return invalid("grid too small for the basis");
    }
    let m = basis.degree();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let cos_vars: Vec<_> = (0..=m).map(|_| lp.add_var(0.0, free)).collect();
    let sin_vars: Vec<_> = match basis {
        BasisKind::CosineOnly(_) => Vec::new(),
        BasisKind::CosineAndSine(_) => (1..=m).map(|_| lp.add_var(0.0, free)).collect(),
    };
    let delta = lp.add_var(1.0, (0.0, f64::INFINITY));

    for (&w, &kind) in grid.omegas().iter().zip(grid.kinds()) {
        let (desired, weight) = match kind {
            BandKind::Pass => (1.0, 1.0),
            BandKind::Stop => (0.0, k),
        };
        let mut row = Vec::with_capacity(basis.size() + 1);
        for (j, &v) in cos_vars.iter().enumerate() {
            row.push((v, weight * (j as f64 * w).cos()));
        }
        for (j, &v) in sin_vars.iter().enumerate() {
            row.push((v, weight * ((j + 1) as f64 * w).sin()));
        }
        let mut upper = row.clone();
        upper.push((delta, -1.0));
        lp.add_constraint(upper.as_slice(), ComparisonOp::Le, weight * desired);
        row.push((delta, 1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, weight * desired);
    }

    let sol = lp
        .solve()
        .map_err(|e| Error::LinearProgram(format!("{e:?}")))?
        .into_solution()
        .map_err(|e| Error::LinearProgram(format!("interrupted: {:?}", e.termination_reason())))?;

    let mut one_sided = Vec::with_capacity(m + 1);
    one_sided.push(Complex64::new(sol.var_value(cos_vars[0]), 0.0));
    for (j, &c) in cos_vars.iter().enumerate().skip(1) {
        let im = sin_vars.get(j - 1).map_or(0.0, |&v| sol.var_value(v));
        one_sided.push(Complex64::new(sol.var_value(c), im) * 0.5);
    }
    Ok(LpSolution { one_sided, delta: sol.var_value(delta) })
}
