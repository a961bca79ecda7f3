//! Conjugate Gaussian regression blocks with Dirac spike-and-slab selection.
//!
//! The model is `y ~ N(X b, Σ)` with `b_k ~ N(0, D_k)` for included columns
//! and `b_k = 0` otherwise. Callers pass the sufficient statistics
//! `X'Σ⁻¹X` and `X'Σ⁻¹y`; indicators are drawn one at a time from their
//! conditional given the others with `b` integrated out, then the included
//! coefficients are drawn jointly.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::stats::{standard_normal, RandomStream};

pub struct NormalEquations {
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
}

impl NormalEquations {
    pub fn zeros(k: usize) -> Self {
        Self {
            xtx: DMatrix::zeros(k, k),
            xty: DVector::zeros(k),
        }
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    pub fn add(&mut self, other: &NormalEquations) {
        self.xtx += &other.xtx;
        self.xty += &other.xty;
    }

    /// Fills the lower triangle from the upper one.
    pub fn symmetrize_from_upper(&mut self) {
        let k = self.dim();
        for a in 0..k {
            for b in 0..a {
                self.xtx[(a, b)] = self.xtx[(b, a)];
            }
        }
    }
}

/// Posterior precision factor and `X'Σ⁻¹y` restricted to `idx`.
fn restricted(
    eq: &NormalEquations,
    prior_var: &[f64],
    idx: &[usize],
) -> Result<(Cholesky<f64, Dyn>, DVector<f64>)> {
    let m = idx.len();
    let mut p = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    for (r, &a) in idx.iter().enumerate() {
        b[r] = eq.xty[a];
        for (c, &bb) in idx.iter().enumerate() {
            p[(r, c)] = eq.xtx[(a, bb)];
        }
        p[(r, r)] += 1.0 / prior_var[a];
    }
    let chol = Cholesky::new(p).ok_or_else(|| {
        Error::Numerical(format!("posterior precision of a {m}-coefficient block is not positive definite"))
    })?;
    Ok((chol, b))
}

/// Log marginal likelihood of inclusion pattern `idx`, up to a constant that
/// does not depend on the pattern.
pub fn log_marginal(eq: &NormalEquations, prior_var: &[f64], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let (chol, b) = restricted(eq, prior_var, idx)?;
    let l = chol.l_dirty();
    let log_det: f64 = (0..idx.len()).map(|k| l[(k, k)].ln()).sum::<f64>() * 2.0;
    let mut z = b;
    chol.l_dirty()
        .solve_lower_triangular_mut(&mut z);
    let quad = z.norm_squared();
    let log_prior: f64 = idx.iter().map(|&a| prior_var[a].ln()).sum();
    Ok(-0.5 * log_prior - 0.5 * log_det + 0.5 * quad)
}

fn included(delta: &[bool]) -> Vec<usize> {
    delta.iter().enumerate().filter(|(_, &d)| d).map(|(k, _)| k).collect()
}

/// One selection-and-draw update. `selectable[k]` marks columns whose
/// indicator may move; `delta` is updated in place (forced to all-true when
/// `active` is false). Returns the coefficient vector with exact zeros for
/// excluded columns.
pub fn select_and_draw(
    eq: &NormalEquations,
    prior_var: &[f64],
    selectable: &[bool],
    delta: &mut [bool],
    pi: f64,
    active: bool,
    rng: &mut RandomStream,
) -> Result<DVector<f64>> {
    let k = eq.dim();
    debug_assert!(prior_var.len() == k && selectable.len() == k && delta.len() == k);
    for a in 0..k {
        if !selectable[a] || !active {
            delta[a] = true;
        }
    }
    if active {
        let mut order: Vec<usize> = (0..k).filter(|&a| selectable[a]).collect();
        order.shuffle(rng);
        let log_odds_prior = pi.ln() - (1.0 - pi).ln();
        let mut current = log_marginal(eq, prior_var, &included(delta))?;
        for a in order {
            let was = delta[a];
            delta[a] = !was;
            let flipped = log_marginal(eq, prior_var, &included(delta))?;
            let (ml1, ml0) = if was { (current, flipped) } else { (flipped, current) };
            let log_odds = log_odds_prior + ml1 - ml0;
            let p1 = 1.0 / (1.0 + (-log_odds).exp());
            let u: f64 = rand::Rng::random(rng);
            let now = u < p1;
            delta[a] = now;
            current = if now == was { current } else { flipped };
        }
    }
    let idx = included(delta);
    let mut out = DVector::zeros(k);
    if idx.is_empty() {
        return Ok(out);
    }
    let (chol, b) = restricted(eq, prior_var, &idx)?;
    let mean = chol.solve(&b);
    let z = DVector::from_fn(idx.len(), |_, _| standard_normal(rng));
    let dev = chol
        .l_dirty()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Numerical("singular posterior factor".into()))?;
    for (r, &a) in idx.iter().enumerate() {
        out[a] = mean[r] + dev[r];
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite regression draw".into()));
    }
    Ok(out)
}
