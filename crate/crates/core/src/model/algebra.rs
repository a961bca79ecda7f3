//! Deterministic model algebra: structural means, the joint error
//! covariance, moments of observed outcomes, and identification checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::data::{Arm, PanelDataset};
use super::params::{Coefficients, FactorLoadings, IdiosyncraticVariances, ParameterDraw};
use crate::error::{Error, Result};
use crate::stats::normal::{ln_pdf, mills_ratio, mills_terms};
use crate::stats::truncnorm::DEGENERATE_MASS_FLOOR;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean of the potential outcome of `arm` in period `t` (0-based) for covariates `w`.
pub fn structural_mean(arm: Arm, t: usize, w: &[f64], coeffs: &Coefficients) -> Result<f64> {
    if t >= coeffs.mu.len() || t >= coeffs.kappa.len() {
        return Err(Error::invalid(format!("period {t} outside panel of length {}", coeffs.mu.len())));
    }
    if w.len() != coeffs.gamma.len() || w.len() != coeffs.theta.len() {
        return Err(Error::invalid(format!(
            "covariate row has {} entries, coefficients expect {}",
            w.len(),
            coeffs.gamma.len()
        )));
    }
    let control = coeffs.mu[t] + dot(w, &coeffs.gamma);
    Ok(match arm {
        Arm::Control => control,
        Arm::Treated => control + coeffs.kappa[t] + dot(w, &coeffs.theta),
    })
}

/// The `(2T+1) × 3` loadings matrix acting on `(f_c, f_0, f_1)`.
pub fn loading_matrix(loadings: &FactorLoadings) -> DMatrix<f64> {
    let t = loadings.periods();
    let mut m = DMatrix::zeros(2 * t + 1, 3);
    m[(0, 0)] = loadings.lambda_x;
    for s in 0..t {
        m[(1 + s, 0)] = loadings.lambda0[s];
        m[(1 + s, 1)] = loadings.zeta0[s];
        m[(1 + t + s, 0)] = loadings.lambda1[s];
        m[(1 + t + s, 2)] = loadings.zeta1[s];
    }
    m
}

/// Joint covariance of `(ε_x, ε_0', ε_1')'`, assembled block by block.
pub fn build_joint_covariance(
    loadings: &FactorLoadings,
    variances: &IdiosyncraticVariances,
) -> Result<DMatrix<f64>> {
    loadings.check()?;
    let t = loadings.periods();
    if variances.sigma2_0.len() != t || variances.sigma2_1.len() != t {
        return Err(Error::invalid(format!(
            "variances have length {} but loadings have T={t}",
            variances.sigma2_0.len()
        )));
    }
    let lx = loadings.lambda_x;
    let (l0, l1, z0, z1) = (&loadings.lambda0, &loadings.lambda1, &loadings.zeta0, &loadings.zeta1);
    let mut sigma = DMatrix::zeros(2 * t + 1, 2 * t + 1);
    sigma[(0, 0)] = 1.0 + lx * lx;
    for r in 0..t {
        sigma[(0, 1 + r)] = lx * l0[r];
        sigma[(1 + r, 0)] = lx * l0[r];
        sigma[(0, 1 + t + r)] = lx * l1[r];
        sigma[(1 + t + r, 0)] = lx * l1[r];
        for c in 0..t {
            sigma[(1 + r, 1 + c)] = l0[r] * l0[c] + z0[r] * z0[c];
            sigma[(1 + t + r, 1 + t + c)] = l1[r] * l1[c] + z1[r] * z1[c];
            let cross = l0[r] * l1[c];
            sigma[(1 + r, 1 + t + c)] = cross;
            sigma[(1 + t + c, 1 + r)] = cross;
        }
        sigma[(1 + r, 1 + r)] += variances.sigma2_0[r];
        sigma[(1 + t + r, 1 + t + r)] += variances.sigma2_1[r];
    }
    Ok(sigma)
}

/// Relative eigenvalue floor below which a symmetric matrix is not PSD.
pub const PSD_EIGEN_FLOOR: f64 = 1e-8;

/// Symmetric PSD check: smallest eigenvalue ≥ −1e-8 · largest eigenvalue.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    if m.nrows() == 0 {
        return true;
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    min >= -PSD_EIGEN_FLOOR * max.abs().max(f64::MIN_POSITIVE)
}

/// `α / sqrt(1 + λ_x²)`: the scale-free selection effects.
pub fn standardize_alpha(coeffs: &Coefficients, loadings: &FactorLoadings) -> Vec<f64> {
    standardize_alpha_raw(&coeffs.alpha, loadings.lambda_x)
}

pub(crate) fn standardize_alpha_raw(alpha: &[f64], lambda_x: f64) -> Vec<f64> {
    let sx = (1.0 + lambda_x * lambda_x).sqrt();
    alpha.iter().map(|a| a / sx).collect()
}

/// Mean vector and covariance matrix of the observed outcomes of a subject
/// in `arm`, i.e. of `y_j | x = j`, over the `w_rows.len()` periods given.
pub fn observed_outcome_moments(
    arm: Arm,
    v: &[f64],
    w_rows: &[&[f64]],
    params: &ParameterDraw,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let coeffs = &params.coefficients;
    let loadings = &params.loadings;
    if v.len() != coeffs.alpha.len() {
        return Err(Error::invalid(format!(
            "selection row has {} entries, alpha has {}",
            v.len(),
            coeffs.alpha.len()
        )));
    }
    let periods = w_rows.len();
    if periods > coeffs.periods() {
        return Err(Error::invalid("more covariate rows than panel periods"));
    }
    let sigma = build_joint_covariance(loadings, &params.variances)?;
    let full_t = loadings.periods();
    let j = arm.index();
    let offset = 1 + j * full_t;
    let sx = sigma[(0, 0)].sqrt();
    let m = dot(v, &standardize_alpha(coeffs, loadings));

    // log P(x = j) = ln Φ(m) or ln(1 − Φ(m)); both via φ·R to stay finite.
    let ln_prob = match arm {
        Arm::Control => ln_pdf(m) + mills_ratio(m).ln(),
        Arm::Treated => ln_pdf(m) + mills_ratio(-m).ln(),
    };
    if !(ln_prob >= DEGENERATE_MASS_FLOOR.ln()) {
        return Err(Error::Degenerate(format!(
            "selection probability of arm {j} underflows at standardized index {m}"
        )));
    }
    let (c0, c1) = mills_terms(m);
    let c = if j == 0 { c0 } else { c1 };
    let shrink = c * (m + c);

    let mut mean = DVector::zeros(periods);
    let mut cov = DMatrix::zeros(periods, periods);
    let tilde: Vec<f64> = (0..periods).map(|t| sigma[(0, offset + t)] / sx).collect();
    for t in 0..periods {
        mean[t] = structural_mean(arm, t, w_rows[t], coeffs)? + tilde[t] * c;
        for s in 0..=t {
            let c = sigma[(offset + t, offset + s)] - shrink * tilde[t] * tilde[s];
            cov[(t, s)] = c;
            cov[(s, t)] = c;
        }
    }
    Ok((mean, cov))
}

/// Counting condition for identifying `r` specific factors per arm from a
/// panel of length `periods`: `T(T+1) ≥ 2(r+1)T + 1`.
pub fn check_identification(periods: usize, r: usize) -> bool {
    let (lhs, rhs) = identification_sides(periods, r);
    lhs >= rhs
}

fn identification_sides(periods: usize, r: usize) -> (usize, usize) {
    (periods * (periods + 1), 2 * (r + 1) * periods + 1)
}

pub fn require_identified(periods: usize, r: usize) -> Result<()> {
    let (lhs, rhs) = identification_sides(periods, r);
    if lhs >= rhs {
        Ok(())
    } else {
        Err(Error::NotIdentified { t: periods, r, lhs, rhs })
    }
}

/// `κ_t + w̄_t · θ` for per-period mean covariate rows `wbar`.
pub fn ate_from_means(kappa: &[f64], theta: &[f64], wbar: &[Vec<f64>]) -> Vec<f64> {
    kappa
        .iter()
        .zip(wbar)
        .map(|(k, w)| k + dot(w, theta))
        .collect()
}

/// In-sample average treatment effect per period.
pub fn ate_true(coeffs: &Coefficients, data: &PanelDataset) -> Result<Vec<f64>> {
    coeffs.check_dims(data.p_v(), data.periods(), data.p_w())?;
    Ok(ate_from_means(&coeffs.kappa, &coeffs.theta, &data.period_covariate_means()))
}
