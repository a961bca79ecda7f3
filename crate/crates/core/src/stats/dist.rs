//! Parametric samplers used by the Gibbs sweep.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Inverse gamma with shape `shape` and scale `scale`: `1/X ~ Gamma(shape, rate = scale)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!(
            "inverse gamma needs positive finite shape and scale, got ({shape}, {scale})"
        )));
    }
    let g = Gamma::new(shape, 1.0 / scale)
        .map_err(|e| Error::invalid(format!("gamma({shape}, {scale}): {e}")))?;
    loop {
        let x: f64 = g.sample(rng);
        if x > 0.0 {
            return Ok(1.0 / x);
        }
    }
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("beta needs positive parameters, got ({a}, {b})")));
    }
    let d = Beta::new(a, b).map_err(|e| Error::invalid(format!("beta({a}, {b}): {e}")))?;
    loop {
        let x: f64 = d.sample(rng);
        if x > 0.0 && x < 1.0 {
            return Ok(x);
        }
    }
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Relative tolerance for symmetry and for treating a pivot as zero.
const PSD_TOL: f64 = 1e-12;
/// Jitter ladder (relative to the largest diagonal entry) tried on indefinite input.
const JITTER_LADDER: [f64; 4] = [1e-10, 1e-9, 1e-8, 1e-7];

/// Lower-triangular square root `L` with `L L' = cov`, tolerating exactly
/// singular directions (zero pivots give zero columns).
pub fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::invalid("covariance must be square"));
    }
    let scale = (0..n).map(|i| cov[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            let d = (cov[(i, j)] - cov[(j, i)]).abs();
            if !(d <= 1e-10 * scale) {
                return Err(Error::Numerical(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if let Some(l) = semidefinite_cholesky(cov, scale) {
        return Ok(l);
    }
    for &j in &JITTER_LADDER {
        let mut c = cov.clone();
        for i in 0..n {
            c[(i, i)] += j * scale;
        }
        if let Some(l) = semidefinite_cholesky(&c, scale) {
            return Ok(l);
        }
    }
    Err(Error::Numerical("covariance is indefinite beyond jitter tolerance".into()))
}

fn semidefinite_cholesky(a: &DMatrix<f64>, scale: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let tol = PSD_TOL * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > tol {
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        } else if d >= -tol {
            // Zero pivot: the remaining entries of this column must vanish too.
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > tol.sqrt() * scale.sqrt() {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    Some(l)
}

/// Draw from `N(mean, cov)` for symmetric positive semi-definite `cov`.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if mean.len() != cov.nrows() {
        return Err(Error::invalid(format!(
            "mean has length {} but covariance is {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let l = psd_sqrt(cov)?;
    let z = DVector::from_fn(mean.len(), |_, _| standard_normal(rng));
    Ok(mean + l * z)
}

/// Exact rejection sampler for a log-concave density on the real line.
///
/// `log_density` and `slope` are the unnormalized log density and its
/// derivative; `mode` is the maximizer and `width` a rough scale used to
/// bracket the points where the log density has dropped by one unit. The
/// envelope is flat between those points and follows the tangent lines
/// outside them.
pub fn sample_log_concave<R, H, D>(
    log_density: H,
    slope: D,
    mode: f64,
    width: f64,
    rng: &mut R,
) -> Result<f64>
where
    R: Rng + ?Sized,
    H: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let h0 = log_density(mode);
    if !h0.is_finite() || !(width > 0.0) || !width.is_finite() {
        return Err(Error::Numerical(format!(
            "log-concave sampler: bad mode {mode} or width {width}"
        )));
    }
    let drop_point = |dir: f64| -> Result<f64> {
        let mut step = width;
        let mut far = mode + dir * step;
        let mut tries = 0;
        while log_density(far) > h0 - 1.0 {
            step *= 2.0;
            far = mode + dir * step;
            tries += 1;
            if tries > 200 {
                return Err(Error::Numerical("log-concave sampler: density does not decay".into()));
            }
        }
        let (mut near, mut outer) = (mode, far);
        for _ in 0..60 {
            let mid = 0.5 * (near + outer);
            if log_density(mid) > h0 - 1.0 {
                near = mid;
            } else {
                outer = mid;
            }
        }
        Ok(outer)
    };
    let right = drop_point(1.0)?;
    let left = drop_point(-1.0)?;
    let (h_l, d_l) = (log_density(left) - h0, slope(left));
    let (h_r, d_r) = (log_density(right) - h0, slope(right));
    if !(d_l > 0.0 && d_r < 0.0) {
        return Err(Error::Numerical("log-concave sampler: tangent slopes have wrong sign".into()));
    }
    let mass_l = h_l.exp() / d_l;
    let mass_c = right - left;
    let mass_r = h_r.exp() / -d_r;
    let total = mass_l + mass_c + mass_r;
    for _ in 0..10_000 {
        let pick = rng.random::<f64>() * total;
        let u: f64 = 1.0 - rng.random::<f64>();
        let (s, env) = if pick < mass_l {
            let s = left + u.ln() / d_l;
            (s, h_l + d_l * (s - left))
        } else if pick < mass_l + mass_c {
            (left + (right - left) * u, 0.0)
        } else {
            let s = right + u.ln() / d_r;
            (s, h_r + d_r * (s - right))
        };
        let accept: f64 = 1.0 - rng.random::<f64>();
        if accept.ln() <= log_density(s) - h0 - env {
            return Ok(s);
        }
    }
    Err(Error::Numerical("log-concave sampler: no acceptance in 10000 proposals".into()))
}

/// Generalized inverse Gaussian with density ∝ x^(p−1) exp(−(a x + b/x)/2).
///
/// Requires `a > 0, b > 0`, or `a > 0, b = 0, p > 0` (gamma), or
/// `a = 0, b > 0, p < 0` (inverse gamma).
pub fn sample_gig<R: Rng + ?Sized>(p: f64, a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let proper = p.is_finite()
        && a >= 0.0
        && b >= 0.0
        && a.is_finite()
        && b.is_finite()
        && ((a > 0.0 && b > 0.0) || (a > 0.0 && p > 0.0) || (b > 0.0 && p < 0.0));
    if !proper {
        return Err(Error::invalid(format!("improper GIG(p={p}, a={a}, b={b})")));
    }
    // Sample s = ln x, whose log density p s − (a e^s + b e^−s)/2 is concave.
    let root = (p * p + a * b).sqrt();
    let mode_x = if p >= 0.0 { (p + root) / a } else { b / (root - p) };
    let mode = mode_x.ln();
    let h = |s: f64| p * s - 0.5 * (a * s.exp() + b * (-s).exp());
    let dh = |s: f64| p - 0.5 * (a * s.exp() - b * (-s).exp());
    let curvature = 0.5 * (a * mode_x + b / mode_x);
    let width = 1.0 / curvature.sqrt();
    Ok(sample_log_concave(h, dh, mode, width, rng)?.exp())
}
