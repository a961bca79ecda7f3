//! Univariate truncated normal: closed-form moments and an exact sampler.

use rand::Rng;

use super::normal::{cdf, inv_cdf, mills_ratio, pdf};
use crate::error::{Error, Result};

/// Truncated intervals carrying less probability than this are rejected.
pub const DEGENERATE_MASS_FLOOR: f64 = 1e-300;

/// Standardized lower bound past which the exponential tail sampler is used.
const TAIL_SWITCH: f64 = 0.5;

/// Open interval `(lower, upper)` on the extended real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationBounds {
    lower: f64,
    upper: f64,
}

impl TruncationBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::invalid("truncation bounds must not be NaN"));
        }
        if lower >= upper {
            return Err(Error::invalid(format!(
                "truncation bounds need lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn positive() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn negative() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: 0.0,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

fn check_location_scale(mean: f64, sd: f64) -> Result<()> {
    if !mean.is_finite() {
        return Err(Error::invalid(format!("mean must be finite, got {mean}")));
    }
    if !(sd.is_finite() && sd > 0.0) {
        return Err(Error::invalid(format!("sd must be finite and positive, got {sd}")));
    }
    Ok(())
}

/// `x φ(x)` with the convention `±∞ · φ(±∞) = 0`.
fn x_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * pdf(x)
    }
}

/// Mean and variance of a standard normal restricted to `(alpha, beta)`.
fn standard_moments(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if alpha >= 0.0 {
        // Work relative to φ(alpha) so that upper-tail intervals keep precision.
        let (ratio, beta_term) = if beta.is_infinite() {
            (0.0, 0.0)
        } else {
            let r = (-0.5 * (beta - alpha) * (beta + alpha)).exp();
            (r, beta * r)
        };
        let scaled_mass = mills_ratio(alpha)
            - if ratio == 0.0 { 0.0 } else { mills_ratio(beta) * ratio };
        let mass = pdf(alpha) * scaled_mass;
        if !(mass >= DEGENERATE_MASS_FLOOR) || !(scaled_mass > 0.0) {
            return Err(Error::Degenerate(format!(
                "truncation interval ({alpha}, {beta}) carries probability below {DEGENERATE_MASS_FLOOR:e}"
            )));
        }
        let mean = (1.0 - ratio) / scaled_mass;
        let var = 1.0 + (alpha - beta_term) / scaled_mass - mean * mean;
        Ok((mean, var))
    } else if beta <= 0.0 {
        let (m, v) = standard_moments(-beta, -alpha)?;
        Ok((-m, v))
    } else {
        let mass = cdf(beta) - cdf(alpha);
        if !(mass >= DEGENERATE_MASS_FLOOR) {
            return Err(Error::Degenerate(format!(
                "truncation interval ({alpha}, {beta}) carries probability below {DEGENERATE_MASS_FLOOR:e}"
            )));
        }
        let mean = (pdf(alpha) - pdf(beta)) / mass;
        let var = 1.0 + (x_pdf(alpha) - x_pdf(beta)) / mass - mean * mean;
        Ok((mean, var))
    }
}

/// `(E(Z | a<Z<b), V(Z | a<Z<b))` for `Z ~ N(mean, sd²)`.
pub fn trunc_moments(mean: f64, sd: f64, bounds: TruncationBounds) -> Result<(f64, f64)> {
    check_location_scale(mean, sd)?;
    let alpha = (bounds.lower - mean) / sd;
    let beta = (bounds.upper - mean) / sd;
    let (m, v) = standard_moments(alpha, beta)?;
    if !(v > 0.0) {
        return Err(Error::Degenerate(format!(
            "truncated variance underflowed on ({alpha}, {beta})"
        )));
    }
    Ok((mean + sd * m, sd * sd * v))
}

/// Uniform draw on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard normal restricted to `(alpha, beta)` with `alpha > 0`.
fn upper_tail<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    if beta.is_finite() && 0.5 * (beta - alpha) * (beta + alpha) < 1.0 {
        // Narrow interval: uniform proposal, acceptance at least e^{-1}.
        loop {
            let z = alpha + (beta - alpha) * rng.random::<f64>();
            if open_unit(rng).ln() <= -0.5 * (z - alpha) * (z + alpha) {
                return z;
            }
        }
    }
    let rate = 0.5 * (alpha + (alpha * alpha + 4.0).sqrt());
    loop {
        let z = alpha - open_unit(rng).ln() / rate;
        if z >= beta {
            continue;
        }
        let d = z - rate;
        if open_unit(rng).ln() <= -0.5 * d * d {
            return z;
        }
    }
}

fn standard_draw<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    if alpha > TAIL_SWITCH {
        upper_tail(alpha, beta, rng)
    } else if beta < -TAIL_SWITCH {
        -upper_tail(-beta, -alpha, rng)
    } else {
        let lo = cdf(alpha);
        let hi = cdf(beta);
        let u = lo + (hi - lo) * open_unit(rng);
        inv_cdf(u)
    }
}

/// Draw from `N(mean, sd²)` restricted to the open interval `bounds`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    bounds: TruncationBounds,
    rng: &mut R,
) -> Result<f64> {
    check_location_scale(mean, sd)?;
    let alpha = (bounds.lower - mean) / sd;
    let beta = (bounds.upper - mean) / sd;
    for _ in 0..1000 {
        let x = mean + sd * standard_draw(alpha, beta, rng);
        if bounds.contains(x) {
            return Ok(x);
        }
    }
    Err(Error::Numerical(format!(
        "could not place a draw strictly inside ({}, {})",
        bounds.lower, bounds.upper
    )))
}
