//! Standard normal density, distribution and Mills-ratio helpers.
//!
//! Tail probabilities go through `erfc`, and the Mills ratio switches to a
//! continued fraction past `x = 5`, so nothing here forms `1 - Φ(x)` by
//! subtraction in the upper tail.

use std::f64::consts::FRAC_1_SQRT_2;

use libm::erfc;
use statrs::function::erf::erfc_inv;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Beyond this point the Mills ratio is evaluated by continued fraction.
const MILLS_CF_THRESHOLD: f64 = 5.0;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), evaluated without cancellation.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// ln Φ(x), finite far into the lower tail.
pub fn ln_cdf(x: f64) -> f64 {
    if x > -5.0 {
        cdf(x).ln()
    } else {
        // Φ(x) = φ(x) R(−x)
        ln_pdf(x) + mills_ratio(-x).ln()
    }
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn inv_cdf(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Mills ratio R(x) = (1 − Φ(x)) / φ(x).
pub fn mills_ratio(x: f64) -> f64 {
    if x > MILLS_CF_THRESHOLD {
        mills_ratio_cf(x)
    } else {
        let d = pdf(x);
        if d == 0.0 {
            f64::INFINITY
        } else {
            sf(x) / d
        }
    }
}

/// R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))) by the modified Lentz method.
fn mills_ratio_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Inverse Mills terms `(c0, c1)` at standardized index `m`:
/// `c0 = −φ(m)/(1 − Φ(m))`, `c1 = φ(m)/Φ(m)`.
pub fn mills_terms(m: f64) -> (f64, f64) {
    let c0 = -1.0 / mills_ratio(m);
    let c1 = 1.0 / mills_ratio(-m);
    (c0, c1)
}

#[cfg(test)]
pub(crate) const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
