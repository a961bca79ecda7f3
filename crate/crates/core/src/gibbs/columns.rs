//! Canonical flat layout of a stored draw, shared by the draws file and the
//! diagnostics.

use crate::error::{Error, Result};
use crate::model::{Coefficients, FactorLoadings, IdiosyncraticVariances, ParameterDraw};

/// Column layout for a model with `p_v` selection covariates, `periods`
/// periods and `p_w` outcome covariates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DrawColumns {
    pub p_v: usize,
    pub periods: usize,
    pub p_w: usize,
}

impl DrawColumns {
    pub fn new(p_v: usize, periods: usize, p_w: usize) -> Self {
        Self { p_v, periods, p_w }
    }

    pub fn n_beta(&self) -> usize {
        2 * self.periods + 2 * self.p_w
    }

    pub fn width(&self) -> usize {
        let (v, t, w) = (self.p_v, self.periods, self.p_w);
        2 * v + 2 * t + 2 * w + 1 + 4 * t + 2 * t + self.n_beta() + 2 + t
    }

    /// Names in file order, 1-based indices.
    pub fn names(&self) -> Vec<String> {
        let (v, t, w) = (self.p_v, self.periods, self.p_w);
        let mut out = Vec::with_capacity(self.width());
        let mut push = |base: &str, k: usize| out.extend((1..=k).map(|i| format!("{base}[{i}]")));
        push("alpha", v);
        push("mu", t);
        push("kappa", t);
        push("gamma", w);
        push("theta", w);
        out.push("lambda_x".into());
        for base in ["lambda0", "lambda1", "zeta0", "zeta1", "sigma2_0", "sigma2_1"] {
            out.extend((1..=t).map(|i| format!("{base}[{i}]")));
        }
        out.extend((1..=v).map(|i| format!("delta_alpha[{i}]")));
        out.extend((1..=self.n_beta()).map(|i| format!("delta_beta[{i}]")));
        out.push("pi_alpha".into());
        out.push("pi_beta".into());
        out.extend((1..=t).map(|i| format!("ate[{i}]")));
        out
    }

    pub fn flatten(&self, draw: &ParameterDraw, ate: &[f64]) -> Vec<f64> {
        let c = &draw.coefficients;
        let l = &draw.loadings;
        let v = &draw.variances;
        let flag = |b: &bool| if *b { 1.0 } else { 0.0 };
        let mut out = Vec::with_capacity(self.width());
        for block in [&c.alpha, &c.mu, &c.kappa, &c.gamma, &c.theta] {
            out.extend_from_slice(block);
        }
        out.push(l.lambda_x);
        for block in [&l.lambda0, &l.lambda1, &l.zeta0, &l.zeta1, &v.sigma2_0, &v.sigma2_1] {
            out.extend_from_slice(block);
        }
        out.extend(draw.delta_alpha.iter().map(flag));
        out.extend(draw.delta_beta.iter().map(flag));
        out.push(draw.pi_alpha);
        out.push(draw.pi_beta);
        out.extend_from_slice(ate);
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(&self, row: &[f64]) -> Result<(ParameterDraw, Vec<f64>)> {
        if row.len() != self.width() {
            return Err(Error::Schema(format!("draw row has {} values, expected {}", row.len(), self.width())));
        }
        let (v, t, w) = (self.p_v, self.periods, self.p_w);
        let mut rest = row;
        let mut take = |k: usize| {
            let (head, tail) = rest.split_at(k);
            rest = tail;
            head.to_vec()
        };
        let coefficients = Coefficients {
            alpha: take(v),
            mu: take(t),
            kappa: take(t),
            gamma: take(w),
            theta: take(w),
        };
        let lambda_x = take(1)[0];
        let loadings = FactorLoadings {
            lambda_x,
            lambda0: take(t),
            lambda1: take(t),
            zeta0: take(t),
            zeta1: take(t),
        };
        let variances = IdiosyncraticVariances {
            sigma2_0: take(t),
            sigma2_1: take(t),
        };
        let to_flags = |xs: Vec<f64>| -> Result<Vec<bool>> {
            xs.into_iter()
                .map(|x| match x {
                    0.0 => Ok(false),
                    1.0 => Ok(true),
                    other => Err(Error::Schema(format!("indicator column holds {other}"))),
                })
                .collect()
        };
        let delta_alpha = to_flags(take(v))?;
        let delta_beta = to_flags(take(self.n_beta()))?;
        let pi = take(2);
        let ate = take(t);
        Ok((
            ParameterDraw {
                coefficients,
                loadings,
                variances,
                delta_alpha,
                delta_beta,
                pi_alpha: pi[0],
                pi_beta: pi[1],
            },
            ate,
        ))
    }

    /// Infers the layout from a header, which must match the canonical names exactly.
    pub fn from_header(header: &[String]) -> Result<Self> {
        let count = |base: &str| header.iter().filter(|h| h.starts_with(&format!("{base}["))).count();
        let layout = Self::new(count("alpha"), count("mu"), count("gamma"));
        if layout.names() != header {
            return Err(Error::Schema("draws header does not follow the canonical column layout".into()));
        }
        Ok(layout)
    }
}
