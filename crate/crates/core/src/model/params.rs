use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression effects: selection `alpha`, period intercepts `mu`, period
/// treatment shifts `kappa`, control-arm covariate effects `gamma` and
/// treatment-effect modifiers `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(p_v: usize, periods: usize, p_w: usize) -> Self {
        Self {
            alpha: vec![0.0; p_v],
            mu: vec![0.0; periods],
            kappa: vec![0.0; periods],
            gamma: vec![0.0; p_w],
            theta: vec![0.0; p_w],
        }
    }

    pub fn periods(&self) -> usize {
        self.mu.len()
    }

    pub fn check_dims(&self, p_v: usize, periods: usize, p_w: usize) -> Result<()> {
        if self.alpha.len() != p_v
            || self.mu.len() != periods
            || self.kappa.len() != periods
            || self.gamma.len() != p_w
            || self.theta.len() != p_w
        {
            return Err(Error::invalid(format!(
                "coefficient lengths (alpha {}, mu {}, kappa {}, gamma {}, theta {}) do not match p_v={p_v}, T={periods}, p_w={p_w}",
                self.alpha.len(),
                self.mu.len(),
                self.kappa.len(),
                self.gamma.len(),
                self.theta.len()
            )));
        }
        Ok(())
    }

    /// Stacked outcome coefficients `beta = (mu, kappa, gamma, theta)`.
    pub fn beta(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(2 * self.mu.len() + 2 * self.gamma.len());
        b.extend_from_slice(&self.mu);
        b.extend_from_slice(&self.kappa);
        b.extend_from_slice(&self.gamma);
        b.extend_from_slice(&self.theta);
        b
    }

    pub fn set_beta(&mut self, beta: &[f64]) {
        let t = self.mu.len();
        let p = self.gamma.len();
        debug_assert_eq!(beta.len(), 2 * t + 2 * p);
        self.mu.copy_from_slice(&beta[..t]);
        self.kappa.copy_from_slice(&beta[t..2 * t]);
        self.gamma.copy_from_slice(&beta[2 * t..2 * t + p]);
        self.theta.copy_from_slice(&beta[2 * t + p..]);
    }
}

/// Loadings of the common factor (`lambda_x`, `lambda0`, `lambda1`) and of the
/// arm-specific factors (`zeta0`, `zeta1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorLoadings {
    pub lambda_x: f64,
    pub lambda0: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub zeta0: Vec<f64>,
    pub zeta1: Vec<f64>,
}

impl FactorLoadings {
    pub fn zeros(periods: usize) -> Self {
        Self {
            lambda_x: 0.0,
            lambda0: vec![0.0; periods],
            lambda1: vec![0.0; periods],
            zeta0: vec![0.0; periods],
            zeta1: vec![0.0; periods],
        }
    }

    pub fn periods(&self) -> usize {
        self.lambda0.len()
    }

    pub fn lambda(&self, arm: usize) -> &[f64] {
        if arm == 0 {
            &self.lambda0
        } else {
            &self.lambda1
        }
    }

    pub fn zeta(&self, arm: usize) -> &[f64] {
        if arm == 0 {
            &self.zeta0
        } else {
            &self.zeta1
        }
    }

    pub fn check(&self) -> Result<()> {
        let t = self.lambda0.len();
        if self.lambda1.len() != t || self.zeta0.len() != t || self.zeta1.len() != t {
            return Err(Error::invalid("loading vectors must share one length T"));
        }
        let finite = self.lambda_x.is_finite()
            && [&self.lambda0, &self.lambda1, &self.zeta0, &self.zeta1]
                .iter()
                .all(|v| v.iter().all(|a| a.is_finite()));
        if !finite {
            return Err(Error::invalid("factor loadings must be finite"));
        }
        Ok(())
    }
}

/// Idiosyncratic outcome variances per arm and period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdiosyncraticVariances {
    pub sigma2_0: Vec<f64>,
    pub sigma2_1: Vec<f64>,
}

impl IdiosyncraticVariances {
    pub fn ones(periods: usize) -> Self {
        Self {
            sigma2_0: vec![1.0; periods],
            sigma2_1: vec![1.0; periods],
        }
    }

    pub fn arm(&self, arm: usize) -> &[f64] {
        if arm == 0 {
            &self.sigma2_0
        } else {
            &self.sigma2_1
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.sigma2_0.len() != self.sigma2_1.len() {
            return Err(Error::invalid("variance vectors must share one length T"));
        }
        if self
            .sigma2_0
            .iter()
            .chain(&self.sigma2_1)
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::invalid("idiosyncratic variances must be positive and finite"));
        }
        Ok(())
    }
}

/// One full parameter state of the sampler. `delta_alpha`/`delta_beta` cover
/// every coordinate of `alpha`/`beta`; mandatory coordinates stay `true`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterDraw {
    pub coefficients: Coefficients,
    pub loadings: FactorLoadings,
    pub variances: IdiosyncraticVariances,
    pub delta_alpha: Vec<bool>,
    pub delta_beta: Vec<bool>,
    pub pi_alpha: f64,
    pub pi_beta: f64,
}

/// Per-subject augmented variables. `f_spec[i]` is the specific factor of the
/// arm subject `i` is in; the counterfactual arm's factor is never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentState {
    pub xstar: Vec<f64>,
    pub f_c: Vec<f64>,
    pub f_spec: Vec<f64>,
}

impl LatentState {
    pub fn sign_consistent(&self, treatments: &[u8]) -> bool {
        self.xstar
            .iter()
            .zip(treatments)
            .all(|(&xs, &x)| if x == 1 { xs > 0.0 } else { xs < 0.0 })
    }
}
