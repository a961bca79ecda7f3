use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters. Index lists are 1-based, matching the draw-file columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSpec {
    /// Prior variance of every included selection coefficient.
    pub v_alpha: f64,
    /// Prior variance of mandatory outcome coefficients.
    pub v_beta_free: f64,
    /// Slab variance of selectable outcome coefficients.
    pub v_beta_slab: f64,
    /// Beta(a, b) hyperprior on both inclusion probabilities.
    pub pi_a: f64,
    pub pi_b: f64,
    /// Inverse-gamma shape and scale of the idiosyncratic variances, per arm.
    pub sigma_shape: [f64; 2],
    pub sigma_scale: [f64; 2],
    pub loading_variance: f64,
    /// Selection coefficients that are never subject to selection.
    pub mandatory_alpha: Vec<usize>,
    /// Outcome coefficients (in `mu, kappa, gamma, theta` order) never subject to selection.
    pub mandatory_beta: Vec<usize>,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            v_alpha: 5.0,
            v_beta_free: 1e4,
            v_beta_slab: 5.0,
            pi_a: 1.0,
            pi_b: 1.0,
            sigma_shape: [2.5, 2.5],
            sigma_scale: [2.5, 2.5],
            loading_variance: 1.0,
            mandatory_alpha: vec![1],
            mandatory_beta: vec![1],
        }
    }
}

impl PriorSpec {
    pub fn validate(&self, p_v: usize, n_beta: usize) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("prior `{name}` must be positive and finite, got {v}")))
            }
        };
        pos("v_alpha", self.v_alpha)?;
        pos("v_beta_free", self.v_beta_free)?;
        pos("v_beta_slab", self.v_beta_slab)?;
        pos("pi_a", self.pi_a)?;
        pos("pi_b", self.pi_b)?;
        pos("loading_variance", self.loading_variance)?;
        for j in 0..2 {
            pos("sigma_shape", self.sigma_shape[j])?;
            pos("sigma_scale", self.sigma_scale[j])?;
        }
        let check = |name: &str, idx: &[usize], len: usize| {
            if !idx.contains(&1) {
                return Err(Error::InvalidConfig(format!("`{name}` must contain coordinate 1")));
            }
            if let Some(bad) = idx.iter().find(|&&k| k == 0 || k > len) {
                return Err(Error::InvalidConfig(format!("`{name}` entry {bad} outside 1..={len}")));
            }
            Ok(())
        };
        check("mandatory_alpha", &self.mandatory_alpha, p_v)?;
        check("mandatory_beta", &self.mandatory_beta, n_beta)
    }

    pub(crate) fn mandatory_mask(idx: &[usize], len: usize) -> Vec<bool> {
        let mut m = vec![false; len];
        for &k in idx {
            if (1..=len).contains(&k) {
                m[k - 1] = true;
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    /// Common factor plus arm-specific factors.
    #[default]
    Fa,
    /// Common factor only; `zeta` fixed at zero.
    Sf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Sweeps after which the inclusion indicators start moving.
    pub selection_start: usize,
    pub seed: u64,
    /// Keep the latent state of every stored draw.
    pub store_latents: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 10,
            selection_start: 2_500,
            seed: 1,
            store_latents: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.selection_start > self.burn_in || self.burn_in > self.iterations {
            return Err(Error::InvalidConfig(format!(
                "need selection_start <= burn_in <= iterations, got {} / {} / {}",
                self.selection_start, self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn stored_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}
