use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::{ChainConfig, ModelVariant, PriorSpec};
use super::steps::{non_finite, sample_state_error, step3_update_utilities, sweep, ChainState, SweepContext};
use crate::error::Result;
use crate::exec::Parallelism;
use crate::model::{
    ate_from_means, require_identified, Coefficients, FactorLoadings, IdiosyncraticVariances,
    LatentState, PanelDataset, ParameterDraw,
};
use crate::stats::rng::mix_seed;
use crate::stats::{sample_beta, sample_inverse_gamma, standard_normal, RandomStream};

/// Everything `run_chain` needs besides data, prior and chain settings.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub variant: ModelVariant,
    /// Fit even when the panel is too short for the identification condition.
    pub allow_unidentified: bool,
    pub mode: Parallelism,
}

/// Boosting bookkeeping per factor group `[common, control, treated]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoostStats {
    pub applied: [u64; 3],
    pub skipped: [u64; 3],
    /// Mean `|ln c|` over applied moves.
    pub mean_abs_log_scale: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub model: ModelVariant,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub selection_start: usize,
    pub n: usize,
    pub periods: usize,
    pub p_v: usize,
    pub p_w: usize,
    pub draws: usize,
    pub boost: BoostStats,
    pub prior: PriorSpec,
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub draws: Vec<ParameterDraw>,
    /// `ate[m][t]` for stored draw `m`.
    pub ate: Vec<Vec<f64>>,
    /// Latent states of stored draws when requested.
    pub latents: Vec<LatentState>,
    pub metadata: RunMetadata,
    pub wall_time: Duration,
}

/// Dispersed starting values: coefficients `N(0, 0.1)`, loadings `N(0, 1)`,
/// variances from the prior, factors `N(0, 1)`, every indicator on, inclusion
/// probabilities from their prior, utilities from the truncated prior predictive.
pub fn initialize(
    data: &PanelDataset,
    prior: &PriorSpec,
    variant: ModelVariant,
    rng: &mut RandomStream,
) -> Result<ChainState> {
    let (n, t, p_v, p_w) = (data.n(), data.periods(), data.p_v(), data.p_w());
    let sd = 0.1f64.sqrt();
    let normals = |k: usize, s: f64, rng: &mut RandomStream| (0..k).map(|_| s * standard_normal(rng)).collect::<Vec<f64>>();
    let coefficients = Coefficients {
        alpha: normals(p_v, sd, rng),
        mu: normals(t, sd, rng),
        kappa: normals(t, sd, rng),
        gamma: normals(p_w, sd, rng),
        theta: normals(p_w, sd, rng),
    };
    let fa = variant == ModelVariant::Fa;
    let lsd = prior.loading_variance.sqrt();
    let lambda_x = lsd * standard_normal(rng);
    let lambda0 = normals(t, lsd, rng);
    let lambda1 = normals(t, lsd, rng);
    let (zeta0, zeta1) = if fa { (normals(t, lsd, rng), normals(t, lsd, rng)) } else { (vec![0.0; t], vec![0.0; t]) };
    let loadings = FactorLoadings { lambda_x, lambda0, lambda1, zeta0, zeta1 };
    let mut variances = IdiosyncraticVariances::ones(t);
    for j in 0..2 {
        for k in 0..t {
            let s = sample_inverse_gamma(prior.sigma_shape[j], prior.sigma_scale[j], rng)?;
            if j == 0 {
                variances.sigma2_0[k] = s;
            } else {
                variances.sigma2_1[k] = s;
            }
        }
    }
    let draw = ParameterDraw {
        coefficients,
        loadings,
        variances,
        delta_alpha: vec![true; p_v],
        delta_beta: vec![true; 2 * t + 2 * p_w],
        pi_alpha: sample_beta(prior.pi_a, prior.pi_b, rng)?,
        pi_beta: sample_beta(prior.pi_a, prior.pi_b, rng)?,
    };
    let f_c = normals(n, 1.0, rng);
    let f_spec = if fa { normals(n, 1.0, rng) } else { vec![0.0; n] };
    let mut state = ChainState {
        draw,
        latent: LatentState { xstar: vec![0.0; n], f_c, f_spec },
    };
    let ctx = SweepContext {
        prior,
        variant,
        selection_active: false,
        mode: Parallelism::Sequential,
    };
    step3_update_utilities(&mut state, data, &ctx, rng)?;
    Ok(state)
}

/// Runs one chain. Initialization uses stream 1 of the generator family
/// seeded by `config.seed`; sweep `it` uses stream `it + 1`.
pub fn run_chain(
    data: &PanelDataset,
    prior: &PriorSpec,
    config: &ChainConfig,
    options: RunOptions,
) -> Result<ChainOutput> {
    let start = Instant::now();
    config.validate()?;
    prior.validate(data.p_v(), 2 * data.periods() + 2 * data.p_w())?;
    if !options.allow_unidentified {
        require_identified(data.periods(), 1)?;
    }
    let mut state = initialize(data, prior, options.variant, &mut RandomStream::keyed(config.seed, 1))?;
    let wbar = data.period_covariate_means();
    let mut boost = BoostStats::default();
    let mut abs_log = [0.0; 3];
    let mut out = ChainOutput {
        draws: Vec::with_capacity(config.stored_draws()),
        ate: Vec::with_capacity(config.stored_draws()),
        latents: Vec::new(),
        metadata: RunMetadata {
            seed: config.seed,
            model: options.variant,
            iterations: config.iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            selection_start: config.selection_start,
            n: data.n(),
            periods: data.periods(),
            p_v: data.p_v(),
            p_w: data.p_w(),
            draws: 0,
            boost: BoostStats::default(),
            prior: prior.clone(),
        },
        wall_time: Duration::ZERO,
    };
    for it in 1..=config.iterations {
        let ctx = SweepContext {
            prior,
            variant: options.variant,
            selection_active: it > config.selection_start,
            mode: options.mode,
        };
        let mut sweep_rng = RandomStream::keyed(config.seed, 1 + it as u64);
        let record = sweep(&mut state, data, &ctx, &mut sweep_rng)?;
        if let Some(what) = non_finite(&state) {
            return Err(sample_state_error(it, what));
        }
        for g in 0..3 {
            match record[g] {
                Some(l) => {
                    boost.applied[g] += 1;
                    abs_log[g] += l.abs();
                }
                None => boost.skipped[g] += 1,
            }
        }
        if it > config.burn_in && (it - config.burn_in).is_multiple_of(config.thin) {
            let c = &state.draw.coefficients;
            out.ate.push(ate_from_means(&c.kappa, &c.theta, &wbar));
            out.draws.push(state.draw.clone());
            if config.store_latents {
                out.latents.push(state.latent.clone());
            }
        }
    }
    for g in 0..3 {
        if boost.applied[g] > 0 {
            boost.mean_abs_log_scale[g] = abs_log[g] / boost.applied[g] as f64;
        }
    }
    out.metadata.draws = out.draws.len();
    out.metadata.boost = boost;
    out.wall_time = start.elapsed();
    Ok(out)
}

/// Runs `chains` chains with seeds `mix_seed(config.seed, c)`, concurrently
/// when the parallel backend is enabled.
pub fn run_chains(
    data: &PanelDataset,
    prior: &PriorSpec,
    config: &ChainConfig,
    options: RunOptions,
    chains: usize,
) -> Result<Vec<ChainOutput>> {
    let one = |c: usize| {
        let cfg = ChainConfig {
            seed: chain_seed(config.seed, c),
            ..config.clone()
        };
        run_chain(data, prior, &cfg, options)
    };
    let results: Vec<Result<ChainOutput>> = match options.mode {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel if chains > 1 => {
            use rayon::prelude::*;
            (0..chains).into_par_iter().map(one).collect()
        }
        _ => (0..chains).map(one).collect(),
    };
    results.into_iter().collect()
}

/// Seed of chain `c` (0-based) in a multi-chain run.
pub fn chain_seed(seed: u64, c: usize) -> u64 {
    if c == 0 {
        seed
    } else {
        mix_seed(seed, c as u64)
    }
}
