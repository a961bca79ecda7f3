use crate::gibbs::ChainState;
use crate::model::{
    Coefficients, FactorLoadings, IdiosyncraticVariances, LatentState, PanelDataset, ParameterDraw,
};
use crate::simulator::{CovariateRecipe, GeneratorKind, SimConfig};

pub fn fa_config(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n,
        periods: 4,
        kind: GeneratorKind::Fa,
        coefficients: Coefficients {
            alpha: vec![-0.3, 1.5, 0.5, 0.0],
            mu: vec![1.0, 1.3, 1.6, 1.9],
            kappa: vec![-0.8, -0.5, -0.3, 0.2],
            gamma: vec![0.5, -0.3],
            theta: vec![0.5, 0.0],
        },
        loadings: Some(FactorLoadings {
            lambda_x: 0.8,
            lambda0: vec![0.6, 0.5, 0.4, 0.3],
            lambda1: vec![0.4, 0.5, 0.6, 0.7],
            zeta0: vec![0.5, 0.5, 0.4, 0.4],
            zeta1: vec![0.3, 0.4, 0.5, 0.6],
        }),
        switching: None,
        variances: IdiosyncraticVariances {
            sigma2_0: vec![0.5, 0.6, 0.7, 0.8],
            sigma2_1: vec![0.6, 0.5, 0.6, 0.5],
        },
        covariates: CovariateRecipe::default(),
        min_observed: None,
        seed,
    }
}

/// All coefficients and loadings zero, unit variances, every indicator on.
pub fn zero_state(data: &PanelDataset) -> ChainState {
    let (n, t) = (data.n(), data.periods());
    ChainState {
        draw: ParameterDraw {
            coefficients: Coefficients::zeros(data.p_v(), t, data.p_w()),
            loadings: FactorLoadings::zeros(t),
            variances: IdiosyncraticVariances::ones(t),
            delta_alpha: vec![true; data.p_v()],
            delta_beta: vec![true; 2 * t + 2 * data.p_w()],
            pi_alpha: 0.5,
            pi_beta: 0.5,
        },
        latent: LatentState {
            xstar: data.treatments().iter().map(|&x| if x == 1 { 0.5 } else { -0.5 }).collect(),
            f_c: vec![0.0; n],
            f_spec: vec![0.0; n],
        },
    }
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}
