//! Synthetic panels with full ground truth.
//!
//! Three generators share one covariate design and one set of structural
//! means:
//!
//! * `fa`: common factor `f_c` on utility and both arms, arm-specific factors
//!   `f_0`, `f_1` with loadings `zeta`, heteroskedastic idiosyncratic noise;
//! * `sf`: the same with `zeta = 0`;
//! * `sr`: switching regression, where the utility error `e_x` is drawn first
//!   and each arm's error panel is drawn from its conditional law given `e_x`,
//!   plus `lambda_j f_j` with independent arm factors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_chunks, Parallelism};
use crate::model::{
    ate_true, structural_mean, Arm, Coefficients, FactorLoadings, IdiosyncraticVariances,
    PanelDataset,
};
use crate::stats::{psd_sqrt, standard_normal, RandomStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Fa,
    Sf,
    Sr,
}

/// Arm-specific factor loadings and utility/outcome error covariances of the
/// switching-regression generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingSpec {
    pub lambda0: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub omega0: Vec<f64>,
    pub omega1: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CovariateRecipe {
    /// Continuous covariates shared by the selection and outcome equations.
    pub continuous: usize,
    /// Add a Bernoulli(0.5) instrument to the selection equation only.
    pub instrument: bool,
    /// Redraw the outcome covariates every period instead of holding them fixed.
    pub time_varying: bool,
}

impl Default for CovariateRecipe {
    fn default() -> Self {
        Self {
            continuous: 2,
            instrument: true,
            time_varying: false,
        }
    }
}

impl CovariateRecipe {
    pub fn p_v(&self) -> usize {
        1 + usize::from(self.instrument) + self.continuous
    }

    pub fn p_w(&self) -> usize {
        self.continuous
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub periods: usize,
    pub kind: GeneratorKind,
    pub coefficients: Coefficients,
    /// Required for `fa` and `sf`.
    #[serde(default)]
    pub loadings: Option<FactorLoadings>,
    /// Required for `sr`.
    #[serde(default)]
    pub switching: Option<SwitchingSpec>,
    pub variances: IdiosyncraticVariances,
    #[serde(default)]
    pub covariates: CovariateRecipe,
    /// Shortest observed prefix; subjects observe a uniform length in
    /// `min_observed..=periods`. Defaults to a balanced panel.
    #[serde(default)]
    pub min_observed: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let t = self.periods;
        if t == 0 {
            return bad("periods must be at least 1".into());
        }
        let rec = &self.covariates;
        self.coefficients
            .check_dims(rec.p_v(), t, rec.p_w())
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        self.variances.check().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.variances.sigma2_0.len() != t {
            return bad(format!("variances must have length {t}"));
        }
        if let Some(m) = self.min_observed {
            if m == 0 || m > t {
                return bad(format!("min_observed must lie in 1..={t}"));
            }
        }
        match self.kind {
            GeneratorKind::Fa | GeneratorKind::Sf => {
                let Some(l) = &self.loadings else {
                    return bad("fa/sf generators need `loadings`".into());
                };
                l.check().map_err(|e| Error::InvalidConfig(e.to_string()))?;
                if l.periods() != t {
                    return bad(format!("loadings must have length {t}"));
                }
                if self.kind == GeneratorKind::Sf && l.zeta0.iter().chain(&l.zeta1).any(|z| *z != 0.0) {
                    return bad("the sf generator requires zeta0 = zeta1 = 0".into());
                }
            }
            GeneratorKind::Sr => {
                let Some(s) = &self.switching else {
                    return bad("the sr generator needs `switching`".into());
                };
                for v in [&s.lambda0, &s.lambda1, &s.omega0, &s.omega1] {
                    if v.len() != t || v.iter().any(|a| !a.is_finite()) {
                        return bad(format!("switching vectors must be finite with length {t}"));
                    }
                }
                for j in 0..2 {
                    conditional_root(s, &self.variances, j)?;
                }
            }
        }
        Ok(())
    }
}

/// Square root of `S_j − ω_j ω_j'`, the conditional error covariance of arm
/// `j` given the utility error. Fails when `[[1, ω'], [ω, S]]` is not PSD.
fn conditional_root(s: &SwitchingSpec, var: &IdiosyncraticVariances, j: usize) -> Result<DMatrix<f64>> {
    let omega = DVector::from_column_slice(if j == 0 { &s.omega0 } else { &s.omega1 });
    let cond = DMatrix::from_diagonal(&DVector::from_column_slice(var.arm(j))) - &omega * omega.transpose();
    psd_sqrt(&cond).map_err(|_| {
        Error::InvalidConfig(format!(
            "switching-regression covariance of arm {j} is not positive semi-definite"
        ))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub xstar: Vec<f64>,
    /// Zero for the switching-regression generator.
    pub f_c: Vec<f64>,
    pub f_0: Vec<f64>,
    pub f_1: Vec<f64>,
    /// Both potential-outcome panels, `n × periods`, every cell filled.
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    /// In-sample average treatment effect per period.
    pub ate: Vec<f64>,
}

/// Draws `(V, W)` row-major: `V` is `n × p_v` with an intercept first, then
/// the instrument (if any), then the continuous covariates; `W` is
/// `n × periods × p_w` and holds the continuous covariates only.
pub fn default_covariates<R: Rng + ?Sized>(
    n: usize,
    periods: usize,
    recipe: &CovariateRecipe,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let (p_v, p_w) = (recipe.p_v(), recipe.p_w());
    let mut v = Vec::with_capacity(n * p_v);
    let mut w = Vec::with_capacity(n * periods * p_w);
    let mut cont = vec![0.0; p_w];
    for _ in 0..n {
        v.push(1.0);
        if recipe.instrument {
            v.push(if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 });
        }
        for c in cont.iter_mut() {
            *c = standard_normal(rng);
        }
        v.extend_from_slice(&cont);
        for t in 0..periods {
            if recipe.time_varying && t > 0 {
                for c in cont.iter_mut() {
                    *c = standard_normal(rng);
                }
            }
            w.extend_from_slice(&cont);
        }
    }
    (v, w)
}

struct SubjectDraw {
    xstar: f64,
    f: [f64; 3],
    y: [Vec<f64>; 2],
    n_obs: usize,
}

pub fn simulate(config: &SimConfig) -> Result<(PanelDataset, GroundTruth)> {
    simulate_with(config, Parallelism::default())
}

pub fn simulate_with(config: &SimConfig, mode: Parallelism) -> Result<(PanelDataset, GroundTruth)> {
    config.validate()?;
    let n = config.n;
    let t_max = config.periods;
    let rec = &config.covariates;
    let (p_v, p_w) = (rec.p_v(), rec.p_w());
    let root = RandomStream::new(config.seed);
    let (v, w) = default_covariates(n, t_max, rec, &mut root.derive(1));
    let coeffs = &config.coefficients;
    let roots = match (&config.kind, &config.switching) {
        (GeneratorKind::Sr, Some(s)) => Some([
            conditional_root(s, &config.variances, 0)?,
            conditional_root(s, &config.variances, 1)?,
        ]),
        _ => None,
    };
    let min_obs = config.min_observed.unwrap_or(t_max);
    let errors_seed = crate::stats::rng::mix_seed(config.seed, 2);

    let chunks = map_chunks(mode, n, errors_seed, |range, rng| {
        let mut out = Vec::with_capacity(range.len());
        let mut z = vec![0.0; t_max];
        for i in range {
            let vi = &v[i * p_v..(i + 1) * p_v];
            let index: f64 = vi.iter().zip(&coeffs.alpha).map(|(a, b)| a * b).sum();
            let f = [standard_normal(rng), standard_normal(rng), standard_normal(rng)];
            let e_x = standard_normal(rng);
            let mut y = [vec![0.0; t_max], vec![0.0; t_max]];
            let xstar;
            match &roots {
                None => {
                    let l = config.loadings.as_ref().expect("validated");
                    xstar = index + l.lambda_x * f[0] + e_x;
                    for arm in Arm::BOTH {
                        let j = arm.index();
                        let (lam, zeta, s2) = (l.lambda(j), l.zeta(j), config.variances.arm(j));
                        for t in 0..t_max {
                            let eta = structural_mean(arm, t, &w[(i * t_max + t) * p_w..(i * t_max + t + 1) * p_w], coeffs)
                                .expect("validated");
                            y[j][t] = eta + lam[t] * f[0] + zeta[t] * f[1 + j] + s2[t].sqrt() * standard_normal(rng);
                        }
                    }
                }
                Some(roots) => {
                    let s = config.switching.as_ref().expect("validated");
                    xstar = index + e_x;
                    for arm in Arm::BOTH {
                        let j = arm.index();
                        let (lam, omega) = if j == 0 { (&s.lambda0, &s.omega0) } else { (&s.lambda1, &s.omega1) };
                        z.iter_mut().for_each(|a| *a = standard_normal(rng));
                        for t in 0..t_max {
                            let eta = structural_mean(arm, t, &w[(i * t_max + t) * p_w..(i * t_max + t + 1) * p_w], coeffs)
                                .expect("validated");
                            let cond: f64 = (0..t_max).map(|k| roots[j][(t, k)] * z[k]).sum();
                            y[j][t] = eta + lam[t] * f[1 + j] + omega[t] * e_x + cond;
                        }
                    }
                }
            }
            let n_obs = if min_obs < t_max { rng.random_range(min_obs..=t_max) } else { t_max };
            out.push(SubjectDraw { xstar, f, y, n_obs });
        }
        out
    });

    let mut truth = GroundTruth {
        xstar: Vec::with_capacity(n),
        f_c: Vec::with_capacity(n),
        f_0: Vec::with_capacity(n),
        f_1: Vec::with_capacity(n),
        y0: Vec::with_capacity(n * t_max),
        y1: Vec::with_capacity(n * t_max),
        ate: Vec::new(),
    };
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n * t_max);
    let mut n_obs = Vec::with_capacity(n);
    let sr = config.kind == GeneratorKind::Sr;
    for d in chunks.into_iter().flatten() {
        let xi = u8::from(d.xstar > 0.0);
        x.push(xi);
        truth.xstar.push(d.xstar);
        truth.f_c.push(if sr { 0.0 } else { d.f[0] });
        truth.f_0.push(d.f[1]);
        truth.f_1.push(d.f[2]);
        y.extend_from_slice(&d.y[usize::from(xi)]);
        truth.y0.extend_from_slice(&d.y[0]);
        truth.y1.extend_from_slice(&d.y[1]);
        n_obs.push(d.n_obs);
    }
    let data = PanelDataset::from_parts(t_max, p_v, p_w, x, v, w, y, n_obs)?;
    truth.ate = ate_true(coeffs, &data)?;
    Ok((data, truth))
}
