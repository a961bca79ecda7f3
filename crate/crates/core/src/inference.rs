//! Posterior summaries and convergence diagnostics.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{ChainOutput, DrawColumns, PriorSpec};
use crate::model::{ate_from_means, PanelDataset, ParameterDraw};
use crate::stats::hpd_interval;

pub const MIN_DIAGNOSTIC_DRAWS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryOptions {
    /// Probability mass of the ATE credible intervals.
    pub level: f64,
    /// Report the selection coefficients on their raw, unidentified scale.
    pub raw_alpha: bool,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            level: 0.95,
            raw_alpha: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Share of draws with the coordinate included; `None` for coordinates
    /// that are never selected out.
    pub inclusion: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTable {
    /// True when `alpha[ℓ]` rows hold `α_ℓ / √(1 + λ_x²)`.
    pub standardized_alpha: bool,
    pub rows: Vec<ParameterSummary>,
}

impl SummaryTable {
    pub fn get(&self, name: &str) -> Option<&ParameterSummary> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Fixed-width table: name, mean, sd in parentheses, inclusion probability.
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(9).max(9);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:>10}  {:>10}  {:>6}", "parameter", "mean", "(sd)", "prob");
        for r in &self.rows {
            let prob = r.inclusion.map_or_else(|| "---".to_string(), |p| format!("{p:.3}"));
            let sd = format!("({:.4})", r.sd);
            let _ = writeln!(s, "{:<width$}  {:>10.4}  {:>10}  {:>6}", r.name, r.mean, sd, prob);
        }
        if self.standardized_alpha {
            s.push_str("alpha rows are standardized: alpha / sqrt(1 + lambda_x^2)\n");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtePeriod {
    /// 1-based period.
    pub period: usize,
    /// Average effect evaluated at the posterior means of `kappa` and `theta`.
    pub plug_in: f64,
    /// Posterior mean of the per-draw average effect.
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AteSummary {
    pub level: f64,
    pub periods: Vec<AtePeriod>,
}

impl AteSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let pct = 100.0 * self.level;
        let _ = writeln!(s, "{:>6}  {:>10}  {:>10}  {:>10}  {:>10}", "period", "plug-in", "mean", "hpd lo", "hpd hi");
        for p in &self.periods {
            let _ = writeln!(
                s,
                "{:>6}  {:>10.4}  {:>10.4}  {:>10.4}  {:>10.4}",
                p.period, p.plug_in, p.mean, p.lower, p.upper
            );
        }
        let _ = writeln!(s, "intervals: {pct}% highest posterior density");
        s
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let shift = xs[0];
    let mean = shift + xs.iter().map(|x| x - shift).sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (m - 1.0)).sqrt())
}

/// Posterior table and ATE summary from stored draws. The per-draw ATE is
/// recomputed from `kappa`, `theta` and the period means of the outcome
/// covariates in `data`.
pub fn summarize(
    draws: &[ParameterDraw],
    data: &PanelDataset,
    prior: &PriorSpec,
    opts: &SummaryOptions,
) -> Result<(SummaryTable, AteSummary)> {
    if draws.is_empty() {
        return Err(Error::InsufficientData("no stored draws to summarize".into()));
    }
    let cols = DrawColumns::new(data.p_v(), data.periods(), data.p_w());
    for d in draws {
        d.coefficients.check_dims(cols.p_v, cols.periods, cols.p_w).map_err(|e| Error::Schema(e.to_string()))?;
    }
    let t_max = cols.periods;
    let mut rows = Vec::new();
    let mut row = |name: String, values: Vec<f64>, inclusion: Option<f64>| {
        let (mean, sd) = mean_sd(&values);
        rows.push(ParameterSummary { name, mean, sd, inclusion });
        mean
    };
    let share = |flags: Vec<bool>| flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64;

    let alpha_mandatory = PriorSpec::mandatory_mask(&prior.mandatory_alpha, cols.p_v);
    for l in 0..cols.p_v {
        let values = draws
            .iter()
            .map(|d| {
                let a = d.coefficients.alpha[l];
                if opts.raw_alpha {
                    a
                } else {
                    a / (1.0 + d.loadings.lambda_x.powi(2)).sqrt()
                }
            })
            .collect();
        let inc = (!alpha_mandatory[l]).then(|| share(draws.iter().map(|d| d.delta_alpha[l]).collect()));
        row(format!("alpha[{}]", l + 1), values, inc);
    }

    let beta_mandatory = PriorSpec::mandatory_mask(&prior.mandatory_beta, cols.n_beta());
    let beta_names = ["mu", "kappa", "gamma", "theta"];
    let beta_sizes = [t_max, t_max, cols.p_w, cols.p_w];
    let mut means: Vec<Vec<f64>> = vec![Vec::new(); 4];
    let betas: Vec<Vec<f64>> = draws.iter().map(|d| d.coefficients.beta()).collect();
    let mut k = 0;
    for (b, (name, size)) in beta_names.iter().zip(beta_sizes).enumerate() {
        for l in 0..size {
            let values = betas.iter().map(|b| b[k]).collect();
            let inc = (!beta_mandatory[k]).then(|| share(draws.iter().map(|d| d.delta_beta[k]).collect()));
            means[b].push(row(format!("{name}[{}]", l + 1), values, inc));
            k += 1;
        }
    }

    row("lambda_x".into(), draws.iter().map(|d| d.loadings.lambda_x).collect(), None);
    type Block = fn(&ParameterDraw) -> &[f64];
    let blocks: [(&str, Block); 6] = [
        ("lambda0", |d| &d.loadings.lambda0),
        ("lambda1", |d| &d.loadings.lambda1),
        ("zeta0", |d| &d.loadings.zeta0),
        ("zeta1", |d| &d.loadings.zeta1),
        ("sigma2_0", |d| &d.variances.sigma2_0),
        ("sigma2_1", |d| &d.variances.sigma2_1),
    ];
    for (name, get) in blocks {
        for t in 0..t_max {
            row(format!("{name}[{}]", t + 1), draws.iter().map(|d| get(d)[t]).collect(), None);
        }
    }
    row("pi_alpha".into(), draws.iter().map(|d| d.pi_alpha).collect(), None);
    row("pi_beta".into(), draws.iter().map(|d| d.pi_beta).collect(), None);

    let wbar = data.period_covariate_means();
    let plug_in = ate_from_means(&means[1], &means[3], &wbar);
    let per_draw: Vec<Vec<f64>> = draws
        .iter()
        .map(|d| ate_from_means(&d.coefficients.kappa, &d.coefficients.theta, &wbar))
        .collect();
    let periods = (0..t_max)
        .map(|t| {
            let mut xs: Vec<f64> = per_draw.iter().map(|a| a[t]).collect();
            let (mean, _) = mean_sd(&xs);
            xs.sort_by(f64::total_cmp);
            let (lower, upper) = hpd_interval(&xs, opts.level)?;
            Ok(AtePeriod {
                period: t + 1,
                plug_in: plug_in[t],
                mean,
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok((
        SummaryTable {
            standardized_alpha: !opts.raw_alpha,
            rows,
        },
        AteSummary {
            level: opts.level,
            periods,
        },
    ))
}

/// Summary of the pooled draws of one or more chains fitted to `data`.
pub fn summarize_chains(
    chains: &[ChainOutput],
    data: &PanelDataset,
    opts: &SummaryOptions,
) -> Result<(SummaryTable, AteSummary)> {
    let Some(first) = chains.first() else {
        return Err(Error::InsufficientData("no chains to summarize".into()));
    };
    let draws: Vec<ParameterDraw> = chains.iter().flat_map(|c| c.draws.iter().cloned()).collect();
    summarize(&draws, data, &first.metadata.prior, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterDiagnostics {
    pub name: String,
    /// `None` when the draws are constant.
    pub ess: Option<f64>,
    /// Difference of first- and second-half means over its standard error.
    pub split_z: Option<f64>,
}

/// Geyer initial-positive-sequence ESS without the minimum-length check.
fn ess_unchecked(x: &[f64]) -> Option<f64> {
    let m = x.len();
    let mean = x.iter().sum::<f64>() / m as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| d[..m - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / m as f64;
    let g0 = autocov(0);
    if !(g0 > 0.0) {
        return None;
    }
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < m {
        let pair = (autocov(2 * k) + autocov(2 * k + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    Some(m as f64 / tau.max(f64::MIN_POSITIVE))
}

fn require_length(m: usize) -> Result<()> {
    if m < MIN_DIAGNOSTIC_DRAWS {
        return Err(Error::InsufficientData(format!(
            "diagnostics need at least {MIN_DIAGNOSTIC_DRAWS} draws, got {m}"
        )));
    }
    Ok(())
}

/// Effective sample size from the autocorrelation sum truncated at the first
/// non-positive pair of consecutive lags; `None` for constant draws.
pub fn effective_sample_size(x: &[f64]) -> Result<Option<f64>> {
    require_length(x.len())?;
    Ok(ess_unchecked(x))
}

/// z-score of the first-half minus second-half mean, each half's variance
/// deflated by its own effective sample size.
pub fn split_half_z(x: &[f64]) -> Result<Option<f64>> {
    require_length(x.len())?;
    let (a, b) = x.split_at(x.len() / 2);
    let part = |h: &[f64]| {
        let (mean, sd) = mean_sd(h);
        ess_unchecked(h).map(|ess| (mean, sd * sd / ess))
    };
    Ok(match (part(a), part(b)) {
        (Some((ma, va)), Some((mb, vb))) => Some((ma - mb) / (va + vb).sqrt()),
        _ => None,
    })
}

/// Diagnostics for every column of a draw matrix given row by row.
pub fn diagnose_columns(names: &[String], rows: &[Vec<f64>]) -> Result<Vec<ParameterDiagnostics>> {
    require_length(rows.len())?;
    names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            Ok(ParameterDiagnostics {
                name: name.clone(),
                ess: effective_sample_size(&col)?,
                split_z: split_half_z(&col)?,
            })
        })
        .collect()
}

/// Diagnostics for every stored scalar of a chain, in draws-file column order.
pub fn diagnostics(chain: &ChainOutput) -> Result<Vec<ParameterDiagnostics>> {
    let meta = &chain.metadata;
    let cols = DrawColumns::new(meta.p_v, meta.periods, meta.p_w);
    let rows: Vec<Vec<f64>> = chain.draws.iter().zip(&chain.ate).map(|(d, a)| cols.flatten(d, a)).collect();
    diagnose_columns(&cols.names(), &rows)
}
