//! The seven conditional updates of one sweep.

use rand::{Rng, RngCore};

use super::config::{ModelVariant, PriorSpec};
use super::regression::{select_and_draw, NormalEquations};
use crate::error::{Error, Result};
use crate::exec::{map_chunks, Parallelism};
use crate::model::{LatentState, PanelDataset, ParameterDraw};
use crate::stats::{
    sample_beta, sample_gig, sample_inverse_gamma, sample_truncated_normal, standard_normal,
    RandomStream, TruncationBounds,
};

/// Parameters plus augmented variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub draw: ParameterDraw,
    pub latent: LatentState,
}

/// Per-sweep settings shared by the steps.
#[derive(Clone, Copy, Debug)]
pub struct SweepContext<'a> {
    pub prior: &'a PriorSpec,
    pub variant: ModelVariant,
    pub selection_active: bool,
    pub mode: Parallelism,
}

/// Column layout of the outcome regression: `mu[T], kappa[T], gamma[p],
/// theta[p]`, then `lambda0[T], lambda1[T]`, then (FA only) `zeta0[T], zeta1[T]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct OutcomeLayout {
    pub t: usize,
    pub p: usize,
    pub with_zeta: bool,
}

impl OutcomeLayout {
    pub fn new(data: &PanelDataset, variant: ModelVariant) -> Self {
        Self {
            t: data.periods(),
            p: data.p_w(),
            with_zeta: variant == ModelVariant::Fa,
        }
    }
    pub fn n_beta(&self) -> usize {
        2 * self.t + 2 * self.p
    }
    fn mu(&self, t: usize) -> usize {
        t
    }
    fn kappa(&self, t: usize) -> usize {
        self.t + t
    }
    fn gamma(&self, l: usize) -> usize {
        2 * self.t + l
    }
    fn theta(&self, l: usize) -> usize {
        2 * self.t + self.p + l
    }
    fn lambda(&self, j: usize, t: usize) -> usize {
        self.n_beta() + j * self.t + t
    }
    fn zeta(&self, j: usize, t: usize) -> usize {
        self.n_beta() + 2 * self.t + j * self.t + t
    }
    pub fn dim(&self) -> usize {
        self.n_beta() + if self.with_zeta { 4 * self.t } else { 2 * self.t }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper triangle of `Σ r r'` stored row by row, plus `Σ r y`.
#[derive(Clone)]
pub(crate) struct PackedGram {
    k: usize,
    tri: Vec<f64>,
    xty: Vec<f64>,
}

impl PackedGram {
    fn new(k: usize) -> Self {
        Self {
            k,
            tri: vec![0.0; k * (k + 1) / 2],
            xty: vec![0.0; k],
        }
    }

    #[inline]
    fn add(&mut self, r: &[f64], y: f64) {
        let mut off = 0;
        for a in 0..self.k {
            let ra = r[a];
            let len = self.k - a;
            for (g, &rb) in self.tri[off..off + len].iter_mut().zip(&r[a..]) {
                *g += ra * rb;
            }
            off += len;
        }
        for (h, &ra) in self.xty.iter_mut().zip(r) {
            *h += ra * y;
        }
    }

    fn merge(&mut self, other: &PackedGram) {
        for (a, b) in self.tri.iter_mut().zip(&other.tri) {
            *a += b;
        }
        for (a, b) in self.xty.iter_mut().zip(&other.xty) {
            *a += b;
        }
    }

    /// Entry `(a, b)` with `a ≤ b`.
    fn get(&self, a: usize, b: usize) -> f64 {
        let off = a * (2 * self.k + 1 - a) / 2;
        self.tri[off + (b - a)]
    }

    fn into_equations(self) -> NormalEquations {
        let mut eq = NormalEquations::zeros(self.k);
        for a in 0..self.k {
            for b in a..self.k {
                let g = self.get(a, b);
                eq.xtx[(a, b)] = g;
                eq.xtx[(b, a)] = g;
            }
            eq.xty[a] = self.xty[a];
        }
        eq
    }
}

fn step_seed(rng: &mut RandomStream) -> u64 {
    rng.next_u64()
}

/// `y_it − (structural mean)` for every cell, row-major `n × T`; unobserved
/// cells are left at zero.
pub(crate) fn structural_residuals(draw: &ParameterDraw, data: &PanelDataset, mode: Parallelism) -> Vec<f64> {
    let t_max = data.periods();
    let c = &draw.coefficients;
    let parts = map_chunks(mode, data.n(), 0, |range, _| {
        let mut out = vec![0.0; range.len() * t_max];
        for (k, i) in range.enumerate() {
            let treated = data.x(i) == 1;
            for t in 0..data.n_observed(i) {
                let w = data.w_row(i, t);
                let mut eta = c.mu[t] + dot(w, &c.gamma);
                if treated {
                    eta += c.kappa[t] + dot(w, &c.theta);
                }
                out[k * t_max + t] = data.y(i, t) - eta;
            }
        }
        out
    });
    parts.concat()
}

/// Sums of squared full residuals per `[arm][period]`.
fn residual_sums(state: &ChainState, data: &PanelDataset, resid: &[f64], mode: Parallelism) -> [Vec<f64>; 2] {
    let t_max = data.periods();
    let l = &state.draw.loadings;
    let lat = &state.latent;
    let parts = map_chunks(mode, data.n(), 0, |range, _| {
        let mut se = [vec![0.0; t_max], vec![0.0; t_max]];
        for i in range {
            let j = data.x(i) as usize;
            let ti = data.n_observed(i);
            let (fc, fs) = (lat.f_c[i], lat.f_spec[i]);
            let e = &resid[i * t_max..i * t_max + ti];
            for (((acc, &et), &lam), &zeta) in se[j].iter_mut().zip(e).zip(l.lambda(j)).zip(l.zeta(j)) {
                let u = et - lam * fc - zeta * fs;
                *acc += u * u;
            }
        }
        se
    });
    let mut total = [vec![0.0; t_max], vec![0.0; t_max]];
    for part in parts {
        for j in 0..2 {
            for (a, b) in total[j].iter_mut().zip(&part[j]) {
                *a += b;
            }
        }
    }
    total
}

/// Step 1: idiosyncratic variances from their inverse-gamma conditionals.
pub fn step1_update_variances(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<()> {
    let resid = structural_residuals(&state.draw, data, ctx.mode);
    update_variances(state, data, ctx, rng, &resid)
}

fn update_variances(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
    resid: &[f64],
) -> Result<()> {
    let se = residual_sums(state, data, resid, ctx.mode);
    let counts = data.arm_period_counts();
    let prior = ctx.prior;
    for j in 0..2 {
        for t in 0..data.periods() {
            let shape = prior.sigma_shape[j] + 0.5 * counts[j][t] as f64;
            let scale = prior.sigma_scale[j] + 0.5 * se[j][t];
            let s = sample_inverse_gamma(shape, scale, rng)?;
            let v = &mut state.draw.variances;
            if j == 0 {
                v.sigma2_0[t] = s;
            } else {
                v.sigma2_1[t] = s;
            }
        }
    }
    Ok(())
}

/// Posterior mean and covariance of `(f_c, f_spec)` for one subject, given
/// the utility residual `e_x` and outcome residuals `e[t]`.
pub(crate) fn factor_posterior(
    lambda_x: f64,
    lam: &[f64],
    zeta: &[f64],
    var: &[f64],
    e_x: f64,
    e: &[f64],
) -> ([f64; 2], [[f64; 2]; 2]) {
    let (mut p00, mut p01, mut p11) = (1.0 + lambda_x * lambda_x, 0.0, 1.0);
    let (mut b0, mut b1) = (lambda_x * e_x, 0.0);
    for (((&lt, &zt), &vt), &et) in lam.iter().zip(zeta).zip(var).zip(e) {
        let (a, b) = (lt / vt, zt / vt);
        p00 += lt * a;
        p01 += zt * a;
        p11 += zt * b;
        b0 += et * a;
        b1 += et * b;
    }
    let det = p00 * p11 - p01 * p01;
    let cov = [[p11 / det, -p01 / det], [-p01 / det, p00 / det]];
    let mean = [cov[0][0] * b0 + cov[0][1] * b1, cov[1][0] * b0 + cov[1][1] * b1];
    (mean, cov)
}

/// Step 2: common and active specific factor per subject.
pub fn step2_update_factors(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<()> {
    let resid = structural_residuals(&state.draw, data, ctx.mode);
    update_factors(state, data, ctx, rng, &resid)
}

fn update_factors(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
    resid: &[f64],
) -> Result<()> {
    let seed = step_seed(rng);
    let draw = &state.draw;
    let lat = &state.latent;
    let l = &draw.loadings;
    let with_zeta = ctx.variant == ModelVariant::Fa;
    let t_max = data.periods();
    let parts = map_chunks(ctx.mode, data.n(), seed, |range, rng| {
        let mut out = Vec::with_capacity(range.len());
        for i in range {
            let j = data.x(i) as usize;
            let ti = data.n_observed(i);
            let e_x = lat.xstar[i] - dot(data.v_row(i), &draw.coefficients.alpha);
            let (mean, cov) = factor_posterior(
                l.lambda_x,
                &l.lambda(j)[..ti],
                &l.zeta(j)[..ti],
                &draw.variances.arm(j)[..ti],
                e_x,
                &resid[i * t_max..i * t_max + ti],
            );
            let z0 = standard_normal(rng);
            let z1 = standard_normal(rng);
            let pair = if with_zeta {
                let l00 = cov[0][0].sqrt();
                let l10 = cov[1][0] / l00;
                let l11 = (cov[1][1] - l10 * l10).max(0.0).sqrt();
                (mean[0] + l00 * z0, mean[1] + l10 * z0 + l11 * z1)
            } else {
                (mean[0] + cov[0][0].sqrt() * z0, 0.0)
            };
            out.push(pair);
        }
        out
    });
    let lat = &mut state.latent;
    for (i, (fc, fs)) in parts.into_iter().flatten().enumerate() {
        lat.f_c[i] = fc;
        lat.f_spec[i] = fs;
    }
    Ok(())
}

/// Step 3: latent utilities from normals truncated to the observed sign.
pub fn step3_update_utilities(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<()> {
    let seed = step_seed(rng);
    let draw = &state.draw;
    let lat = &state.latent;
    let parts = map_chunks(ctx.mode, data.n(), seed, |range, rng| {
        range
            .map(|i| {
                let mean = dot(data.v_row(i), &draw.coefficients.alpha) + draw.loadings.lambda_x * lat.f_c[i];
                let bounds = if data.x(i) == 1 { TruncationBounds::positive() } else { TruncationBounds::negative() };
                sample_truncated_normal(mean, 1.0, bounds, rng)
            })
            .collect::<Result<Vec<f64>>>()
    });
    let mut i = 0;
    for part in parts {
        for v in part? {
            state.latent.xstar[i] = v;
            i += 1;
        }
    }
    Ok(())
}

/// Step 4: selection indicators, selection coefficients and `lambda_x` from
/// the unit-variance regression of `x*` on `(v, f_c)`.
pub fn step4_update_selection_block(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<()> {
    let p = data.p_v();
    let k = p + 1;
    let lat = &state.latent;
    let parts = map_chunks(ctx.mode, data.n(), 0, |range, _| {
        let mut acc = PackedGram::new(k);
        let mut row = vec![0.0; k];
        for i in range {
            row[..p].copy_from_slice(data.v_row(i));
            row[p] = lat.f_c[i];
            acc.add(&row, lat.xstar[i]);
        }
        acc
    });
    let mut acc = PackedGram::new(k);
    for part in &parts {
        acc.merge(part);
    }
    let eq = acc.into_equations();

    let prior = ctx.prior;
    let mut prior_var = vec![prior.v_alpha; k];
    prior_var[p] = prior.loading_variance;
    let mut selectable: Vec<bool> = PriorSpec::mandatory_mask(&prior.mandatory_alpha, p)
        .into_iter()
        .map(|m| !m)
        .collect();
    selectable.push(false);
    let mut delta = state.draw.delta_alpha.clone();
    delta.push(true);
    let b = select_and_draw(&eq, &prior_var, &selectable, &mut delta, state.draw.pi_alpha, ctx.selection_active, rng)?;
    delta.pop();
    state.draw.delta_alpha = delta;
    state.draw.coefficients.alpha.copy_from_slice(&b.as_slice()[..p]);
    state.draw.loadings.lambda_x = b[p];
    Ok(())
}

/// Normal equations of the stacked outcome regression, weighted by the
/// inverse idiosyncratic variance of each cell.
///
/// Every cell of arm `j` in period `t` has the compact row
/// `r = (1, w, f_c, f_spec)` and the same column map and weight, so the
/// Gram matrix of `r` is accumulated per `(j, t)` and scattered into the full
/// system once.
pub(crate) fn outcome_normal_equations(
    state: &ChainState,
    data: &PanelDataset,
    layout: OutcomeLayout,
    mode: Parallelism,
) -> NormalEquations {
    let k = layout.dim();
    let lat = &state.latent;
    let p = layout.p;
    let t_max = layout.t;
    let q = p + if layout.with_zeta { 3 } else { 2 };
    let cells = 2 * t_max;
    let parts = map_chunks(mode, data.n(), 0, |range, _| {
        let mut acc: Vec<PackedGram> = (0..cells).map(|_| PackedGram::new(q)).collect();
        let mut r = vec![0.0; q];
        r[0] = 1.0;
        for i in range {
            let j = data.x(i) as usize;
            r[p + 1] = lat.f_c[i];
            if layout.with_zeta {
                r[p + 2] = lat.f_spec[i];
            }
            for t in 0..data.n_observed(i) {
                for (dst, &src) in r[1..=p].iter_mut().zip(data.w_row(i, t)) {
                    *dst = src;
                }
                acc[j * t_max + t].add(&r, data.y(i, t));
            }
        }
        acc
    });
    let mut acc: Vec<PackedGram> = (0..cells).map(|_| PackedGram::new(q)).collect();
    for part in &parts {
        for (a, b) in acc.iter_mut().zip(part) {
            a.merge(b);
        }
    }

    let mut eq = NormalEquations::zeros(k);
    let var = &state.draw.variances;
    let mut map: Vec<Vec<usize>> = vec![Vec::with_capacity(2); q];
    for j in 0..2 {
        for t in 0..t_max {
            map.iter_mut().for_each(Vec::clear);
            map[0].push(layout.mu(t));
            for l in 0..p {
                map[1 + l].push(layout.gamma(l));
            }
            if j == 1 {
                map[0].push(layout.kappa(t));
                for l in 0..p {
                    map[1 + l].push(layout.theta(l));
                }
            }
            map[p + 1].push(layout.lambda(j, t));
            if layout.with_zeta {
                map[p + 2].push(layout.zeta(j, t));
            }
            let prec = 1.0 / var.arm(j)[t];
            let block = &acc[j * t_max + t];
            for a in 0..q {
                let h = block.xty[a] * prec;
                for &ca in &map[a] {
                    eq.xty[ca] += h;
                }
                for b in a..q {
                    let g = block.get(a, b) * prec;
                    if g == 0.0 {
                        continue;
                    }
                    for &ca in &map[a] {
                        for &cb in &map[b] {
                            eq.xtx[(ca, cb)] += g;
                            if a != b {
                                eq.xtx[(cb, ca)] += g;
                            }
                        }
                    }
                }
            }
        }
    }
    eq
}

/// Step 5: outcome coefficients with selection, and all outcome loadings.
pub fn step5_update_outcome_block(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<()> {
    let layout = OutcomeLayout::new(data, ctx.variant);
    let eq = outcome_normal_equations(state, data, layout, ctx.mode);
    let nb = layout.n_beta();
    let k = layout.dim();
    let prior = ctx.prior;
    let mandatory = PriorSpec::mandatory_mask(&prior.mandatory_beta, nb);
    let mut prior_var = vec![prior.loading_variance; k];
    let mut selectable = vec![false; k];
    for a in 0..nb {
        prior_var[a] = if mandatory[a] { prior.v_beta_free } else { prior.v_beta_slab };
        selectable[a] = !mandatory[a];
    }
    let mut delta = state.draw.delta_beta.clone();
    delta.resize(k, true);
    let b = select_and_draw(&eq, &prior_var, &selectable, &mut delta, state.draw.pi_beta, ctx.selection_active, rng)?;
    delta.truncate(nb);
    state.draw.delta_beta = delta;
    state.draw.coefficients.set_beta(&b.as_slice()[..nb]);
    let t_max = layout.t;
    let l = &mut state.draw.loadings;
    for t in 0..t_max {
        l.lambda0[t] = b[layout.lambda(0, t)];
        l.lambda1[t] = b[layout.lambda(1, t)];
        if layout.with_zeta {
            l.zeta0[t] = b[layout.zeta(0, t)];
            l.zeta1[t] = b[layout.zeta(1, t)];
        } else {
            l.zeta0[t] = 0.0;
            l.zeta1[t] = 0.0;
        }
    }
    Ok(())
}

/// Log working scales `ln c` applied by one boosting pass, per factor group
/// `[common, control-specific, treated-specific]`; `None` if skipped.
pub type BoostRecord = [Option<f64>; 3];

/// Scale move: draws `u = c²` from its generalized-inverse-Gaussian
/// conditional under the scale group with Haar measure `dc/c`, where `a` is
/// the loading sum of squares (`k` coordinates, multiplied by `c`) and `b`
/// the factor sum of squares (`m` coordinates, divided by `c`).
fn draw_scale(k: usize, m: usize, loading_ss: f64, factor_ss: f64, rng: &mut RandomStream) -> Result<Option<f64>> {
    if !(loading_ss > 0.0) || (m > 0 && !(factor_ss > 0.0)) {
        return Ok(None);
    }
    let p = 0.5 * (k as f64 - m as f64);
    let u = sample_gig(p, loading_ss, factor_ss, rng)?;
    Ok(Some(u.sqrt()))
}

/// Step 6: boosting by rescaling each factor group against its loadings,
/// then independent random sign flips.
pub fn step6_boost_and_signswitch(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<BoostRecord> {
    let mut record: BoostRecord = [None; 3];
    let t_max = data.periods();
    let lv = ctx.prior.loading_variance;
    let with_zeta = ctx.variant == ModelVariant::Fa;
    {
        let l = &state.draw.loadings;
        let loading_ss = (l.lambda_x * l.lambda_x
            + l.lambda0.iter().chain(&l.lambda1).map(|a| a * a).sum::<f64>())
            / lv;
        let factor_ss: f64 = state.latent.f_c.iter().map(|f| f * f).sum();
        if let Some(c) = draw_scale(2 * t_max + 1, data.n(), loading_ss, factor_ss, rng)? {
            rescale_group(state, data, 0, c);
            record[0] = Some(c.ln());
        }
    }
    if with_zeta {
        for j in 0..2 {
            let zeta = state.draw.loadings.zeta(j);
            let loading_ss = zeta.iter().map(|a| a * a).sum::<f64>() / lv;
            let members: Vec<usize> = (0..data.n()).filter(|&i| data.x(i) as usize == j).collect();
            let factor_ss: f64 = members.iter().map(|&i| state.latent.f_spec[i].powi(2)).sum();
            if let Some(c) = draw_scale(t_max, members.len(), loading_ss, factor_ss, rng)? {
                rescale_group(state, data, 1 + j, c);
                record[1 + j] = Some(c.ln());
            }
        }
    }
    let tau: [bool; 3] = [rng.random(), rng.random(), rng.random()];
    sign_switch(state, data, tau);
    Ok(record)
}

/// Multiplies the loadings of `group` (0 common, 1 + j specific to arm `j`)
/// by `c` and divides the matching factors by `c`.
pub(crate) fn rescale_group(state: &mut ChainState, data: &PanelDataset, group: usize, c: f64) {
    let l = &mut state.draw.loadings;
    if group == 0 {
        l.lambda_x *= c;
        l.lambda0.iter_mut().chain(l.lambda1.iter_mut()).for_each(|a| *a *= c);
        state.latent.f_c.iter_mut().for_each(|f| *f /= c);
        return;
    }
    let j = group - 1;
    let z = if j == 0 { &mut l.zeta0 } else { &mut l.zeta1 };
    z.iter_mut().for_each(|a| *a *= c);
    for i in 0..data.n() {
        if data.x(i) as usize == j {
            state.latent.f_spec[i] /= c;
        }
    }
}

/// Applies the sign flips `flip = [common, control, treated]`.
pub fn sign_switch(state: &mut ChainState, data: &PanelDataset, flip: [bool; 3]) {
    let l = &mut state.draw.loadings;
    if flip[0] {
        l.lambda_x = -l.lambda_x;
        l.lambda0.iter_mut().chain(l.lambda1.iter_mut()).for_each(|a| *a = -*a);
        state.latent.f_c.iter_mut().for_each(|f| *f = -*f);
    }
    for j in 0..2 {
        if flip[1 + j] {
            let z = if j == 0 { &mut l.zeta0 } else { &mut l.zeta1 };
            z.iter_mut().for_each(|a| *a = -*a);
            for i in 0..data.n() {
                if data.x(i) as usize == j {
                    state.latent.f_spec[i] = -state.latent.f_spec[i];
                }
            }
        }
    }
}

/// Step 7: inclusion probabilities from their beta conditionals.
pub fn step7_update_inclusion_probs(
    state: &mut ChainState,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<()> {
    let prior = ctx.prior;
    let d = &mut state.draw;
    let count = |delta: &[bool], mandatory: &[usize]| {
        let mask = PriorSpec::mandatory_mask(mandatory, delta.len());
        let sel: Vec<bool> = delta.iter().zip(&mask).filter(|(_, &m)| !m).map(|(&x, _)| x).collect();
        (sel.iter().filter(|&&x| x).count() as f64, sel.len() as f64)
    };
    let (k, n) = count(&d.delta_alpha, &prior.mandatory_alpha);
    d.pi_alpha = sample_beta(prior.pi_a + k, prior.pi_b + n - k, rng)?;
    let (k, n) = count(&d.delta_beta, &prior.mandatory_beta);
    d.pi_beta = sample_beta(prior.pi_a + k, prior.pi_b + n - k, rng)?;
    Ok(())
}

/// One full sweep of steps 1–7.
pub fn sweep(
    state: &mut ChainState,
    data: &PanelDataset,
    ctx: &SweepContext,
    rng: &mut RandomStream,
) -> Result<BoostRecord> {
    let resid = structural_residuals(&state.draw, data, ctx.mode);
    update_variances(state, data, ctx, rng, &resid)?;
    update_factors(state, data, ctx, rng, &resid)?;
    step3_update_utilities(state, data, ctx, rng)?;
    step4_update_selection_block(state, data, ctx, rng)?;
    step5_update_outcome_block(state, data, ctx, rng)?;
    let boost = step6_boost_and_signswitch(state, data, ctx, rng)?;
    step7_update_inclusion_probs(state, ctx, rng)?;
    Ok(boost)
}

/// First non-finite quantity in the state, if any.
pub(crate) fn non_finite(state: &ChainState) -> Option<String> {
    let d = &state.draw;
    let c = &d.coefficients;
    let l = &d.loadings;
    let groups: [(&str, &[f64]); 12] = [
        ("alpha", &c.alpha),
        ("mu", &c.mu),
        ("kappa", &c.kappa),
        ("gamma", &c.gamma),
        ("theta", &c.theta),
        ("lambda0", &l.lambda0),
        ("lambda1", &l.lambda1),
        ("zeta0", &l.zeta0),
        ("zeta1", &l.zeta1),
        ("sigma2_0", &d.variances.sigma2_0),
        ("sigma2_1", &d.variances.sigma2_1),
        ("f_c", &state.latent.f_c),
    ];
    if !l.lambda_x.is_finite() {
        return Some(format!("lambda_x = {}", l.lambda_x));
    }
    for (name, vals) in groups {
        if let Some((k, v)) = vals.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Some(format!("{name}[{}] = {v}", k + 1));
        }
    }
    if let Some(i) = state.latent.xstar.iter().chain(&state.latent.f_spec).position(|v| !v.is_finite()) {
        return Some(format!("latent entry {i} is not finite"));
    }
    None
}

pub(crate) fn sample_state_error(iteration: usize, what: String) -> Error {
    Error::Numerical(format!("non-finite state after sweep {iteration}: {what}"))
}
