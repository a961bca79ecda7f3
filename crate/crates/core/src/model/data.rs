use crate::error::{Error, Result};

/// Treatment arm of a subject.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    Control,
    Treated,
}

impl Arm {
    pub fn from_indicator(x: u8) -> Result<Self> {
        match x {
            0 => Ok(Arm::Control),
            1 => Ok(Arm::Treated),
            other => Err(Error::invalid(format!("treatment indicator must be 0 or 1, got {other}"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Arm::Control => 0,
            Arm::Treated => 1,
        }
    }

    pub const BOTH: [Arm; 2] = [Arm::Control, Arm::Treated];
}

/// Observed panel: treatment, selection covariates, outcome covariates and
/// outcomes. Subject `i` is observed on the prefix `0..n_observed(i)` of the
/// `periods` panel periods; cells outside the prefix hold NaN and are never read.
#[derive(Clone, Debug)]
pub struct PanelDataset {
    periods: usize,
    p_v: usize,
    p_w: usize,
    x: Vec<u8>,
    v: Vec<f64>,
    w: Vec<f64>,
    y: Vec<f64>,
    n_obs: Vec<usize>,
}

impl PanelDataset {
    /// Assemble a dataset from row-major buffers: `v` is `n × p_v`, `w` is
    /// `n × periods × p_w`, `y` is `n × periods`. Unobserved cells may hold
    /// anything; they are overwritten with NaN.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        periods: usize,
        p_v: usize,
        p_w: usize,
        x: Vec<u8>,
        v: Vec<f64>,
        mut w: Vec<f64>,
        mut y: Vec<f64>,
        n_obs: Vec<usize>,
    ) -> Result<Self> {
        let n = x.len();
        if periods == 0 {
            return Err(Error::invalid("panel needs at least one period"));
        }
        if v.len() != n * p_v || w.len() != n * periods * p_w || y.len() != n * periods || n_obs.len() != n {
            return Err(Error::invalid(format!(
                "buffer sizes do not match n={n}, T={periods}, p_v={p_v}, p_w={p_w}"
            )));
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi > 1 {
                return Err(Error::invalid(format!("subject {i}: treatment must be 0 or 1")));
            }
            let ti = n_obs[i];
            if ti == 0 || ti > periods {
                return Err(Error::invalid(format!(
                    "subject {i}: observed periods must be in 1..={periods}, got {ti}"
                )));
            }
            if v[i * p_v..(i + 1) * p_v].iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid(format!("subject {i}: non-finite selection covariate")));
            }
            for t in 0..periods {
                let cell = i * periods + t;
                let wrow = &mut w[cell * p_w..(cell + 1) * p_w];
                if t < ti {
                    if !y[cell].is_finite() || wrow.iter().any(|a| !a.is_finite()) {
                        return Err(Error::invalid(format!(
                            "subject {i}, period {}: non-finite observed value",
                            t + 1
                        )));
                    }
                } else {
                    y[cell] = f64::NAN;
                    wrow.iter_mut().for_each(|a| *a = f64::NAN);
                }
            }
        }
        Ok(Self { periods, p_v, p_w, x, v, w, y, n_obs })
    }

    /// Dataset with no subjects; used for prior-only runs.
    pub fn empty(periods: usize, p_v: usize, p_w: usize) -> Result<Self> {
        Self::from_parts(periods, p_v, p_w, vec![], vec![], vec![], vec![], vec![])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn periods(&self) -> usize {
        self.periods
    }

    #[inline]
    pub fn p_v(&self) -> usize {
        self.p_v
    }

    #[inline]
    pub fn p_w(&self) -> usize {
        self.p_w
    }

    #[inline]
    pub fn x(&self, i: usize) -> u8 {
        self.x[i]
    }

    pub fn treatments(&self) -> &[u8] {
        &self.x
    }

    pub fn arm(&self, i: usize) -> Arm {
        if self.x[i] == 1 {
            Arm::Treated
        } else {
            Arm::Control
        }
    }

    #[inline]
    pub fn v_row(&self, i: usize) -> &[f64] {
        &self.v[i * self.p_v..(i + 1) * self.p_v]
    }

    #[inline]
    pub fn w_row(&self, i: usize, t: usize) -> &[f64] {
        let cell = i * self.periods + t;
        &self.w[cell * self.p_w..(cell + 1) * self.p_w]
    }

    #[inline]
    pub fn y(&self, i: usize, t: usize) -> f64 {
        self.y[i * self.periods + t]
    }

    /// Observed outcomes of subject `i` (the prefix `0..n_observed(i)`).
    pub fn y_observed(&self, i: usize) -> &[f64] {
        let start = i * self.periods;
        &self.y[start..start + self.n_obs[i]]
    }

    #[inline]
    pub fn n_observed(&self, i: usize) -> usize {
        self.n_obs[i]
    }

    #[inline]
    pub fn is_observed(&self, i: usize, t: usize) -> bool {
        t < self.n_obs[i]
    }

    pub fn obs_mask(&self) -> Vec<Vec<bool>> {
        (0..self.n())
            .map(|i| (0..self.periods).map(|t| self.is_observed(i, t)).collect())
            .collect()
    }

    /// `n_jt`: number of subjects in arm `j` observed in period `t`, indexed `[j][t]`.
    pub fn arm_period_counts(&self) -> [Vec<usize>; 2] {
        let mut counts = [vec![0; self.periods], vec![0; self.periods]];
        for i in 0..self.n() {
            let j = self.x[i] as usize;
            for t in 0..self.n_obs[i] {
                counts[j][t] += 1;
            }
        }
        counts
    }

    /// Mean outcome covariate row per period over subjects observed in that
    /// period; zeros for periods nobody reaches.
    pub fn period_covariate_means(&self) -> Vec<Vec<f64>> {
        let mut sums = vec![vec![0.0; self.p_w]; self.periods];
        let mut counts = vec![0usize; self.periods];
        for i in 0..self.n() {
            for t in 0..self.n_obs[i] {
                counts[t] += 1;
                for (s, &wv) in sums[t].iter_mut().zip(self.w_row(i, t)) {
                    *s += wv;
                }
            }
        }
        for (row, &c) in sums.iter_mut().zip(&counts) {
            if c > 0 {
                row.iter_mut().for_each(|s| *s /= c as f64);
            }
        }
        sums
    }

    pub fn n_cells(&self) -> usize {
        self.n_obs.iter().sum()
    }
}

impl PartialEq for PanelDataset {
    fn eq(&self, other: &Self) -> bool {
        if self.periods != other.periods
            || self.p_v != other.p_v
            || self.p_w != other.p_w
            || self.x != other.x
            || self.n_obs != other.n_obs
            || self.v.iter().zip(&other.v).any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return false;
        }
        for i in 0..self.n() {
            for t in 0..self.n_obs[i] {
                if self.y(i, t).to_bits() != other.y(i, t).to_bits() {
                    return false;
                }
                let same_w = self
                    .w_row(i, t)
                    .iter()
                    .zip(other.w_row(i, t))
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                if !same_w {
                    return false;
                }
            }
        }
        true
    }
}
