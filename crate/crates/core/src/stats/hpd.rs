use crate::error::{Error, Result};

pub const MIN_HPD_DRAWS: usize = 10;

/// Shortest window of a sorted sample holding `⌈level · m⌉` of its `m` draws.
/// Ties go to the window with the smallest lower endpoint.
pub fn hpd_interval(sorted: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("HPD level must lie in (0,1), got {level}")));
    }
    let m = sorted.len();
    if m < MIN_HPD_DRAWS {
        return Err(Error::InsufficientData(format!(
            "HPD interval needs at least {MIN_HPD_DRAWS} draws, got {m}"
        )));
    }
    if sorted.iter().any(|x| x.is_nan()) || sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("HPD interval needs a sorted sample without NaN"));
    }
    // Guard against level·m landing a hair above an integer in floating point.
    let count = ((level * m as f64) - 1e-9).ceil().max(1.0) as usize;
    let count = count.min(m);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for start in 0..=(m - count) {
        let width = sorted[start + count - 1] - sorted[start];
        if width < best_width {
            best_width = width;
            best = start;
        }
    }
    Ok((sorted[best], sorted[best + count - 1]))
}
