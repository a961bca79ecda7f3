//! Random sampling primitives and analytic moment functions.

pub mod dist;
pub mod hpd;
pub mod normal;
pub mod rng;
pub mod truncnorm;

pub use dist::{
    psd_sqrt, sample_beta, sample_gig, sample_inverse_gamma, sample_log_concave, sample_mvn,
    standard_normal,
};
pub use hpd::hpd_interval;
pub use normal::mills_terms;
pub use rng::RandomStream;
pub use truncnorm::{sample_truncated_normal, trunc_moments, TruncationBounds};
