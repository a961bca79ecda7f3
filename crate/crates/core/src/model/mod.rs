//! Data and parameter types plus the model's deterministic algebra.

pub mod algebra;
pub mod data;
pub mod params;

pub use algebra::{
    ate_from_means, ate_true, build_joint_covariance, check_identification, is_psd,
    loading_matrix, observed_outcome_moments, require_identified, standardize_alpha,
    structural_mean,
};
pub use data::{Arm, PanelDataset};
pub use params::{
    Coefficients, FactorLoadings, IdiosyncraticVariances, LatentState, ParameterDraw,
};
