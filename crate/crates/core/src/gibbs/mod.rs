//! Gibbs sampler: data augmentation, spike-and-slab selection, boosting and
//! sign switching, plus chain orchestration.

mod chain;
mod columns;
mod config;
pub mod regression;
mod steps;

pub use chain::{chain_seed, initialize, run_chain, run_chains, BoostStats, ChainOutput, RunMetadata, RunOptions};
pub use columns::DrawColumns;
pub use config::{ChainConfig, ModelVariant, PriorSpec};
pub use steps::{
    sign_switch, step1_update_variances, step2_update_factors, step3_update_utilities,
    step4_update_selection_block, step5_update_outcome_block, step6_boost_and_signswitch,
    step7_update_inclusion_probs, sweep, BoostRecord, ChainState, SweepContext,
};
