//! Protocol rounds: four-atom generation, restart of failed atoms, fusion of
//! chains and chain growth statistics.

mod chain;
mod fusion;
mod generation;
mod grow;
mod model;
mod restart;

pub use chain::{
    build_briegel_cluster, build_encoded_chain, build_four_atom_cluster, fused_layout, ChainState, MAX_TARGET_ATOMS,
};
pub use fusion::{fuse, fuse_at, fusion_branches, measure_out, FusionResult};
pub use generation::{
    emission_branches, emitted_state, run_generation_round_exact, GenerationTables, RoundResult, RoundSampler,
    SubsetTable, GENERATION_ATOMS,
};
pub use grow::{expected_growth, grow_chain, loss_scaling_comparison, mean_counts, FailurePolicy, GrowthModel, GrowthStats, LossScaling};
pub use model::{temporal_modes, DetectorModel, ImperfectionModel};
pub use restart::{restart, restart_atom, restart_success_probability, RestartReport};
