//! Simulation study: synthetic compositions generated from balance
//! coordinates with a known set of important logratios, and the metrics
//! that score a selection against that truth.

mod batch;
mod metrics;
mod scenario;

pub use batch::{
    run_batch, run_rng, simulate_run, Aggregate, BatchConfig, BatchResult, MeanSd, RunFailure,
    RunMetrics, SEED_RULE,
};
pub use metrics::{capture_curve, fpr_fnr, rank_difference, variance_ranks, SelectionRates};
pub use scenario::{
    build_scenario, generate_dataset, generate_dataset_with, important_plrs, sample_balances,
    GroundTruth, ImportanceRule, Scenario, ScenarioId, NOISE_BOUND, RELEVANT_CORRELATION,
};
