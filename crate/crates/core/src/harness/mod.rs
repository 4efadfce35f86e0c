//! Desk-scale experiments: distortion sweeps, the Buffon equivalence of
//! quantized differences, tail curves, and their CSV/manifest outputs.

mod config;
mod distortion;
mod equivalence;
mod report;
pub mod stats;
mod tails;

pub use config::{DeltaScale, DeltaSpec, ExperimentConfig, PointGen, EPSILON_CEILING};
pub use distortion::{
    run_distortion, run_l2_distortion, sweep_epsilon, ExperimentReport, MAggregate, Metric,
    PairRecord, Summary, BAND_COVERAGE, SEPARATION_FLOOR,
};
pub use equivalence::{
    check_equivalence, difference_histogram, l1_expectation, second_moment_mc, EquivalenceResult,
    MeanCheck, ROWS_PER_CHUNK,
};
pub use report::{
    emit_report, emit_tails, replay, run_experiment, ExperimentKind, Manifest, Outcome,
    ProjectorSeed, AGGREGATES_FILE, MANIFEST_FILE, RECORDS_FILE, SUMMARY_FILE, TAILS_FILE,
};
pub use tails::{bernstein_half_width, tail_curve, TailKind, TailReport, TailRow, MIN_DRAWS};
