//! Popularity-gated retrieval: per-relation thresholds, their tuning, and
//! what they save.

mod cost;
mod policy;
mod tune;

pub use cost::{cost_report, CostModel, CostReport, LatencyEstimates};
pub use policy::{adaptive_accuracy, decide, retrieval_fraction, route, Decision, ThresholdPolicy};
pub use tune::{
    best_threshold, candidate_thresholds, correct_at, tune_thresholds, RepeatOutcome, TuneData,
    TuneOutcome, TunePoint, DEFAULT_REPEATS, DEFAULT_SPLIT_FRACTION,
};
