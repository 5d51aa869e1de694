//! Scoring of predictions and the accuracy / popularity analyses built on it.

mod matching;
mod metrics;
mod quadrant;
mod record;

pub use matching::{is_correct, is_correct_with, normalize, MatchMode};
pub use metrics::{
    accuracy_by_relation, binned_accuracy, overall_accuracy, popularity_correlation, PopularityBin,
    RelationAccuracy, DEFAULT_BIN_WIDTH, DEFAULT_MIN_BIN_N,
};
pub use quadrant::{quadrant_analysis, QuadrantCell, QuadrantTable};
pub use record::{
    index_dataset, join, pair_runs, read_records, write_records, Mode, PredictionRecord,
};
