use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{join, PredictionRecord};
use crate::dataset::{QAExample, Relation};
use crate::error::Result;
use crate::stats::{self, wilson_interval, Z_95};

/// Default popularity bin width in log10 views.
pub const DEFAULT_BIN_WIDTH: f64 = 0.5;
/// Bins with fewer questions are omitted.
pub const DEFAULT_MIN_BIN_N: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationAccuracy {
    pub accuracy: f64,
    pub n: usize,
}

/// Mean correctness; `None` for no records.
pub fn overall_accuracy(records: &[PredictionRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    Some(records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64)
}

pub fn accuracy_by_relation(
    records: &[PredictionRecord],
    dataset: &[QAExample],
) -> Result<BTreeMap<Relation, RelationAccuracy>> {
    let mut tally: BTreeMap<Relation, (usize, usize)> = BTreeMap::new();
    for (ex, r) in join(records, dataset)? {
        let t = tally.entry(ex.relation.clone()).or_default();
        t.0 += r.correct as usize;
        t.1 += 1;
    }
    Ok(tally
        .into_iter()
        .map(|(rel, (k, n))| {
            let acc = RelationAccuracy {
                accuracy: k as f64 / n as f64,
                n,
            };
            (rel, acc)
        })
        .collect())
}

/// Pearson correlation between log10 popularity and the 0/1 correctness
/// indicator, per relation. `None` marks relations where it is undefined
/// (fewer than two records, or no variance on either side).
pub fn popularity_correlation(
    records: &[PredictionRecord],
    dataset: &[QAExample],
) -> Result<BTreeMap<Relation, Option<f64>>> {
    let mut groups: BTreeMap<Relation, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (ex, r) in join(records, dataset)? {
        let g = groups.entry(ex.relation.clone()).or_default();
        g.0.push(ex.require_log10_popularity()?);
        g.1.push(if r.correct { 1.0 } else { 0.0 });
    }
    Ok(groups
        .into_iter()
        .map(|(rel, (x, y))| (rel, stats::pearson(&x, &y)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopularityBin {
    /// Bin covers `[lower, upper)` in log10 popularity.
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl PopularityBin {
    pub fn from_counts(lower: f64, upper: f64, correct: usize, n: usize) -> Self {
        let w = wilson_interval(correct, n, Z_95);
        Self {
            lower,
            upper,
            center: (lower + upper) / 2.0,
            n,
            correct,
            accuracy: if n == 0 {
                0.0
            } else {
                correct as f64 / n as f64
            },
            wilson_low: w.low,
            wilson_high: w.high,
        }
    }
}

/// Accuracy in fixed-width log10-popularity bins with Wilson 95% intervals.
/// Bins with fewer than `min_bin_n` questions are dropped.
pub fn binned_accuracy(
    records: &[PredictionRecord],
    dataset: &[QAExample],
    bin_width_log10: f64,
    min_bin_n: usize,
) -> Result<Vec<PopularityBin>> {
    assert!(bin_width_log10 > 0.0, "bin width must be positive");
    let mut bins: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for (ex, r) in join(records, dataset)? {
        let idx = (ex.require_log10_popularity()? / bin_width_log10).floor() as i64;
        let b = bins.entry(idx).or_default();
        b.0 += r.correct as usize;
        b.1 += 1;
    }
    Ok(bins
        .into_iter()
        .filter(|(_, (_, n))| *n >= min_bin_n)
        .map(|(idx, (k, n))| {
            let lower = idx as f64 * bin_width_log10;
            PopularityBin::from_counts(lower, lower + bin_width_log10, k, n)
        })
        .collect())
}
