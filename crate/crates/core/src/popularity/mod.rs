//! Page-view popularity: log transform, per-relation normalization, and a
//! cached page-views client.

mod fetch;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use fetch::{
    annotate_dataset, PageviewsClient, PageviewsConfig, PopularityRecord, YearMonth, DEFAULT_MONTH,
    USER_AGENT_ENV,
};

use crate::dataset::{QAExample, Relation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats;

/// `log10(max(views, 1))`.
pub fn log_popularity<F: Scalar>(views: u64) -> F {
    let v = <F as num_traits::NumCast>::from(views.max(1)).unwrap_or_else(F::max_value);
    v.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationPopularityStats<F> {
    pub mean_log10_pop: F,
    /// Population standard deviation.
    pub std_log10_pop: F,
    pub count: usize,
}

/// Mean and standard deviation of log-popularity per relation. Unannotated
/// examples are skipped; relations with no annotated example are absent.
pub fn relation_stats<F: Scalar>(
    examples: &[QAExample],
) -> BTreeMap<Relation, RelationPopularityStats<F>> {
    let mut by_rel: BTreeMap<Relation, Vec<F>> = BTreeMap::new();
    for ex in examples {
        if let Some(v) = ex.popularity {
            by_rel
                .entry(ex.relation.clone())
                .or_default()
                .push(log_popularity(v));
        }
    }
    by_rel
        .into_iter()
        .map(|(rel, xs)| {
            let (mean, std) = stats::mean_std(&xs).expect("non-empty group");
            let s = RelationPopularityStats {
                mean_log10_pop: mean,
                std_log10_pop: std,
                count: xs.len(),
            };
            (rel, s)
        })
        .collect()
}

/// `(log10_pop - mean) / std` for the example's relation; 0 when std is 0.
pub fn relative_popularity<F: Scalar>(
    example: &QAExample,
    stats: &BTreeMap<Relation, RelationPopularityStats<F>>,
) -> Result<F> {
    let s = stats.get(&example.relation).ok_or_else(|| {
        Error::Lookup(format!(
            "no popularity statistics for relation '{}'",
            example.relation
        ))
    })?;
    let views = example.popularity.ok_or_else(|| {
        Error::Validation(format!(
            "question {} has no popularity annotation",
            example.id
        ))
    })?;
    Ok(standardize(log_popularity(views), s))
}

pub fn standardize<F: Scalar>(log10_pop: F, s: &RelationPopularityStats<F>) -> F {
    if s.std_log10_pop <= F::zero() {
        F::zero()
    } else {
        (log10_pop - s.mean_log10_pop) / s.std_log10_pop
    }
}
