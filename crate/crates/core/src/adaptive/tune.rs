//! Brute-force threshold search over repeated stratified random splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::ThresholdPolicy;
use crate::dataset::{fingerprint, QAExample, Relation};
use crate::error::{Error, Result};
use crate::eval::{pair_runs, Mode, PredictionRecord};
use crate::rng::rng_for;
use crate::scalar::Scalar;

pub const DEFAULT_SPLIT_FRACTION: f64 = 0.75;
pub const DEFAULT_REPEATS: usize = 100;

/// One question as seen by the search: popularity and the correctness of
/// each system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunePoint<F> {
    pub log10_pop: F,
    pub vanilla_correct: bool,
    pub retrieval_correct: bool,
}

/// `-inf`, each midpoint between consecutive distinct popularities, `+inf`,
/// ascending.
pub fn candidate_thresholds<F: Scalar>(points: &[TunePoint<F>]) -> Vec<F> {
    let mut pops: Vec<F> = points.iter().map(|p| p.log10_pop).collect();
    pops.sort_by(|a, b| a.partial_cmp(b).expect("popularity is not NaN"));
    pops.dedup();
    let two = F::lit(2.0);
    let mut out = Vec::with_capacity(pops.len() + 1);
    out.push(F::neg_infinity());
    out.extend(pops.windows(2).map(|w| w[0] + (w[1] - w[0]) / two));
    out.push(F::infinity());
    out
}

/// Questions answered correctly by the mixed system at `threshold`.
pub fn correct_at<F: Scalar>(points: &[TunePoint<F>], threshold: F) -> usize {
    points
        .iter()
        .filter(|p| {
            if p.log10_pop < threshold {
                p.retrieval_correct
            } else {
                p.vanilla_correct
            }
        })
        .count()
}

/// The candidate with the most correct answers; the smallest such threshold
/// on ties. Sweeps the sorted points once.
pub fn best_threshold<F: Scalar>(points: &[TunePoint<F>]) -> (F, usize) {
    let mut sorted: Vec<&TunePoint<F>> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.log10_pop
            .partial_cmp(&b.log10_pop)
            .expect("popularity is not NaN")
    });
    let mut correct = points.iter().filter(|p| p.vanilla_correct).count() as i64;
    let mut best = (F::neg_infinity(), correct);
    let mut i = 0;
    while i < sorted.len() {
        let pop = sorted[i].log10_pop;
        while i < sorted.len() && sorted[i].log10_pop == pop {
            correct += sorted[i].retrieval_correct as i64 - sorted[i].vanilla_correct as i64;
            i += 1;
        }
        // everything at or below `pop` now retrieves
        let threshold = if i < sorted.len() {
            pop + (sorted[i].log10_pop - pop) / F::lit(2.0)
        } else {
            F::infinity()
        };
        if correct > best.1 {
            best = (threshold, correct);
        }
    }
    (best.0, best.1 as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub thresholds: BTreeMap<Relation, f64>,
    /// Positions (in dataset order of the paired questions) of the tuning split.
    pub tuning: Vec<usize>,
    pub tuning_accuracy: f64,
    /// `None` when the held-out split is empty.
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    /// Refit on every paired question.
    pub policy: ThresholdPolicy,
    pub mean_test_accuracy: f64,
    pub per_repeat: Vec<RepeatOutcome>,
}

impl TuneOutcome {
    pub fn per_repeat_accuracies(&self) -> Vec<f64> {
        self.per_repeat
            .iter()
            .filter_map(|r| r.test_accuracy)
            .collect()
    }
}

/// Paired questions grouped for tuning, in dataset order.
pub struct TuneData {
    pub relations: Vec<Relation>,
    pub points: Vec<TunePoint<f64>>,
}

impl TuneData {
    pub fn from_runs(
        vanilla: &[PredictionRecord],
        retrieval: &[PredictionRecord],
        dataset: &[QAExample],
    ) -> Result<Self> {
        let pairs = pair_runs(vanilla, retrieval, dataset)?;
        let mut relations = Vec::with_capacity(pairs.len());
        let mut points = Vec::with_capacity(pairs.len());
        for (ex, v, r) in pairs {
            relations.push(ex.relation.clone());
            points.push(TunePoint {
                log10_pop: ex.require_log10_popularity()?,
                vanilla_correct: v.correct,
                retrieval_correct: r.correct,
            });
        }
        Ok(Self { relations, points })
    }

    pub fn by_relation(&self) -> BTreeMap<&Relation, Vec<usize>> {
        let mut m: BTreeMap<&Relation, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.relations.iter().enumerate() {
            m.entry(r).or_default().push(i);
        }
        m
    }

    /// Stratified tuning split for `repeat`: within each relation,
    /// `round(fraction · n)` questions chosen at random. Sorted positions.
    pub fn tuning_split(&self, fraction: f64, seed: u64, repeat: usize) -> Vec<usize> {
        let mut rng = rng_for(seed, &["split", &repeat.to_string()]);
        let mut tuning = Vec::new();
        for (_, mut idx) in self.by_relation() {
            idx.shuffle(&mut rng);
            let k = (fraction * idx.len() as f64).round() as usize;
            tuning.extend_from_slice(&idx[..k.min(idx.len())]);
        }
        tuning.sort_unstable();
        tuning
    }

    /// Fits one threshold per relation on the given positions. Relations with
    /// no position in `subset` get `-inf`.
    pub fn fit(&self, subset: &[usize]) -> BTreeMap<Relation, f64> {
        let mut groups: BTreeMap<&Relation, Vec<TunePoint<f64>>> =
            self.relations.iter().map(|r| (r, Vec::new())).collect();
        for &i in subset {
            groups
                .get_mut(&self.relations[i])
                .unwrap()
                .push(self.points[i]);
        }
        groups
            .into_iter()
            .map(|(rel, pts)| {
                if pts.is_empty() {
                    log::warn!("relation '{rel}' has no tuning questions; never retrieving");
                    (rel.clone(), f64::NEG_INFINITY)
                } else {
                    (rel.clone(), best_threshold(&pts).0)
                }
            })
            .collect()
    }

    /// Mixed-system accuracy over `subset`; `None` if empty.
    pub fn accuracy(&self, subset: &[usize], thresholds: &BTreeMap<Relation, f64>) -> Option<f64> {
        if subset.is_empty() {
            return None;
        }
        let correct = subset
            .iter()
            .filter(|&&i| {
                let p = &self.points[i];
                if p.log10_pop < thresholds[&self.relations[i]] {
                    p.retrieval_correct
                } else {
                    p.vanilla_correct
                }
            })
            .count();
        Some(correct as f64 / subset.len() as f64)
    }
}

pub fn tune_thresholds(
    vanilla: &[PredictionRecord],
    retrieval: &[PredictionRecord],
    dataset: &[QAExample],
    split_fraction: f64,
    repeats: usize,
    rng_seed: u64,
) -> Result<TuneOutcome> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    if repeats == 0 {
        return Err(Error::Validation("repeats must be >= 1".into()));
    }
    let data = TuneData::from_runs(vanilla, retrieval, dataset)?;
    let all: Vec<usize> = (0..data.points.len()).collect();
    let per_repeat: Vec<RepeatOutcome> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let tuning = data.tuning_split(split_fraction, rng_seed, r);
            let held_out: Vec<usize> = {
                let mut in_tuning = vec![false; all.len()];
                tuning.iter().for_each(|&i| in_tuning[i] = true);
                all.iter().copied().filter(|&i| !in_tuning[i]).collect()
            };
            let thresholds = data.fit(&tuning);
            RepeatOutcome {
                tuning_accuracy: data.accuracy(&tuning, &thresholds).unwrap_or(0.0),
                test_accuracy: data.accuracy(&held_out, &thresholds),
                thresholds,
                tuning,
            }
        })
        .collect();
    let tests: Vec<f64> = per_repeat.iter().filter_map(|r| r.test_accuracy).collect();
    if tests.len() < per_repeat.len() {
        log::warn!(
            "{} of {} repeats had an empty held-out split",
            per_repeat.len() - tests.len(),
            per_repeat.len()
        );
    }
    let mean_test_accuracy = if tests.is_empty() {
        0.0
    } else {
        tests.iter().sum::<f64>() / tests.len() as f64
    };
    let retrieval_mode = retrieval.first().map_or(Mode::Retrieval, |r| r.mode);
    let policy = ThresholdPolicy {
        thresholds: data.fit(&all),
        tuned_on: fingerprint(dataset),
        retrieval_mode,
        seed: Some(rng_seed),
        split_fraction: Some(split_fraction),
        repeats: Some(repeats),
        mean_test_accuracy: Some(mean_test_accuracy),
    };
    Ok(TuneOutcome {
        policy,
        mean_test_accuracy,
        per_repeat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(pops: &[f64], van: &[u8], ret: &[u8]) -> Vec<TunePoint<f64>> {
        pops.iter()
            .zip(van)
            .zip(ret)
            .map(|((&p, &v), &r)| TunePoint {
                log10_pop: p,
                vanilla_correct: v == 1,
                retrieval_correct: r == 1,
            })
            .collect()
    }

    #[test]
    fn four_question_example() {
        let p = pts(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1], &[1, 1, 0, 0]);
        let cands = candidate_thresholds(&p);
        assert_eq!(cands.len(), 5);
        // exhaustive: -inf → 2, 1.5 → 3, 2.5 → 4, 3.5 → 3, +inf → 2
        let scores: Vec<usize> = cands.iter().map(|&t| correct_at(&p, t)).collect();
        assert_eq!(scores, vec![2, 3, 4, 3, 2]);
        assert_eq!(best_threshold(&p), (2.5, 4));
    }

    #[test]
    fn ties_prefer_smallest_threshold() {
        let p = pts(&[1.0, 2.0], &[1, 1], &[1, 1]);
        assert_eq!(best_threshold(&p).0, f64::NEG_INFINITY);
        let p = pts(&[1.0, 2.0], &[0, 0], &[1, 1]);
        assert_eq!(best_threshold(&p).0, f64::INFINITY);
    }

    #[test]
    fn equal_popularities_share_a_side() {
        let p = pts(&[2.0, 2.0, 3.0], &[0, 1, 1], &[1, 0, 0]);
        assert_eq!(
            candidate_thresholds(&p),
            vec![f64::NEG_INFINITY, 2.5, f64::INFINITY]
        );
        assert_eq!(best_threshold(&p), (f64::NEG_INFINITY, 2));
    }

    #[test]
    fn works_in_f32() {
        let p: Vec<TunePoint<f32>> = [(1.0f32, false, true), (2.0, true, false)]
            .iter()
            .map(|&(x, v, r)| TunePoint {
                log10_pop: x,
                vanilla_correct: v,
                retrieval_correct: r,
            })
            .collect();
        assert_eq!(best_threshold(&p), (1.5f32, 2));
    }

    proptest! {
        #[test]
        fn sweep_matches_exhaustive(v in proptest::collection::vec((0u8..8, any::<bool>(), any::<bool>()), 0..40)) {
            let p: Vec<TunePoint<f64>> = v
                .iter()
                .map(|&(x, a, b)| TunePoint { log10_pop: x as f64 * 0.5, vanilla_correct: a, retrieval_correct: b })
                .collect();
            let (t, c) = best_threshold(&p);
            let cands = candidate_thresholds(&p);
            let scores: Vec<usize> = cands.iter().map(|&t| correct_at(&p, t)).collect();
            let max = *scores.iter().max().unwrap();
            let first = cands[scores.iter().position(|&s| s == max).unwrap()];
            prop_assert_eq!(c, max);
            prop_assert_eq!(t, first);
        }
    }
}
