use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{QAExample, Relation};
use crate::error::{Error, Result};
use crate::eval::{pair_runs, Mode, PredictionRecord};
use crate::io;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Retrieve,
    Parametric,
}

/// Retrieve iff `log10_pop < threshold` (strict).
pub fn decide<F: Scalar>(log10_pop: F, threshold: F) -> Decision {
    if log10_pop < threshold {
        Decision::Retrieve
    } else {
        Decision::Parametric
    }
}

/// Per-relation log10-popularity thresholds. `-inf` never retrieves, `+inf`
/// always retrieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    #[serde(with = "threshold_map")]
    pub thresholds: BTreeMap<Relation, f64>,
    #[serde(default)]
    pub tuned_on: String,
    pub retrieval_mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    /// Mean held-out adaptive accuracy over the tuning repeats.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_test_accuracy: Option<f64>,
}

impl ThresholdPolicy {
    /// Same threshold for every listed relation.
    pub fn uniform(relations: impl IntoIterator<Item = Relation>, threshold: f64) -> Self {
        Self {
            thresholds: relations.into_iter().map(|r| (r, threshold)).collect(),
            tuned_on: String::new(),
            retrieval_mode: Mode::Retrieval,
            seed: None,
            split_fraction: None,
            repeats: None,
            mean_test_accuracy: None,
        }
    }

    /// Uniform policy over the relations present in `dataset`.
    pub fn uniform_for(dataset: &[QAExample], threshold: f64) -> Self {
        Self::uniform(dataset.iter().map(|e| e.relation.clone()), threshold)
    }

    pub fn threshold(&self, relation: &Relation) -> Result<f64> {
        self.thresholds
            .get(relation)
            .copied()
            .ok_or_else(|| Error::Policy(format!("no threshold for relation '{relation}'")))
    }

    pub fn validate(&self) -> Result<()> {
        for (rel, t) in &self.thresholds {
            if t.is_nan() {
                return Err(Error::Policy(format!("threshold for '{rel}' is NaN")));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let p: Self = io::read_json(path)?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }
}

pub fn route(example: &QAExample, policy: &ThresholdPolicy) -> Result<Decision> {
    let threshold = policy.threshold(&example.relation)?;
    Ok(decide(example.require_log10_popularity()?, threshold))
}

/// Accuracy of the mixed system: the retrieval-augmented record where the
/// policy retrieves, the parametric record elsewhere.
pub fn adaptive_accuracy(
    vanilla: &[PredictionRecord],
    retrieval: &[PredictionRecord],
    dataset: &[QAExample],
    policy: &ThresholdPolicy,
) -> Result<f64> {
    let pairs = pair_runs(vanilla, retrieval, dataset)?;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (ex, v, r) in &pairs {
        let chosen = match route(ex, policy)? {
            Decision::Retrieve => r,
            Decision::Parametric => v,
        };
        correct += chosen.correct as usize;
    }
    Ok(correct as f64 / pairs.len() as f64)
}

/// Share of `dataset` routed to retrieval.
pub fn retrieval_fraction(dataset: &[QAExample], policy: &ThresholdPolicy) -> Result<f64> {
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let mut n = 0usize;
    for ex in dataset {
        n += (route(ex, policy)? == Decision::Retrieve) as usize;
    }
    Ok(n as f64 / dataset.len() as f64)
}

mod threshold_map {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Sentinel(String),
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<Relation, f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(map.len()))?;
        for (rel, &t) in map {
            let repr = if t == f64::INFINITY {
                Repr::Sentinel("+inf".into())
            } else if t == f64::NEG_INFINITY {
                Repr::Sentinel("-inf".into())
            } else {
                Repr::Number(t)
            };
            m.serialize_entry(rel.as_str(), &repr)?;
        }
        m.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Relation, f64>, D::Error> {
        let raw: BTreeMap<String, Repr> = BTreeMap::deserialize(d)?;
        raw.into_iter()
            .map(|(rel, repr)| {
                let t = match repr {
                    Repr::Number(x) => x,
                    Repr::Sentinel(s) => match s.as_str() {
                        "+inf" | "inf" => f64::INFINITY,
                        "-inf" => f64::NEG_INFINITY,
                        other => {
                            return Err(serde::de::Error::custom(format!(
                                "threshold for '{rel}': expected a number, \"-inf\" or \"+inf\", got \"{other}\""
                            )))
                        }
                    },
                };
                Ok((rel.parse().unwrap(), t))
            })
            .collect()
    }
}
