//! Token-cost and latency accounting for a routing policy.

use serde::{Deserialize, Serialize};

use super::policy::{route, Decision, ThresholdPolicy};
use crate::dataset::QAExample;
use crate::error::{Error, Result};
use crate::eval::{pair_runs, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub price_per_1k_prompt_tokens: f64,
    pub price_per_1k_completion_tokens: f64,
    /// Added to every question routed to retrieval.
    #[serde(default)]
    pub retrieval_latency_ms: u64,
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            (
                "price_per_1k_prompt_tokens",
                self.price_per_1k_prompt_tokens,
            ),
            (
                "price_per_1k_completion_tokens",
                self.price_per_1k_completion_tokens,
            ),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "cost model: {name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn record_cost(&self, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        prompt_tokens as f64 / 1000.0 * self.price_per_1k_prompt_tokens
            + completion_tokens as f64 / 1000.0 * self.price_per_1k_completion_tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyEstimates {
    pub adaptive_ms: u64,
    pub always_retrieve_ms: u64,
    pub vanilla_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub n_questions: usize,
    pub retrieval_fraction: f64,
    pub adaptive_cost: f64,
    pub always_retrieve_cost: f64,
    pub vanilla_cost: f64,
    /// `1 - adaptive_cost / always_retrieve_cost`; 0 when retrieval is free.
    pub savings_fraction: f64,
    pub latency: LatencyEstimates,
}

struct Usage {
    cost: f64,
    latency_ms: u64,
}

fn usage(r: &PredictionRecord, model: &CostModel) -> Option<Usage> {
    Some(Usage {
        cost: model.record_cost(r.prompt_tokens?, r.completion_tokens?),
        latency_ms: r.latency_ms?,
    })
}

pub fn cost_report(
    vanilla: &[PredictionRecord],
    retrieval: &[PredictionRecord],
    dataset: &[QAExample],
    policy: &ThresholdPolicy,
    model: &CostModel,
) -> Result<CostReport> {
    model.validate()?;
    let pairs = pair_runs(vanilla, retrieval, dataset)?;
    let missing: Vec<String> = pairs
        .iter()
        .flat_map(|(_, v, r)| [v, r])
        .filter(|rec| usage(rec, model).is_none())
        .map(|rec| format!("{} ({})", rec.question_id, rec.mode))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Accounting { ids: missing });
    }
    let mut adaptive = (0.0, 0u64);
    let mut always = (0.0, 0u64);
    let mut parametric = (0.0, 0u64);
    let mut retrieved = 0usize;
    for (ex, v, r) in &pairs {
        let vu = usage(v, model).unwrap();
        let ru = usage(r, model).unwrap();
        let ru_latency = ru.latency_ms + model.retrieval_latency_ms;
        parametric.0 += vu.cost;
        parametric.1 += vu.latency_ms;
        always.0 += ru.cost;
        always.1 += ru_latency;
        match route(ex, policy)? {
            Decision::Retrieve => {
                retrieved += 1;
                adaptive.0 += ru.cost;
                adaptive.1 += ru_latency;
            }
            Decision::Parametric => {
                adaptive.0 += vu.cost;
                adaptive.1 += vu.latency_ms;
            }
        }
    }
    let n = pairs.len();
    Ok(CostReport {
        n_questions: n,
        retrieval_fraction: if n == 0 {
            0.0
        } else {
            retrieved as f64 / n as f64
        },
        adaptive_cost: adaptive.0,
        always_retrieve_cost: always.0,
        vanilla_cost: parametric.0,
        savings_fraction: if always.0 > 0.0 {
            1.0 - adaptive.0 / always.0
        } else {
            0.0
        },
        latency: LatencyEstimates {
            adaptive_ms: adaptive.1,
            always_retrieve_ms: always.1,
            vanilla_ms: parametric.1,
        },
    })
}
