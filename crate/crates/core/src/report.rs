//! Assembles accuracy, correlation, binning, quadrant and adaptive-retrieval
//! results into one report, and writes it as JSON plus CSV tables.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::{
    adaptive_accuracy, cost_report, retrieval_fraction, CostModel, CostReport, ThresholdPolicy,
};
use crate::dataset::{QAExample, Relation};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy_by_relation, binned_accuracy, overall_accuracy, popularity_correlation,
    quadrant_analysis, Mode, PopularityBin, PredictionRecord, QuadrantTable, DEFAULT_BIN_WIDTH,
    DEFAULT_MIN_BIN_N,
};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportOptions {
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default = "default_min_bin_n")]
    pub min_bin_n: usize,
}

fn default_bin_width() -> f64 {
    DEFAULT_BIN_WIDTH
}

fn default_min_bin_n() -> usize {
    DEFAULT_MIN_BIN_N
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            bin_width: DEFAULT_BIN_WIDTH,
            min_bin_n: DEFAULT_MIN_BIN_N,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationSummary {
    pub accuracy: f64,
    /// `null` when undefined.
    pub correlation: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub n: usize,
    pub overall_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_at_1: Option<f64>,
    pub per_relation: BTreeMap<Relation, RelationSummary>,
    pub bins: Vec<PopularityBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSummary {
    pub policy: ThresholdPolicy,
    /// Accuracy of the policy over every paired question.
    pub adaptive_accuracy: f64,
    /// Mean held-out accuracy from tuning, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_test_accuracy: Option<f64>,
    pub retrieval_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_questions: usize,
    pub runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrants: Option<QuadrantTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveSummary>,
}

fn run_mode(records: &[PredictionRecord]) -> Result<Mode> {
    let mode = records
        .first()
        .map(|r| r.mode)
        .ok_or_else(|| Error::Validation("empty run".into()))?;
    if let Some(r) = records.iter().find(|r| r.mode != mode) {
        return Err(Error::Validation(format!(
            "run mixes modes {mode} and {} (question {})",
            r.mode, r.question_id
        )));
    }
    Ok(mode)
}

pub fn summarize_run(
    records: &[PredictionRecord],
    dataset: &[QAExample],
    opts: &ReportOptions,
) -> Result<RunSummary> {
    let mode = run_mode(records)?;
    let acc = accuracy_by_relation(records, dataset)?;
    let corr = popularity_correlation(records, dataset)?;
    let per_relation = acc
        .into_iter()
        .map(|(rel, a)| {
            let s = RelationSummary {
                accuracy: a.accuracy,
                correlation: corr.get(&rel).copied().flatten(),
                n: a.n,
            };
            (rel, s)
        })
        .collect();
    let labelled: Vec<bool> = records.iter().filter_map(|r| r.retrieval_recall1).collect();
    Ok(RunSummary {
        mode,
        n: records.len(),
        overall_accuracy: overall_accuracy(records).unwrap_or(0.0),
        recall_at_1: (!labelled.is_empty())
            .then(|| labelled.iter().filter(|&&h| h).count() as f64 / labelled.len() as f64),
        per_relation,
        bins: binned_accuracy(records, dataset, opts.bin_width, opts.min_bin_n)?,
    })
}

/// Builds the report. Quadrants need a vanilla and a retrieval run; the
/// adaptive section additionally needs a policy.
pub fn build_report(
    dataset: &[QAExample],
    runs: &[Vec<PredictionRecord>],
    policy: Option<&ThresholdPolicy>,
    cost_model: Option<&CostModel>,
    opts: &ReportOptions,
) -> Result<EvalReport> {
    let summaries = runs
        .iter()
        .map(|r| summarize_run(r, dataset, opts))
        .collect::<Result<Vec<_>>>()?;
    let find = |mode: Mode| {
        runs.iter()
            .zip(&summaries)
            .find(|(_, s)| s.mode == mode)
            .map(|(r, _)| r)
    };
    let vanilla = find(Mode::Vanilla);
    let augmented = policy
        .and_then(|p| find(p.retrieval_mode))
        .or_else(|| find(Mode::Retrieval));
    let quadrants = match (vanilla, find(Mode::Retrieval)) {
        (Some(v), Some(r)) => Some(quadrant_analysis(v, r, dataset)?),
        _ => None,
    };
    let adaptive = match (vanilla, augmented, policy) {
        (Some(v), Some(r), Some(p)) => {
            let paired: Vec<QAExample> = {
                let ids: std::collections::HashSet<&str> =
                    v.iter().map(|x| x.question_id.as_str()).collect();
                dataset
                    .iter()
                    .filter(|e| ids.contains(e.id.as_str()))
                    .cloned()
                    .collect()
            };
            Some(AdaptiveSummary {
                policy: p.clone(),
                adaptive_accuracy: adaptive_accuracy(v, r, dataset, p)?,
                mean_test_accuracy: p.mean_test_accuracy,
                retrieval_fraction: retrieval_fraction(&paired, p)?,
                cost: cost_model
                    .map(|m| cost_report(v, r, dataset, p, m))
                    .transpose()?,
            })
        }
        _ => None,
    };
    Ok(EvalReport {
        n_questions: dataset.len(),
        runs: summaries,
        quadrants,
        adaptive,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Validation(format!("report serialization: {e}")))
    }

    /// Writes `report.json`, `per_relation.csv`, `bins.csv` and, when
    /// present, `quadrants.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let mut json = self.to_json()?;
        json.push('\n');
        io::atomic_write(&dir.join("report.json"), json.as_bytes())?;

        let mut rel = csv::Writer::from_writer(Vec::new());
        rel.write_record(["mode", "relation", "n", "accuracy", "correlation"])
            .map_err(csv_err)?;
        for run in &self.runs {
            for (r, s) in &run.per_relation {
                rel.write_record([
                    run.mode.to_string(),
                    r.to_string(),
                    s.n.to_string(),
                    s.accuracy.to_string(),
                    s.correlation.map(|c| c.to_string()).unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
        }
        io::atomic_write(
            &dir.join("per_relation.csv"),
            &rel.into_inner().map_err(|e| csv_err(e.into_error()))?,
        )?;

        let mut bins = csv::Writer::from_writer(Vec::new());
        bins.write_record([
            "mode",
            "lower",
            "upper",
            "center",
            "n",
            "correct",
            "accuracy",
            "wilson_low",
            "wilson_high",
        ])
        .map_err(csv_err)?;
        for run in &self.runs {
            for b in &run.bins {
                bins.write_record([
                    run.mode.to_string(),
                    b.lower.to_string(),
                    b.upper.to_string(),
                    b.center.to_string(),
                    b.n.to_string(),
                    b.correct.to_string(),
                    b.accuracy.to_string(),
                    b.wilson_low.to_string(),
                    b.wilson_high.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        io::atomic_write(
            &dir.join("bins.csv"),
            &bins.into_inner().map_err(|e| csv_err(e.into_error()))?,
        )?;

        if let Some(q) = &self.quadrants {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "vanilla_correct",
                "retrieval_correct",
                "count",
                "fraction",
                "recall1",
            ])
            .map_err(csv_err)?;
            for v in [true, false] {
                for r in [true, false] {
                    let c = q.cell(v, r);
                    w.write_record([
                        v.to_string(),
                        r.to_string(),
                        c.count.to_string(),
                        c.fraction.to_string(),
                        c.recall1.map(|x| x.to_string()).unwrap_or_default(),
                    ])
                    .map_err(csv_err)?;
                }
            }
            io::atomic_write(
                &dir.join("quadrants.csv"),
                &w.into_inner().map_err(|e| csv_err(e.into_error()))?,
            )?;
        }
        Ok(())
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Validation(format!("csv: {e}"))
}
