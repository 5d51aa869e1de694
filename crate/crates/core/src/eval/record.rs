use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::QAExample;
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Vanilla,
    Retrieval,
    Genread,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Vanilla => "vanilla",
            Mode::Retrieval => "retrieval",
            Mode::Genread => "genread",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Mode::Vanilla),
            "retrieval" => Ok(Mode::Retrieval),
            "genread" => Ok(Mode::Genread),
            other => Err(Error::Validation(format!(
                "unknown mode '{other}' (expected vanilla, retrieval or genread)"
            ))),
        }
    }
}

/// One question answered in one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub question_id: String,
    pub mode: Mode,
    #[serde(default)]
    pub prompt: String,
    pub prediction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval_recall1: Option<bool>,
    pub correct: bool,
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
    #[serde(default)]
    pub latency_ms: Option<u64>,
    /// Stage-1 document of a two-stage generate-then-read run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_context: Option<String>,
    /// Stage 1 produced an empty document and stage 2 ran without context.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty_generated_context: bool,
}

impl PredictionRecord {
    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::Vanilla && self.retrieved_doc_id.is_some() {
            return Err(Error::Validation(format!(
                "record {}: vanilla records cannot carry a retrieved document",
                self.question_id
            )));
        }
        Ok(())
    }

    pub fn total_tokens(&self) -> Option<u64> {
        Some(self.prompt_tokens? + self.completion_tokens?)
    }
}

pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    let records: Vec<PredictionRecord> = io::read_jsonl(path)?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<usize> {
    io::write_jsonl(path, records)
}

/// Question id → example.
pub fn index_dataset(dataset: &[QAExample]) -> HashMap<&str, &QAExample> {
    dataset.iter().map(|e| (e.id.as_str(), e)).collect()
}

/// Pairs each record with its example; unknown ids are a join error.
pub fn join<'a>(
    records: &'a [PredictionRecord],
    dataset: &'a [QAExample],
) -> Result<Vec<(&'a QAExample, &'a PredictionRecord)>> {
    let by_id = index_dataset(dataset);
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        match by_id.get(r.question_id.as_str()) {
            Some(ex) => out.push((*ex, r)),
            None => missing.push(r.question_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Join {
            what: "records reference unknown question ids".into(),
            ids: missing,
        });
    }
    Ok(out)
}

/// Aligns two runs by question id, in `dataset` order. Both runs must cover
/// exactly the same ids, each at most once.
pub fn pair_runs<'a>(
    first: &'a [PredictionRecord],
    second: &'a [PredictionRecord],
    dataset: &'a [QAExample],
) -> Result<Vec<(&'a QAExample, &'a PredictionRecord, &'a PredictionRecord)>> {
    join(first, dataset)?;
    join(second, dataset)?;
    let a = unique_by_id(first)?;
    let b = unique_by_id(second)?;
    let mut mismatched: Vec<String> = a
        .keys()
        .filter(|k| !b.contains_key(*k))
        .chain(b.keys().filter(|k| !a.contains_key(*k)))
        .map(|k| k.to_string())
        .collect();
    if !mismatched.is_empty() {
        mismatched.sort();
        return Err(Error::Join {
            what: "runs do not cover the same questions; ids present in only one run".into(),
            ids: mismatched,
        });
    }
    Ok(dataset
        .iter()
        .filter_map(|ex| Some((ex, *a.get(ex.id.as_str())?, *b.get(ex.id.as_str())?)))
        .collect())
}

fn unique_by_id(records: &[PredictionRecord]) -> Result<HashMap<&str, &PredictionRecord>> {
    let mut map = HashMap::with_capacity(records.len());
    for r in records {
        if map.insert(r.question_id.as_str(), r).is_some() {
            return Err(Error::Join {
                what: "duplicate record for question".into(),
                ids: vec![r.question_id.clone()],
            });
        }
    }
    Ok(map)
}
