//! Lexical retrieval over a paragraph corpus.

mod bm25;
mod persist;
mod tokenize;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bm25::{Bm25Index, Bm25Params};
pub use persist::{FORMAT_VERSION, MAGIC};
pub use tokenize::tokenize;

use crate::error::{Error, Result};
use crate::eval::normalize;
use crate::io;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

impl Passage {
    /// Title and text joined by a space, as indexed and as matched for recall.
    pub fn full_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{} {}", self.title, self.text)
        }
    }

    /// Rendering used as prompt context.
    pub fn as_context(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{}\n{}", self.title, self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit<F> {
    pub doc_id: String,
    pub score: F,
    /// 1-based.
    pub rank: usize,
}

pub trait PassageLookup {
    fn passage(&self, doc_id: &str) -> Option<&Passage>;
}

impl PassageLookup for [Passage] {
    fn passage(&self, doc_id: &str) -> Option<&Passage> {
        self.iter().find(|p| p.doc_id == doc_id)
    }
}

impl PassageLookup for Vec<Passage> {
    fn passage(&self, doc_id: &str) -> Option<&Passage> {
        self.as_slice().passage(doc_id)
    }
}

impl PassageLookup for HashMap<String, Passage> {
    fn passage(&self, doc_id: &str) -> Option<&Passage> {
        self.get(doc_id)
    }
}

/// Object-safe retrieval interface so other retrievers can stand in for BM25.
pub trait Retriever: PassageLookup + Send + Sync {
    fn retrieve(&self, query: &str, k: usize) -> Vec<SearchHit<f64>>;
}

/// True iff a normalized gold answer occurs in the title+text of any of the
/// top-`k` hits.
pub fn recall_at_k<F, P>(
    hits: &[SearchHit<F>],
    passages: &P,
    gold_answers: &[String],
    k: usize,
) -> bool
where
    P: PassageLookup + ?Sized,
{
    let gold: Vec<String> = gold_answers
        .iter()
        .map(|g| normalize(g))
        .filter(|g| !g.is_empty())
        .collect();
    hits.iter()
        .take(k)
        .filter_map(|h| passages.passage(&h.doc_id))
        .any(|p| {
            let text = normalize(&p.full_text());
            gold.iter().any(|g| text.contains(g.as_str()))
        })
}

pub fn read_corpus(path: &Path) -> Result<Vec<Passage>> {
    io::read_jsonl(path)
}

pub(crate) fn validate_corpus(passages: &[Passage]) -> Result<()> {
    if passages.is_empty() {
        return Err(Error::Validation("cannot index an empty corpus".into()));
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, p) in passages.iter().enumerate() {
        if p.text.trim().is_empty() {
            return Err(Error::Validation(format!(
                "passage {} has empty text",
                p.doc_id
            )));
        }
        if let Some(first) = seen.insert(p.doc_id.as_str(), i) {
            return Err(Error::Validation(format!(
                "duplicate doc_id '{}' (entries {} and {})",
                p.doc_id,
                first + 1,
                i + 1
            )));
        }
    }
    Ok(())
}
