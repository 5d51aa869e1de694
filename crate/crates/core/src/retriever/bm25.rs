//! Okapi BM25 over an in-memory inverted index.
//!
//! score(D, Q) = Σ_{t ∈ Q} idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·|D|/avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//!
//! Query terms are de-duplicated before scoring.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{tokenize, validate_corpus, Passage, PassageLookup, Retriever, SearchHit};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params<F> {
    pub k1: F,
    pub b: F,
}

impl<F: Scalar> Default for Bm25Params<F> {
    fn default() -> Self {
        Self {
            k1: F::lit(1.2),
            b: F::lit(0.75),
        }
    }
}

impl<F: Scalar> Bm25Params<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= F::zero()) {
            return Err(Error::Validation(format!(
                "k1 must be finite and >= 0, got {}",
                self.k1
            )));
        }
        if !(self.b >= F::zero() && self.b <= F::one()) {
            return Err(Error::Validation(format!(
                "b must lie in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Bm25Index<F> {
    pub(super) params: Bm25Params<F>,
    pub(super) passages: Vec<Passage>,
    pub(super) by_id: HashMap<String, u32>,
    /// term → (doc index, term frequency), ascending doc index.
    pub(super) postings: HashMap<String, Vec<(u32, u32)>>,
    pub(super) doc_lengths: Vec<u32>,
    pub(super) avg_doc_length: F,
}

impl<F: Scalar> Bm25Index<F> {
    pub fn build(passages: Vec<Passage>, params: Bm25Params<F>) -> Result<Self> {
        params.validate()?;
        validate_corpus(&passages)?;
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            let tokens = tokenize(&p.full_text());
            doc_lengths.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((i as u32, count));
            }
        }
        Self::from_parts(params, passages, postings, doc_lengths)
    }

    pub(super) fn from_parts(
        params: Bm25Params<F>,
        passages: Vec<Passage>,
        postings: HashMap<String, Vec<(u32, u32)>>,
        doc_lengths: Vec<u32>,
    ) -> Result<Self> {
        if doc_lengths.len() != passages.len() {
            return Err(Error::Format(
                "document length table does not match corpus".into(),
            ));
        }
        let by_id = passages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.doc_id.clone(), i as u32))
            .collect();
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = F::lit(total as f64) / F::from_count(doc_lengths.len().max(1));
        Ok(Self {
            params,
            passages,
            by_id,
            postings,
            doc_lengths,
            avg_doc_length,
        })
    }

    pub fn params(&self) -> Bm25Params<F> {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.passages.len()
    }

    pub fn avg_doc_length(&self) -> F {
        self.avg_doc_length
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.by_id
            .get(doc_id)
            .map(|&i| self.doc_lengths[i as usize])
    }

    /// `(doc_id, term frequency)` pairs for `term` (already tokenized form).
    pub fn postings(&self, term: &str) -> Vec<(&str, u32)> {
        self.postings
            .get(term)
            .map(|list| {
                list.iter()
                    .map(|&(d, tf)| (self.passages[d as usize].doc_id.as_str(), tf))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn idf(&self, df: usize) -> F {
        let n = F::from_count(self.doc_count());
        let df = F::from_count(df);
        let half = F::lit(0.5);
        (F::one() + (n - df + half) / (df + half)).ln()
    }

    /// Top-`k` documents by BM25 score, descending, ties by ascending doc_id.
    /// Documents with zero score are omitted.
    pub fn search(&self, query: &str, k: usize) -> Vec<SearchHit<F>> {
        if k == 0 {
            return Vec::new();
        }
        let mut seen = HashSet::new();
        let terms: Vec<String> = tokenize(query)
            .into_iter()
            .filter(|t| seen.insert(t.clone()))
            .collect();
        let Bm25Params { k1, b } = self.params;
        let mut contributions: HashMap<u32, Vec<F>> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for &(doc, tf) in list {
                let tf = F::lit(tf as f64);
                let dl = F::lit(self.doc_lengths[doc as usize] as f64);
                let norm = F::one() - b + b * dl / self.avg_doc_length;
                let s = idf * tf * (k1 + F::one()) / (tf + k1 * norm);
                contributions.entry(doc).or_default().push(s);
            }
        }
        // Summing in ascending order makes documents whose per-term
        // contributions are permutations of each other tie exactly.
        let mut ranked: Vec<(u32, F)> = contributions
            .into_iter()
            .map(|(doc, mut parts)| {
                parts
                    .sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                (doc, parts.into_iter().fold(F::zero(), |acc, x| acc + x))
            })
            .filter(|&(_, s)| s > F::zero())
            .collect();
        ranked.sort_unstable_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| {
                    self.passages[a.0 as usize]
                        .doc_id
                        .cmp(&self.passages[b.0 as usize].doc_id)
                })
        });
        ranked.truncate(k);
        ranked
            .into_iter()
            .enumerate()
            .map(|(i, (doc, score))| SearchHit {
                doc_id: self.passages[doc as usize].doc_id.clone(),
                score,
                rank: i + 1,
            })
            .collect()
    }
}

impl<F: Scalar> PassageLookup for Bm25Index<F> {
    fn passage(&self, doc_id: &str) -> Option<&Passage> {
        self.by_id.get(doc_id).map(|&i| &self.passages[i as usize])
    }
}

impl<F: Scalar> Retriever for Bm25Index<F> {
    fn retrieve(&self, query: &str, k: usize) -> Vec<SearchHit<f64>> {
        self.search(query, k)
            .into_iter()
            .map(|h| SearchHit {
                doc_id: h.doc_id,
                score: h.score.to_f64_lossy(),
                rank: h.rank,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[&str]) -> Vec<Passage> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Passage {
                doc_id: format!("d{}", i + 1),
                title: String::new(),
                text: t.to_string(),
            })
            .collect()
    }

    #[test]
    fn single_passage_counts() {
        let idx = Bm25Index::<f64>::build(corpus(&["a b a"]), Bm25Params::default()).unwrap();
        assert_eq!(idx.doc_length("d1"), Some(3));
        assert_eq!(idx.postings("a"), vec![("d1", 2)]);
        assert_eq!(idx.doc_count(), 1);
    }

    #[test]
    fn empty_and_duplicate_corpora_rejected() {
        assert!(Bm25Index::<f64>::build(vec![], Bm25Params::default()).is_err());
        let mut c = corpus(&["x", "y"]);
        c[1].doc_id = "d1".into();
        assert!(matches!(
            Bm25Index::<f64>::build(c, Bm25Params::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn average_length() {
        let idx =
            Bm25Index::<f64>::build(corpus(&["a", "a b", "a b c d e f"]), Bm25Params::default())
                .unwrap();
        assert_eq!(idx.avg_doc_length(), 3.0);
    }

    #[test]
    fn bad_params_rejected() {
        let p = Bm25Params { k1: -1.0, b: 0.5 };
        assert!(Bm25Index::<f64>::build(corpus(&["a"]), p).is_err());
        let p = Bm25Params { k1: 1.0, b: 1.5 };
        assert!(Bm25Index::<f64>::build(corpus(&["a"]), p).is_err());
    }

    #[test]
    fn misses_and_k() {
        let idx = Bm25Index::<f64>::build(
            corpus(&["cat sat", "cat cat mat", "dog"]),
            Bm25Params::default(),
        )
        .unwrap();
        assert!(idx.search("zebra", 5).is_empty());
        assert!(idx.search("?!", 5).is_empty());
        assert!(idx.search("cat", 0).is_empty());
        let hits = idx.search("cat", 10);
        assert_eq!(
            hits.iter().map(|h| h.doc_id.as_str()).collect::<Vec<_>>(),
            ["d2", "d1"]
        );
        assert_eq!(hits.iter().map(|h| h.rank).collect::<Vec<_>>(), [1, 2]);
    }

    #[test]
    fn ties_break_by_doc_id() {
        let mut c = corpus(&["same words", "same words"]);
        c[0].doc_id = "zz".into();
        c[1].doc_id = "aa".into();
        let idx = Bm25Index::<f64>::build(c, Bm25Params::default()).unwrap();
        let hits = idx.search("same", 2);
        assert_eq!(hits[0].doc_id, "aa");
        assert_eq!(hits[0].score, hits[1].score);
    }

    #[test]
    fn f32_index_agrees_on_ranking() {
        let c = corpus(&["cat sat", "cat cat mat", "dog"]);
        let a = Bm25Index::<f32>::build(c.clone(), Bm25Params::default()).unwrap();
        let b = Bm25Index::<f64>::build(c, Bm25Params::default()).unwrap();
        let ra: Vec<_> = a.search("cat", 3).into_iter().map(|h| h.doc_id).collect();
        let rb: Vec<_> = b.search("cat", 3).into_iter().map(|h| h.doc_id).collect();
        assert_eq!(ra, rb);
    }
}
