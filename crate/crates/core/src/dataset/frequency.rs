//! Built-in term-frequency proxy: exact, word-bounded occurrence counts of
//! subject names in a reference text corpus.

use std::collections::HashMap;
use std::io::BufRead;

use aho_corasick::AhoCorasick;

use super::KnowledgeTriple;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct AliasFrequency {
    counts: HashMap<String, u64>,
}

impl AliasFrequency {
    /// Counts every name of every triple's subject over the lines of `corpus`.
    /// Occurrences of different names are counted independently, including
    /// overlapping ones.
    pub fn build<R: BufRead>(triples: &[KnowledgeTriple], corpus: R) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for t in triples {
            for name in t.subject_names() {
                let name = name.trim();
                if !name.is_empty() && !index.contains_key(name) {
                    index.insert(name.to_string(), names.len());
                    names.push(name.to_string());
                }
            }
        }
        let mut counts = vec![0u64; names.len()];
        if !names.is_empty() {
            let ac = AhoCorasick::new(&names)
                .map_err(|e| Error::Validation(format!("alias automaton: {e}")))?;
            for line in corpus.lines() {
                let line = line.map_err(|e| Error::io("<corpus>", e))?;
                for m in ac.find_overlapping_iter(&line) {
                    if word_bounded(&line, m.start(), m.end()) {
                        counts[m.pattern().as_usize()] += 1;
                    }
                }
            }
        }
        Ok(Self {
            counts: names.into_iter().zip(counts).collect(),
        })
    }

    pub fn count(&self, name: &str) -> u64 {
        self.counts.get(name.trim()).copied().unwrap_or(0)
    }

    /// Sum of occurrence counts over the subject's distinct names.
    pub fn frequency(&self, triple: &KnowledgeTriple) -> f64 {
        let mut seen: Vec<&str> = Vec::new();
        let mut total = 0u64;
        for name in triple.subject_names() {
            let name = name.trim();
            if !seen.contains(&name) {
                seen.push(name);
                total += self.count(name);
            }
        }
        total as f64
    }
}

fn word_bounded(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}
