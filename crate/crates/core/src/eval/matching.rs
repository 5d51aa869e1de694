use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// How predictions are compared with gold answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// NFKC, lowercase, collapsed whitespace, then substring search.
    #[default]
    Normalized,
    /// Byte-exact substring search.
    Strict,
}

/// NFKC, lowercase, internal whitespace runs collapsed to one space, trimmed.
pub fn normalize(s: &str) -> String {
    let folded: String = s.nfkc().collect::<String>().to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True iff some gold answer occurs as a contiguous substring of the prediction.
pub fn is_correct(prediction: &str, gold_answers: &[String]) -> bool {
    is_correct_with(prediction, gold_answers, MatchMode::Normalized)
}

pub fn is_correct_with(prediction: &str, gold_answers: &[String], mode: MatchMode) -> bool {
    match mode {
        MatchMode::Normalized => {
            let p = normalize(prediction);
            gold_answers.iter().any(|g| {
                let g = normalize(g);
                !g.is_empty() && p.contains(&g)
            })
        }
        MatchMode::Strict => gold_answers
            .iter()
            .any(|g| !g.is_empty() && prediction.contains(g.as_str())),
    }
}
