use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::Relation;
use crate::error::{Error, Result};

/// Placeholder for the subject label inside a question pattern.
pub const SUBJECT_PLACEHOLDER: &str = "[subj]";

/// A question pattern for one relation, pre-split around its single subject
/// placeholder so substitution is a literal concatenation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionTemplate {
    relation: Relation,
    prefix: String,
    suffix: String,
}

impl QuestionTemplate {
    pub fn new(relation: Relation, pattern: &str) -> Result<Self> {
        let count = pattern.matches(SUBJECT_PLACEHOLDER).count();
        if count != 1 {
            return Err(Error::Config(format!(
                "template for '{relation}' must contain {SUBJECT_PLACEHOLDER} exactly once (found {count})"
            )));
        }
        if !pattern.trim_end().ends_with('?') {
            return Err(Error::Config(format!(
                "template for '{relation}' must end with '?'"
            )));
        }
        let (prefix, suffix) = pattern.split_once(SUBJECT_PLACEHOLDER).unwrap();
        Ok(Self {
            relation,
            prefix: prefix.to_string(),
            suffix: suffix.trim_end().to_string(),
        })
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    pub fn pattern(&self) -> String {
        format!("{}{}{}", self.prefix, SUBJECT_PLACEHOLDER, self.suffix)
    }

    /// Substitutes `subject` literally. A subject that itself contains the
    /// placeholder text is not substituted again.
    pub fn render(&self, subject: &str) -> String {
        let mut s = String::with_capacity(self.prefix.len() + subject.len() + self.suffix.len());
        s.push_str(&self.prefix);
        s.push_str(subject);
        s.push_str(&self.suffix);
        s
    }
}

/// Relation → template registry.
#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    templates: BTreeMap<Relation, QuestionTemplate>,
}

impl TemplateSet {
    /// The sixteen shipped templates, one per built-in relation.
    pub fn builtin() -> Self {
        const PATTERNS: [(&str, &str); 16] = [
            ("occupation", "What is [subj]'s occupation?"),
            ("place of birth", "In what city was [subj] born?"),
            ("genre", "What genre is [subj]?"),
            ("father", "Who is the father of [subj]?"),
            ("country", "In what country is [subj]?"),
            ("producer", "Who was the producer of [subj]?"),
            ("director", "Who was the director of [subj]?"),
            ("capital of", "What is [subj] the capital of?"),
            ("screenwriter", "Who was the screenwriter for [subj]?"),
            ("composer", "Who was the composer of [subj]?"),
            ("color", "What color is [subj]?"),
            ("religion", "What is the religion of [subj]?"),
            ("sport", "What sport does [subj] play?"),
            ("author", "Who is the author of [subj]?"),
            ("mother", "Who is the mother of [subj]?"),
            ("capital", "What is the capital of [subj]?"),
        ];
        let mut set = Self::default();
        for (rel, pat) in PATTERNS {
            set.register(QuestionTemplate::new(rel.parse().unwrap(), pat).unwrap());
        }
        set
    }

    /// Adds or replaces the template for its relation.
    pub fn register(&mut self, template: QuestionTemplate) {
        self.templates.insert(template.relation.clone(), template);
    }

    pub fn get(&self, relation: &Relation) -> Option<&QuestionTemplate> {
        self.templates.get(relation)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Parses a JSON object `{relation: pattern}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("templates: {e}")))?;
        let mut set = Self::default();
        for (rel, pat) in raw {
            set.register(QuestionTemplate::new(rel.parse().unwrap(), &pat)?);
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
