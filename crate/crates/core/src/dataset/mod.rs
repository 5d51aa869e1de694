//! Knowledge-graph triples → popularity-diverse QA dataset.

mod frequency;
mod relation;
mod sampling;
mod template;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use frequency::AliasFrequency;
pub use relation::Relation;
pub use sampling::{inclusion_probability, is_included, sample_triples, DEFAULT_PER_RELATION_CAP};
pub use template::{QuestionTemplate, TemplateSet, SUBJECT_PLACEHOLDER};

use crate::error::{Error, Result};
use crate::io;

/// An object entity of a triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEntity {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

/// A (subject, relation, objects) triple as read from the triples JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeTriple {
    pub subj_id: String,
    #[serde(rename = "subj")]
    pub subj_label: String,
    #[serde(default)]
    pub subj_aliases: Vec<String>,
    pub relation: Relation,
    pub objects: Vec<ObjectEntity>,
}

impl KnowledgeTriple {
    pub fn validate(&self) -> Result<()> {
        if self.subj_label.trim().is_empty() {
            return Err(Error::Validation(format!(
                "triple {}: empty subject label",
                self.subj_id
            )));
        }
        if self.answer_strings().is_empty() {
            return Err(Error::Validation(format!(
                "triple {} ({}): no object labels or aliases",
                self.subj_id, self.relation
            )));
        }
        Ok(())
    }

    /// Object labels and aliases, trimmed, de-duplicated, first-seen order.
    pub fn answer_strings(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for obj in &self.objects {
            for s in std::iter::once(&obj.label).chain(&obj.aliases) {
                let s = s.trim();
                if !s.is_empty() && !out.iter().any(|o| o == s) {
                    out.push(s.to_string());
                }
            }
        }
        out
    }

    pub fn object_ids(&self) -> impl Iterator<Item = &str> {
        self.objects.iter().map(|o| o.id.as_str())
    }

    /// Subject label followed by its aliases.
    pub fn subject_names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.subj_label.as_str())
            .chain(self.subj_aliases.iter().map(String::as_str))
    }
}

/// One templated question with its gold answers and popularity annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAExample {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(rename = "subj")]
    pub subj_label: String,
    pub subj_id: String,
    pub relation: Relation,
    /// Monthly page views of the subject; `None` until annotated.
    pub popularity: Option<u64>,
}

impl QAExample {
    pub fn log10_popularity(&self) -> Option<f64> {
        self.popularity
            .map(crate::popularity::log_popularity::<f64>)
    }

    /// Like [`Self::log10_popularity`] but an error when unannotated.
    pub fn require_log10_popularity(&self) -> Result<f64> {
        self.log10_popularity().ok_or_else(|| {
            Error::Validation(format!("question {} has no popularity annotation", self.id))
        })
    }
}

pub fn example_id(subj_id: &str, relation: &Relation) -> String {
    format!("{}::{}", subj_id, relation.as_str().replace(' ', "_"))
}

/// Merges triples sharing (subject, relation) into the first occurrence,
/// taking the union of their objects. Input order of first occurrences is kept.
pub fn merge_duplicates(
    triples: impl IntoIterator<Item = KnowledgeTriple>,
) -> Vec<KnowledgeTriple> {
    let mut out: Vec<KnowledgeTriple> = Vec::new();
    let mut seen: HashMap<(String, Relation), usize> = HashMap::new();
    for t in triples {
        match seen.get(&(t.subj_id.clone(), t.relation.clone())) {
            Some(&i) => {
                let first = &mut out[i];
                for obj in t.objects {
                    if !first.objects.iter().any(|o| o == &obj) {
                        first.objects.push(obj);
                    }
                }
                for a in t.subj_aliases {
                    if !first.subj_aliases.contains(&a) {
                        first.subj_aliases.push(a);
                    }
                }
            }
            None => {
                seen.insert((t.subj_id.clone(), t.relation.clone()), out.len());
                out.push(t);
            }
        }
    }
    out
}

/// Turns a triple into a question by substituting the subject label into the
/// relation's template. Gold answers are every object label and alias.
pub fn verbalize(triple: &KnowledgeTriple, templates: &TemplateSet) -> Result<QAExample> {
    let template = templates.get(&triple.relation).ok_or_else(|| {
        Error::Config(format!(
            "no question template for relation '{}'",
            triple.relation
        ))
    })?;
    triple.validate()?;
    Ok(QAExample {
        id: example_id(&triple.subj_id, &triple.relation),
        question: template.render(&triple.subj_label),
        answers: triple.answer_strings(),
        subj_label: triple.subj_label.clone(),
        subj_id: triple.subj_id.clone(),
        relation: triple.relation.clone(),
        popularity: None,
    })
}

pub fn read_triples(path: &Path) -> Result<Vec<KnowledgeTriple>> {
    io::read_jsonl(path)
}

pub fn write_dataset(examples: &[QAExample], path: &Path) -> Result<usize> {
    io::write_jsonl(path, examples)
}

pub fn read_dataset(path: &Path) -> Result<Vec<QAExample>> {
    let examples: Vec<QAExample> = io::read_jsonl(path)?;
    let mut ids = std::collections::HashSet::new();
    for ex in &examples {
        if ex.answers.is_empty() || ex.answers.iter().any(|a| a.trim().is_empty()) {
            return Err(Error::Validation(format!(
                "{}: question {} has an empty gold answer set or blank answer",
                path.display(),
                ex.id
            )));
        }
        if !ids.insert(ex.id.as_str()) {
            return Err(Error::Validation(format!(
                "{}: duplicate question id {}",
                path.display(),
                ex.id
            )));
        }
    }
    Ok(examples)
}

/// Stable fingerprint of a dataset's ids, relations and popularity values.
pub fn fingerprint(examples: &[QAExample]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for ex in examples {
        h.update(ex.id.as_bytes());
        h.update([0x1f]);
        h.update(ex.relation.as_str().as_bytes());
        h.update([0x1f]);
        h.update(
            ex.popularity
                .map(|p| p.to_string())
                .unwrap_or_default()
                .as_bytes(),
        );
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(id: &str, label: &str, aliases: &[&str]) -> ObjectEntity {
        ObjectEntity {
            id: id.into(),
            label: label.into(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub(crate) fn triple(subj: &str, rel: Relation, objects: Vec<ObjectEntity>) -> KnowledgeTriple {
        KnowledgeTriple {
            subj_id: format!("Q_{subj}"),
            subj_label: subj.into(),
            subj_aliases: vec![],
            relation: rel,
            objects,
        }
    }

    #[test]
    fn verbalize_director() {
        let t = triple(
            "Black",
            Relation::Director,
            vec![obj("Q1", "Sanjay Leela Bhansali", &[])],
        );
        let ex = verbalize(&t, &TemplateSet::builtin()).unwrap();
        assert_eq!(ex.question, "Who was the director of Black?");
        assert!(ex.answers.contains(&"Sanjay Leela Bhansali".to_string()));
    }

    #[test]
    fn verbalize_country() {
        let t = triple(
            "Pierre",
            Relation::Country,
            vec![obj("Q30", "United States", &["USA"])],
        );
        let ex = verbalize(&t, &TemplateSet::builtin()).unwrap();
        assert_eq!(ex.question, "In what country is Pierre?");
        assert_eq!(ex.answers, vec!["United States", "USA"]);
    }

    #[test]
    fn verbalize_unions_all_objects() {
        let t = triple(
            "The Faculty",
            Relation::Producer,
            vec![
                obj("Q1", "Robert Rodriguez", &["Robert Anthony Rodríguez"]),
                obj("Q2", "Elizabeth Avellan", &[]),
            ],
        );
        let ex = verbalize(&t, &TemplateSet::builtin()).unwrap();
        assert_eq!(
            ex.answers,
            vec![
                "Robert Rodriguez",
                "Robert Anthony Rodríguez",
                "Elizabeth Avellan"
            ]
        );
    }

    #[test]
    fn verbalize_missing_template_names_relation() {
        let t = triple(
            "X",
            Relation::Custom("instrument".into()),
            vec![obj("Q", "cello", &[])],
        );
        let err = verbalize(&t, &TemplateSet::builtin()).unwrap_err();
        assert!(
            matches!(err, Error::Config(ref m) if m.contains("instrument")),
            "{err}"
        );
    }

    #[test]
    fn verbalize_is_pure() {
        let t = triple("Black", Relation::Director, vec![obj("Q1", "A", &[])]);
        let set = TemplateSet::builtin();
        assert_eq!(verbalize(&t, &set).unwrap(), verbalize(&t, &set).unwrap());
    }

    #[test]
    fn invalid_triples_rejected() {
        let t = triple("  ", Relation::Genre, vec![obj("Q", "rock", &[])]);
        assert!(t.validate().is_err());
        let t = triple("X", Relation::Genre, vec![obj("Q", " ", &[])]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn duplicates_merge_into_first() {
        let a = triple("A", Relation::Genre, vec![obj("Q1", "rock", &[])]);
        let b = triple("B", Relation::Genre, vec![obj("Q2", "pop", &[])]);
        let a2 = triple("A", Relation::Genre, vec![obj("Q3", "jazz", &[])]);
        let merged = merge_duplicates(vec![a, b, a2]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].subj_label, "A");
        assert_eq!(merged[0].answer_strings(), vec!["rock", "jazz"]);
    }

    #[test]
    fn triple_wire_format() {
        let line = r#"{"subj_id":"Q1","subj":"Black","subj_aliases":["Black (film)"],"relation":"director","objects":[{"id":"Q2","label":"Sanjay Leela Bhansali","aliases":["SLB"]}]}"#;
        let t: KnowledgeTriple = serde_json::from_str(line).unwrap();
        assert_eq!(t.relation, Relation::Director);
        assert_eq!(t.object_ids().collect::<Vec<_>>(), vec!["Q2"]);
        assert_eq!(serde_json::to_string(&t).unwrap(), line);
    }

    #[test]
    fn dataset_write_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        assert_eq!(write_dataset(&[], &path).unwrap(), 0);
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);

        let set = TemplateSet::builtin();
        let mut examples: Vec<QAExample> = ["Black", "Say \"Hi\"", "Ünïcode\nname"]
            .iter()
            .map(|s| {
                verbalize(
                    &triple(s, Relation::Director, vec![obj("Q", "Z", &[])]),
                    &set,
                )
                .unwrap()
            })
            .collect();
        examples[0].popularity = Some(42);
        assert_eq!(write_dataset(&examples, &path).unwrap(), 3);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_dataset(&path).unwrap(), examples);
        assert!(text.lines().next().unwrap().contains("\"popularity\":42"));
        assert!(text.lines().nth(1).unwrap().contains("\"popularity\":null"));
    }

    #[test]
    fn write_dataset_reports_path_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_dataset(&[], &blocker.join("sub").join("d.jsonl")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
