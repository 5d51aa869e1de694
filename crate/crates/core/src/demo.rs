//! Synthetic end-to-end world. Entities are invented with known popularity,
//! passages state the answer more often for obscure subjects, and the oracle
//! LM stands in for a real model.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::adaptive::{tune_thresholds, CostModel, TuneOutcome};
use crate::dataset::{
    sample_triples, verbalize, write_dataset, KnowledgeTriple, ObjectEntity, QAExample, Relation,
    TemplateSet,
};
use crate::error::{Error, Result};
use crate::eval::{write_records, Mode, PredictionRecord};
use crate::io;
use crate::lm::OracleParams;
use crate::pipeline::{run_predictions, Backend, RunOptions};
use crate::report::{build_report, EvalReport, ReportOptions};
use crate::retriever::{Bm25Index, Bm25Params, Passage};
use crate::rng::rng_for;

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub seed: u64,
    /// Must be a multiple of the 16 relations.
    pub n_questions: usize,
    /// Candidate triples generated per relation before sampling.
    pub candidates_per_relation: usize,
    pub max_log10_pop: f64,
    /// Questions below this log10 popularity count as low-popularity.
    pub low_popularity_below: f64,
    /// Probability that a low-popularity subject's passage holds the answer.
    pub recall_low: f64,
    pub recall_high: f64,
    pub filler_passages: usize,
    pub oracle: OracleParams,
    pub shots: usize,
    pub split_fraction: f64,
    pub repeats: usize,
    pub cost_model: CostModel,
    pub report: ReportOptions,
}

impl DemoConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            n_questions: 2000,
            candidates_per_relation: 600,
            max_log10_pop: 7.0,
            low_popularity_below: 3.5,
            recall_low: 0.85,
            recall_high: 0.35,
            filler_passages: 200,
            oracle: OracleParams::new(2.0, 3.5, 0.9),
            shots: 15,
            split_fraction: 0.75,
            repeats: 100,
            cost_model: CostModel {
                price_per_1k_prompt_tokens: 0.02,
                price_per_1k_completion_tokens: 0.02,
                retrieval_latency_ms: 0,
            },
            report: ReportOptions::default(),
        }
    }
}

pub struct DemoOutcome {
    pub triples: Vec<KnowledgeTriple>,
    pub dataset: Vec<QAExample>,
    pub index: Bm25Index<f64>,
    pub vanilla: Vec<PredictionRecord>,
    pub retrieval: Vec<PredictionRecord>,
    pub tune: TuneOutcome,
    pub report: EvalReport,
}

const SYLLABLES: [&str; 48] = [
    "ka", "ro", "mi", "zen", "tal", "vor", "lu", "dra", "bel", "sio", "qua", "fen", "gor", "ish",
    "pla", "nue", "tor", "vek", "hal", "mon", "riz", "sel", "dun", "aph", "kel", "tru", "wix",
    "yor", "zam", "bri", "cal", "dor", "eph", "fal", "gri", "hun", "jas", "kor", "lim", "nar",
    "osk", "pev", "rul", "sam", "tev", "ulm", "vin", "wen",
];

struct NameGen {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl NameGen {
    fn word(&mut self) -> String {
        loop {
            let n = self.rng.gen_range(3..=4);
            let w: String = (0..n)
                .map(|_| SYLLABLES[self.rng.gen_range(0..SYLLABLES.len())])
                .collect();
            if self.used.insert(w.clone()) {
                let mut c = w.chars();
                let first = c.next().unwrap().to_ascii_uppercase();
                return std::iter::once(first).chain(c).collect();
            }
        }
    }

    fn name(&mut self) -> String {
        format!("{} {}", self.word(), self.word())
    }
}

/// Candidate triples in relation-interleaved order plus each subject's views.
fn synthetic_triples(cfg: &DemoConfig) -> (Vec<KnowledgeTriple>, HashMap<String, u64>) {
    let mut names = NameGen {
        rng: rng_for(cfg.seed, &["demo", "names"]),
        used: HashSet::new(),
    };
    let mut pop_rng = rng_for(cfg.seed, &["demo", "popularity"]);
    let mut triples = Vec::new();
    let mut views = HashMap::new();
    for i in 0..cfg.candidates_per_relation {
        for (r, rel) in Relation::BUILTIN.iter().enumerate() {
            let subj_id = format!("S{i:04}R{r:02}");
            let x: f64 = pop_rng.gen_range(0.0..cfg.max_log10_pop);
            views.insert(subj_id.clone(), 10f64.powf(x).round().max(1.0) as u64);
            triples.push(KnowledgeTriple {
                subj_label: names.name(),
                subj_aliases: vec![],
                relation: rel.clone(),
                objects: vec![ObjectEntity {
                    id: format!("O{i:04}R{r:02}"),
                    label: names.name(),
                    aliases: vec![],
                }],
                subj_id,
            });
        }
    }
    (triples, views)
}

/// One passage per question about its subject; it states the answer with a
/// popularity-dependent probability and otherwise names a decoy.
fn synthetic_corpus(cfg: &DemoConfig, dataset: &[QAExample]) -> Vec<Passage> {
    let mut names = NameGen {
        rng: rng_for(cfg.seed, &["demo", "decoys"]),
        used: dataset
            .iter()
            .flat_map(|e| e.subj_label.split(' ').chain(e.answers[0].split(' ')))
            .map(str::to_lowercase)
            .collect(),
    };
    let mut out = Vec::with_capacity(dataset.len() + cfg.filler_passages);
    for (i, ex) in dataset.iter().enumerate() {
        let low = ex.log10_popularity().unwrap_or(0.0) < cfg.low_popularity_below;
        let p = if low { cfg.recall_low } else { cfg.recall_high };
        let u: f64 = rng_for(cfg.seed, &["demo", "passage", &ex.id]).gen();
        let rel = ex.relation.as_str();
        let subj = &ex.subj_label;
        let text = if u < p {
            format!(
                "{subj} is often discussed in records of {rel}. The {rel} of {subj} is {}.",
                ex.answers[0]
            )
        } else {
            format!(
                "{subj} is often discussed in records of {rel}. Sources about {subj} mention {}.",
                names.name()
            )
        };
        out.push(Passage {
            doc_id: format!("doc{i:05}"),
            title: subj.clone(),
            text,
        });
    }
    for j in 0..cfg.filler_passages {
        out.push(Passage {
            doc_id: format!("filler{j:04}"),
            title: names.name(),
            text: format!(
                "{} met {} near {}.",
                names.name(),
                names.name(),
                names.name()
            ),
        });
    }
    out
}

pub fn run_demo(cfg: &DemoConfig) -> Result<DemoOutcome> {
    let n_rel = Relation::BUILTIN.len();
    if cfg.n_questions == 0 || !cfg.n_questions.is_multiple_of(n_rel) {
        return Err(Error::Config(format!(
            "demo question count must be a positive multiple of {n_rel}, got {}",
            cfg.n_questions
        )));
    }
    let cap = cfg.n_questions / n_rel;
    let (candidates, views) = synthetic_triples(cfg);
    // Page views stand in for corpus frequency.
    let triples = sample_triples(
        candidates,
        |t| views[&t.subj_id] as f64 / 1000.0,
        cap,
        cfg.seed,
    )?;
    if triples.len() != cfg.n_questions {
        return Err(Error::Insufficient(format!(
            "sampled {} questions, wanted {}; raise candidates_per_relation",
            triples.len(),
            cfg.n_questions
        )));
    }
    let templates = TemplateSet::builtin();
    let dataset = triples
        .iter()
        .map(|t| {
            let mut ex = verbalize(t, &templates)?;
            ex.popularity = Some(views[&t.subj_id]);
            Ok(ex)
        })
        .collect::<Result<Vec<_>>>()?;

    let corpus = synthetic_corpus(cfg, &dataset);
    let index = Bm25Index::build(corpus, Bm25Params::default())?;

    let backend = Backend::Oracle(cfg.oracle);
    let vanilla = run_predictions(
        &dataset,
        &RunOptions::new(Mode::Vanilla, cfg.shots, cfg.seed),
        &backend,
        None,
    )?;
    let retrieval = run_predictions(
        &dataset,
        &RunOptions::new(Mode::Retrieval, cfg.shots, cfg.seed),
        &backend,
        Some(&index),
    )?;
    let tune = tune_thresholds(
        &vanilla,
        &retrieval,
        &dataset,
        cfg.split_fraction,
        cfg.repeats,
        cfg.seed,
    )?;
    let report = build_report(
        &dataset,
        &[vanilla.clone(), retrieval.clone()],
        Some(&tune.policy),
        Some(&cfg.cost_model),
        &cfg.report,
    )?;
    Ok(DemoOutcome {
        triples,
        dataset,
        index,
        vanilla,
        retrieval,
        tune,
        report,
    })
}

impl DemoOutcome {
    /// Writes every intermediate artifact and the report into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        io::write_jsonl(&dir.join("triples.jsonl"), &self.triples)?;
        write_dataset(&self.dataset, &dir.join("dataset.jsonl"))?;
        io::write_jsonl(&dir.join("corpus.jsonl"), self.index.passages())?;
        self.index.save(&dir.join("index.bin"))?;
        write_records(&dir.join("vanilla.jsonl"), &self.vanilla)?;
        write_records(&dir.join("retrieval.jsonl"), &self.retrieval)?;
        self.tune.policy.save(&dir.join("policy.json"))?;
        self.report.write_dir(dir)
    }
}
