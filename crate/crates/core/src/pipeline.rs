//! Runs one prompting mode over a dataset and produces prediction records.

use crate::dataset::QAExample;
use crate::error::{Error, Result};
use crate::eval::{is_correct_with, MatchMode, Mode, PredictionRecord};
use crate::http::parallel_map;
use crate::lm::{
    approx_token_count, genread_answer, oracle_lm, render_prompt, Completer, FewShotPool,
    OracleParams, PromptMode, PromptSpec, DEFAULT_GENREAD_INSTRUCTION,
};
use crate::retriever::{recall_at_k, Retriever};

/// Where answers come from.
pub enum Backend<'a> {
    Oracle(OracleParams),
    Completer(&'a dyn Completer),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub shots: usize,
    pub seed: u64,
    pub match_mode: MatchMode,
    pub genread_instruction: String,
}

impl RunOptions {
    pub fn new(mode: Mode, shots: usize, seed: u64) -> Self {
        Self {
            mode,
            shots,
            seed,
            match_mode: MatchMode::default(),
            genread_instruction: DEFAULT_GENREAD_INSTRUCTION.to_string(),
        }
    }
}

/// Answers every question of `dataset` in `opts.mode`.
///
/// Demonstrations are drawn from the rest of the dataset. In retrieval mode
/// the top-1 passage is placed before the question; a question with no
/// retrieval hit is asked without context. Records come back in dataset
/// order whatever the completion order.
pub fn run_predictions(
    dataset: &[QAExample],
    opts: &RunOptions,
    backend: &Backend<'_>,
    retriever: Option<&dyn Retriever>,
) -> Result<Vec<PredictionRecord>> {
    if opts.mode == Mode::Retrieval && retriever.is_none() {
        return Err(Error::Config("retrieval mode requires an index".into()));
    }
    if let Backend::Oracle(p) = backend {
        p.validate()?;
    }
    let pool = FewShotPool::new(dataset);
    let parallelism = match backend {
        Backend::Oracle(_) => 1,
        Backend::Completer(c) => c.max_parallelism(),
    };
    parallel_map(dataset, parallelism, |ex| {
        answer_one(ex, &pool, opts, backend, retriever)
    })
    .into_iter()
    .collect()
}

fn answer_one(
    ex: &QAExample,
    pool: &FewShotPool<'_>,
    opts: &RunOptions,
    backend: &Backend<'_>,
    retriever: Option<&dyn Retriever>,
) -> Result<PredictionRecord> {
    let shots = pool.sample(ex, opts.shots, opts.seed)?;
    let mut record = PredictionRecord {
        question_id: ex.id.clone(),
        mode: opts.mode,
        prompt: String::new(),
        prediction: String::new(),
        retrieved_doc_id: None,
        retrieval_recall1: None,
        correct: false,
        prompt_tokens: None,
        completion_tokens: None,
        latency_ms: None,
        generated_context: None,
        empty_generated_context: false,
    };

    let mut context = None;
    if opts.mode == Mode::Retrieval {
        let retriever = retriever.expect("checked by caller");
        let hits = retriever.retrieve(&ex.question, 1);
        record.retrieval_recall1 = Some(recall_at_k(&hits, retriever, &ex.answers, 1));
        if let Some(top) = hits.first() {
            record.retrieved_doc_id = Some(top.doc_id.clone());
            context = retriever.passage(&top.doc_id).map(|p| p.as_context());
        }
    }
    let spec = match &context {
        Some(_) => PromptSpec::new(
            PromptMode::Retrieval,
            ex.question.clone(),
            context,
            shots.clone(),
        )?,
        None => PromptSpec::vanilla(ex.question.clone(), shots.clone()),
    };
    record.prompt = render_prompt(&spec);

    match backend {
        Backend::Oracle(params) => {
            let hit = record.retrieval_recall1.unwrap_or(false);
            let prediction = oracle_lm(ex, opts.mode, hit, params, opts.seed)?;
            let pt = approx_token_count(&record.prompt);
            let ct = approx_token_count(&prediction);
            record.prompt_tokens = Some(pt);
            record.completion_tokens = Some(ct);
            record.latency_ms = Some(params.latency_ms(pt, ct));
            record.prediction = prediction;
        }
        Backend::Completer(c) if opts.mode == Mode::Genread => {
            let out = genread_answer(*c, &ex.question, &shots, &opts.genread_instruction)?;
            record.prompt = out.answer_prompt;
            record.generated_context = Some(out.generated_context);
            record.empty_generated_context = out.empty_context;
            record.prompt_tokens = Some(out.completion.prompt_tokens);
            record.completion_tokens = Some(out.completion.completion_tokens);
            record.latency_ms = Some(out.completion.latency_ms);
            record.prediction = out.completion.text;
        }
        Backend::Completer(c) => {
            let out = c.complete(&record.prompt)?;
            record.prompt_tokens = Some(out.prompt_tokens);
            record.completion_tokens = Some(out.completion_tokens);
            record.latency_ms = Some(out.latency_ms);
            record.prediction = out.text;
        }
    }
    record.correct = is_correct_with(&record.prediction, &ex.answers, opts.match_mode);
    Ok(record)
}
