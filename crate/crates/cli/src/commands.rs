use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde_json::json;

use tailqa::adaptive::{cost_report, route, tune_thresholds, CostModel, Decision, ThresholdPolicy};
use tailqa::config::{load_config, RunConfig};
use tailqa::dataset::{
    read_dataset, read_triples, sample_triples, verbalize, write_dataset, AliasFrequency,
    TemplateSet,
};
use tailqa::demo::{run_demo, DemoConfig};
use tailqa::eval::{read_records, write_records, Mode};
use tailqa::lm::{EndpointConfig, HttpCompleter, OracleParams};
use tailqa::pipeline::{run_predictions, Backend, RunOptions};
use tailqa::popularity::{annotate_dataset, PageviewsClient, YearMonth};
use tailqa::report::build_report;
use tailqa::retriever::{read_corpus, Retriever};
use tailqa::{io, Bm25Index, Bm25Params};

use crate::{Cli, Command};

const DEFAULT_CACHE_DIR: &str = ".tailqa-cache";

pub fn dispatch(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::BuildDataset(a) => build_dataset(a, &cfg),
        Command::FetchPopularity(a) => fetch_popularity(a, &cfg),
        Command::Index(a) => index(a, &cfg),
        Command::Run(a) => run(a, &cfg),
        Command::Report(a) => report(a, &cfg),
        Command::Tune(a) => tune(a, &cfg),
        Command::Route(a) => route_cmd(a, &cfg),
        Command::Savings(a) => savings(a, &cfg),
        Command::Demo(a) => demo(a, &cfg),
    }
}

/// Flag value, else config value, else an error naming both.
fn pick(
    flag: Option<PathBuf>,
    from_cfg: &Option<PathBuf>,
    flag_name: &str,
    key: &str,
) -> Result<PathBuf> {
    flag.or_else(|| from_cfg.clone())
        .ok_or_else(|| anyhow!("missing --{flag_name} (or {key} in the config file)"))
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("{}: file not found", path.display());
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            ensure_parent(p)?;
            io::atomic_write(p, text.as_bytes())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe (e.g. `| head`) is not a failure.
            match stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
            {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Triples JSONL.
    #[arg(long)]
    triples: Option<PathBuf>,
    /// JSON object mapping relation name to a question pattern with `[subj]`.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Plain-text corpus in which subject names are counted.
    #[arg(long, conflicts_with = "frequencies")]
    corpus_text: Option<PathBuf>,
    /// JSON object mapping subject id to a precomputed frequency.
    #[arg(long)]
    frequencies: Option<PathBuf>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_dataset(a: BuildDatasetArgs, cfg: &RunConfig) -> Result<()> {
    let triples_path = pick(a.triples, &cfg.paths.triples, "triples", "paths.triples")?;
    let out = pick(a.out, &cfg.paths.dataset, "out", "paths.dataset")?;
    let templates = match a.templates.or_else(|| cfg.paths.templates.clone()) {
        Some(p) => TemplateSet::load(&p)?,
        None => TemplateSet::builtin(),
    };
    let triples = read_triples(&triples_path)?;
    let cap = a.cap.unwrap_or(cfg.dataset.per_relation_cap);
    let seed = a.seed.unwrap_or(cfg.dataset.seed);

    let sampled = match (a.corpus_text, a.frequencies) {
        (Some(corpus), _) => {
            let file = File::open(&corpus).map_err(|e| tailqa::Error::io(&corpus, e))?;
            let freq = AliasFrequency::build(&triples, BufReader::new(file))?;
            sample_triples(triples, |t| freq.frequency(t), cap, seed)?
        }
        (None, Some(path)) => {
            let freq: BTreeMap<String, f64> = io::read_json(&path)?;
            if let Some(t) = triples.iter().find(|t| !freq.contains_key(&t.subj_id)) {
                bail!("{}: no frequency for subject {}", path.display(), t.subj_id);
            }
            sample_triples(triples, |t| freq[&t.subj_id], cap, seed)?
        }
        (None, None) => bail!("need --corpus-text or --frequencies to estimate subject frequency"),
    };
    let dataset = sampled
        .iter()
        .map(|t| verbalize(t, &templates))
        .collect::<tailqa::Result<Vec<_>>>()?;
    ensure_parent(&out)?;
    let n = write_dataset(&dataset, &out)?;
    log::info!("wrote {n} questions to {}", out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct FetchPopularityArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Annotated dataset JSONL.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// YYYY-MM.
    #[arg(long)]
    month: Option<YearMonth>,
    #[arg(long)]
    base_url: Option<String>,
}

fn fetch_popularity(a: FetchPopularityArgs, cfg: &RunConfig) -> Result<()> {
    let dataset_path = pick(a.dataset, &cfg.paths.dataset, "dataset", "paths.dataset")?;
    require_file(&dataset_path)?;
    let dataset = read_dataset(&dataset_path)?;
    let mut pv = cfg.popularity.clone();
    if let Some(m) = a.month {
        pv.month = m;
    }
    if let Some(u) = a.base_url {
        pv.base_url = u;
    }
    let month = pv.month;
    let cache = a
        .cache_dir
        .or_else(|| cfg.paths.cache_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
        .join("pageviews");
    let client = PageviewsClient::new(pv, cache);
    let annotated = annotate_dataset(&dataset, &client, month)?;
    ensure_parent(&a.out)?;
    write_dataset(&annotated, &a.out)?;
    log::info!(
        "annotated {} questions for {month} ({} HTTP requests)",
        annotated.len(),
        client.requests_made()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Passages JSONL with doc_id, title, text.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

fn index(a: IndexArgs, cfg: &RunConfig) -> Result<()> {
    let corpus = pick(a.corpus, &cfg.paths.corpus, "corpus", "paths.corpus")?;
    let out = pick(a.out, &cfg.paths.index, "out", "paths.index")?;
    require_file(&corpus)?;
    let params = Bm25Params {
        k1: a.k1.unwrap_or(cfg.retriever.k1),
        b: a.b.unwrap_or(cfg.retriever.b),
    };
    let index = Bm25Index::build(read_corpus(&corpus)?, params)?;
    ensure_parent(&out)?;
    index.save(&out)?;
    log::info!(
        "indexed {} passages ({} terms) into {}",
        index.doc_count(),
        index.vocabulary_size(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Required for retrieval mode.
    #[arg(long)]
    index: Option<PathBuf>,
    /// TOML file with the endpoint settings (base_url, model, ...).
    #[arg(long, conflicts_with = "oracle")]
    endpoint: Option<PathBuf>,
    /// Use the synthetic oracle LM instead of an endpoint.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Prediction records JSONL.
    #[arg(long)]
    out: PathBuf,
}

fn run(a: RunArgs, cfg: &RunConfig) -> Result<()> {
    let dataset_path = pick(a.dataset, &cfg.paths.dataset, "dataset", "paths.dataset")?;
    require_file(&dataset_path)?;
    let dataset = read_dataset(&dataset_path)?;
    let mode = a
        .mode
        .or(cfg.run.mode)
        .ok_or_else(|| anyhow!("missing --mode (or run.mode in the config file)"))?;

    let endpoint: Option<EndpointConfig> = match a.endpoint {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| tailqa::Error::io(&p, e))?;
            let e: EndpointConfig = tailqa_toml(&text)
                .with_context(|| format!("{}: invalid endpoint config", p.display()))?;
            e.validate()?;
            Some(e)
        }
        None if a.oracle => None,
        None => cfg.endpoint.clone(),
    };
    let shots = a.shots.unwrap_or_else(|| match &endpoint {
        Some(e) if cfg.run.shots.is_none() => e.default_shots(),
        _ => cfg.effective_shots(),
    });
    let seed = a.seed.unwrap_or(cfg.run.seed);

    let index = match mode {
        Mode::Retrieval => {
            let p = pick(a.index, &cfg.paths.index, "index", "paths.index")?;
            require_file(&p)?;
            Some(Bm25Index::load(&p)?)
        }
        _ => None,
    };
    let retriever = index.as_ref().map(|i| i as &dyn Retriever);

    let mut opts = RunOptions::new(mode, shots, seed);
    opts.match_mode = cfg.run.match_mode;
    let records = match endpoint {
        Some(e) => {
            opts.genread_instruction = e.genread_instruction.clone();
            let cache = a
                .cache_dir
                .or_else(|| cfg.paths.cache_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
                .join("completions");
            let completer = HttpCompleter::new(e, cache)?;
            let records =
                run_predictions(&dataset, &opts, &Backend::Completer(&completer), retriever)?;
            log::info!("{} network calls", completer.network_calls());
            records
        }
        None => {
            let params = cfg
                .oracle
                .unwrap_or_else(|| OracleParams::new(2.0, 3.5, 0.9));
            run_predictions(&dataset, &opts, &Backend::Oracle(params), retriever)?
        }
    };
    ensure_parent(&a.out)?;
    write_records(&a.out, &records)?;
    let correct = records.iter().filter(|r| r.correct).count();
    log::info!(
        "{mode}: {correct}/{} correct ({} shots), wrote {}",
        records.len(),
        shots,
        a.out.display()
    );
    Ok(())
}

fn tailqa_toml(text: &str) -> Result<EndpointConfig> {
    // A full manifest with an [endpoint] table is accepted as well as a bare one.
    if let Ok(cfg) = RunConfig::from_toml(text) {
        if let Some(e) = cfg.endpoint {
            return Ok(e);
        }
    }
    let cfg = RunConfig::from_toml(&format!("[endpoint]\n{text}"))?;
    cfg.endpoint.ok_or_else(|| anyhow!("no endpoint settings"))
}

fn cost_model(prompt: Option<f64>, completion: Option<f64>, cfg: &RunConfig) -> Option<CostModel> {
    let base = cfg.cost_model;
    match (prompt, completion, base) {
        (None, None, b) => b,
        (p, c, b) => {
            let b = b.unwrap_or_default();
            Some(CostModel {
                price_per_1k_prompt_tokens: p.unwrap_or(b.price_per_1k_prompt_tokens),
                price_per_1k_completion_tokens: c.unwrap_or(b.price_per_1k_completion_tokens),
                retrieval_latency_ms: b.retrieval_latency_ms,
            })
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Prediction records JSONL; repeat for several runs.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Directory for report.json and CSV tables; prints JSON when absent.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long)]
    min_bin_n: Option<usize>,
}

fn report(a: ReportArgs, cfg: &RunConfig) -> Result<()> {
    let dataset_path = pick(a.dataset, &cfg.paths.dataset, "dataset", "paths.dataset")?;
    require_file(&dataset_path)?;
    for p in &a.runs {
        require_file(p)?;
    }
    let dataset = read_dataset(&dataset_path)?;
    let runs = a
        .runs
        .iter()
        .map(|p| read_records(p))
        .collect::<tailqa::Result<Vec<_>>>()?;
    let policy = a.policy.as_deref().map(ThresholdPolicy::load).transpose()?;
    let mut opts = cfg.report;
    if let Some(w) = a.bin_width {
        opts.bin_width = w;
    }
    if let Some(n) = a.min_bin_n {
        opts.min_bin_n = n;
    }
    let report = build_report(
        &dataset,
        &runs,
        policy.as_ref(),
        cfg.cost_model.as_ref(),
        &opts,
    )?;
    if let Some(q) = &report.quadrants {
        log::info!("quadrants (recall@1, share):\n{q}");
    }
    match a.out_dir.or_else(|| cfg.paths.output_dir.clone()) {
        Some(dir) => {
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            report.write_dir(&dir)?;
            log::info!("wrote report to {}", dir.display());
        }
        None => emit(None, &format!("{}\n", report.to_json()?))?,
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    vanilla: PathBuf,
    /// Retrieval or GenRead records.
    #[arg(long)]
    retrieval: PathBuf,
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Policy JSON.
    #[arg(long)]
    out: PathBuf,
}

fn tune(a: TuneArgs, cfg: &RunConfig) -> Result<()> {
    let dataset_path = pick(a.dataset, &cfg.paths.dataset, "dataset", "paths.dataset")?;
    for p in [&dataset_path, &a.vanilla, &a.retrieval] {
        require_file(p)?;
    }
    let dataset = read_dataset(&dataset_path)?;
    let vanilla = read_records(&a.vanilla)?;
    let retrieval = read_records(&a.retrieval)?;
    let outcome = tune_thresholds(
        &vanilla,
        &retrieval,
        &dataset,
        a.split.unwrap_or(cfg.tune.split_fraction),
        a.repeats.unwrap_or(cfg.tune.repeats),
        a.seed.unwrap_or(cfg.tune.seed),
    )?;
    ensure_parent(&a.out)?;
    outcome.policy.save(&a.out)?;
    log::info!(
        "mean held-out adaptive accuracy {:.4} over {} repeats; policy written to {}",
        outcome.mean_test_accuracy,
        outcome.per_repeat.len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    policy: PathBuf,
    /// JSONL of decisions; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn route_cmd(a: RouteArgs, cfg: &RunConfig) -> Result<()> {
    let dataset_path = pick(a.dataset, &cfg.paths.dataset, "dataset", "paths.dataset")?;
    require_file(&dataset_path)?;
    require_file(&a.policy)?;
    let dataset = read_dataset(&dataset_path)?;
    let policy = ThresholdPolicy::load(&a.policy)?;
    let mut text = String::new();
    let mut retrieve = 0usize;
    for ex in &dataset {
        let decision = route(ex, &policy)?;
        retrieve += (decision == Decision::Retrieve) as usize;
        let line = json!({
            "question_id": ex.id,
            "relation": ex.relation,
            "log10_popularity": ex.log10_popularity(),
            "decision": decision,
        });
        text.push_str(&line.to_string());
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)?;
    log::info!("{retrieve}/{} questions routed to retrieval", dataset.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct SavingsArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    vanilla: PathBuf,
    #[arg(long)]
    retrieval: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    /// Price per 1k prompt tokens.
    #[arg(long)]
    prompt_price: Option<f64>,
    /// Price per 1k completion tokens.
    #[arg(long)]
    completion_price: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn savings(a: SavingsArgs, cfg: &RunConfig) -> Result<()> {
    let dataset_path = pick(a.dataset, &cfg.paths.dataset, "dataset", "paths.dataset")?;
    for p in [&dataset_path, &a.vanilla, &a.retrieval, &a.policy] {
        require_file(p)?;
    }
    let model = cost_model(a.prompt_price, a.completion_price, cfg).ok_or_else(|| {
        anyhow!("missing prices: pass --prompt-price/--completion-price or set [cost_model]")
    })?;
    let dataset = read_dataset(&dataset_path)?;
    let vanilla = read_records(&a.vanilla)?;
    let retrieval = read_records(&a.retrieval)?;
    let policy = ThresholdPolicy::load(&a.policy)?;
    let rep = cost_report(&vanilla, &retrieval, &dataset, &policy, &model)?;
    let mut text = serde_json::to_string_pretty(&rep)?;
    text.push('\n');
    emit(a.out.as_deref(), &text)?;
    log::info!(
        "retrieving for {:.1}% of questions saves {:.1}% of always-retrieve cost",
        100.0 * rep.retrieval_fraction,
        100.0 * rep.savings_fraction
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of questions; a multiple of 16.
    #[arg(long)]
    questions: Option<usize>,
    /// Also write every artifact here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn demo(a: DemoArgs, cfg: &RunConfig) -> Result<()> {
    let mut dc = DemoConfig::new(a.seed);
    if let Some(n) = a.questions {
        dc.n_questions = n;
        dc.candidates_per_relation = dc.candidates_per_relation.max(n / 16 * 5);
    }
    if let Some(o) = cfg.oracle {
        dc.oracle = o;
    }
    if let Some(c) = cfg.cost_model {
        dc.cost_model = c;
    }
    dc.report = cfg.report;
    let outcome = run_demo(&dc)?;
    if let Some(dir) = &a.out_dir {
        outcome.write_to(dir)?;
        log::info!("demo artifacts written to {}", dir.display());
    }
    emit(None, &format!("{}\n", outcome.report.to_json()?))
}
