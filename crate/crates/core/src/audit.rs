//! Prediction probes: renders the prediction prompt (vanilla plus the
//! debiasing variants), runs resumable sweeps over a corpus, and parses
//! model responses back into labels.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Article, BiasLabel, Corpus, CorpusError};
use crate::gateway::{ChatRequest, Gateway, GatewayError};
use crate::templates::{fill, FewShotExample, PromptTemplates, TemplateError};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("gateway: {0}")]
    Gateway(#[from] GatewayError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("template: {0}")]
    Template(#[from] TemplateError),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("few-shot pool too small: requested {requested}, pool holds {available}")]
    FewShotPool { requested: usize, available: usize },
    #[error("run log {path}: {message}")]
    RunLog { path: String, message: String },
    #[error("io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Prompt construction strategy for the prediction probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyKind {
    /// The plain prediction prompt.
    Vanilla,
    /// Prepends the left/right/center definitions (bias label explanation).
    BiasLabelExplanation,
    /// Prepends `k` labeled headlines sampled from the few-shot pool.
    FewShot(usize),
    /// Appends the debiasing statement as the final line.
    DebiasStatement,
    /// Applies the listed parts in order (prefix parts before the prompt,
    /// the debiasing statement after it).
    Composite(Vec<StrategyKind>),
}

impl StrategyKind {
    fn descriptor(&self) -> String {
        match self {
            StrategyKind::Vanilla => "vanilla".into(),
            StrategyKind::BiasLabelExplanation => "ble".into(),
            StrategyKind::FewShot(k) => format!("fewshot{k}"),
            StrategyKind::DebiasStatement => "ds".into(),
            StrategyKind::Composite(parts) => parts
                .iter()
                .map(|p| p.descriptor())
                .collect::<Vec<_>>()
                .join("+"),
        }
    }

    fn discriminant(&self) -> u8 {
        match self {
            StrategyKind::Vanilla => 0,
            StrategyKind::BiasLabelExplanation => 1,
            StrategyKind::FewShot(_) => 2,
            StrategyKind::DebiasStatement => 3,
            StrategyKind::Composite(_) => 4,
        }
    }
}

/// Parses strategy flags like `vanilla`, `ble`, `ds`, `fewshot:3`, and
/// composites joined with `+` such as `ble+ds`.
pub fn parse_strategy_kind(s: &str) -> Result<StrategyKind, AuditError> {
    let parts: Vec<&str> = s.split('+').map(str::trim).collect();
    let parse_one = |p: &str| -> Result<StrategyKind, AuditError> {
        match p {
            "vanilla" => Ok(StrategyKind::Vanilla),
            "ble" => Ok(StrategyKind::BiasLabelExplanation),
            "ds" => Ok(StrategyKind::DebiasStatement),
            _ => {
                let k = p
                    .strip_prefix("fewshot:")
                    .or_else(|| p.strip_prefix("fewshot"))
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| {
                        AuditError::InvalidStrategy(format!(
                            "{p:?} (expected vanilla, ble, ds, or fewshot:K)"
                        ))
                    })?;
                Ok(StrategyKind::FewShot(k))
            }
        }
    };
    if parts.len() == 1 {
        parse_one(parts[0])
    } else {
        Ok(StrategyKind::Composite(
            parts.iter().map(|p| parse_one(p)).collect::<Result<_, _>>()?,
        ))
    }
}

/// A strategy plus the few-shot pool and seed it draws from. An empty pool
/// means "use the pool shipped with the templates".
#[derive(Debug, Clone)]
pub struct PromptStrategy {
    pub kind: StrategyKind,
    pub fewshot_pool: Vec<FewShotExample>,
    pub seed: u64,
    /// Prepend the article title to the body in the TEXT ARTICLE slot.
    pub include_title: bool,
}

impl PromptStrategy {
    pub fn new(kind: StrategyKind) -> PromptStrategy {
        PromptStrategy { kind, fewshot_pool: Vec::new(), seed: 0, include_title: false }
    }

    pub fn vanilla() -> PromptStrategy {
        PromptStrategy::new(StrategyKind::Vanilla)
    }

    pub fn with_seed(mut self, seed: u64) -> PromptStrategy {
        self.seed = seed;
        self
    }

    pub fn with_pool(mut self, pool: Vec<FewShotExample>) -> PromptStrategy {
        self.fewshot_pool = pool;
        self
    }

    pub fn descriptor(&self) -> String {
        self.kind.descriptor()
    }

    pub fn validate(&self) -> Result<(), AuditError> {
        if let StrategyKind::Composite(parts) = &self.kind {
            if parts.is_empty() {
                return Err(AuditError::InvalidStrategy("empty composite".into()));
            }
            let mut seen = BTreeSet::new();
            for part in parts {
                if matches!(part, StrategyKind::Composite(_)) {
                    return Err(AuditError::InvalidStrategy("nested composite".into()));
                }
                if !seen.insert(part.discriminant()) {
                    return Err(AuditError::InvalidStrategy(format!(
                        "duplicate part {:?} in composite",
                        part.descriptor()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn article_slot(article: &Article, include_title: bool) -> String {
    if include_title && !article.title.is_empty() {
        format!("{}\n{}", article.title, article.body)
    } else {
        article.body.clone()
    }
}

/// Draws `k` examples from the pool, sampling whole same-event triples
/// (consecutive groups of three in pool order) with the given seed, then
/// truncating to `k`.
fn fewshot_block(
    k: usize,
    pool: &[FewShotExample],
    seed: u64,
) -> Result<String, AuditError> {
    if k == 0 || k > pool.len() {
        return Err(AuditError::FewShotPool { requested: k, available: pool.len() });
    }
    let group_count = pool.len().div_ceil(3);
    let mut order: Vec<usize> = (0..group_count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut chosen: Vec<&FewShotExample> = Vec::with_capacity(k);
    'outer: for group in order {
        let start = group * 3;
        let end = (start + 3).min(pool.len());
        for example in &pool[start..end] {
            chosen.push(example);
            if chosen.len() == k {
                break 'outer;
            }
        }
    }
    Ok(chosen
        .iter()
        .map(|e| format!("Text: {}\nLabel: {}", e.headline, e.label.display_name()))
        .collect::<Vec<_>>()
        .join("\n\n"))
}

/// Renders the full prediction prompt for one article. Pure: identical
/// inputs produce byte-identical prompts.
pub fn render_prompt(
    strategy: &PromptStrategy,
    article: &Article,
    templates: &PromptTemplates,
) -> Result<String, AuditError> {
    strategy.validate()?;
    let body = article_slot(article, strategy.include_title);
    let vanilla = fill(&templates.prediction, &[("article", &body)]);
    let pool: &[FewShotExample] = if strategy.fewshot_pool.is_empty() {
        &templates.fewshot_pool
    } else {
        &strategy.fewshot_pool
    };
    let parts: Vec<&StrategyKind> = match &strategy.kind {
        StrategyKind::Composite(parts) => parts.iter().collect(),
        other => vec![other],
    };
    let mut prefixes: Vec<String> = Vec::new();
    let mut suffixes: Vec<String> = Vec::new();
    for part in parts {
        match part {
            StrategyKind::Vanilla => {}
            StrategyKind::BiasLabelExplanation => prefixes.push(templates.ble.clone()),
            StrategyKind::FewShot(k) => prefixes.push(fewshot_block(*k, pool, strategy.seed)?),
            StrategyKind::DebiasStatement => suffixes.push(templates.ds.clone()),
            StrategyKind::Composite(_) => unreachable!("validated"),
        }
    }
    let mut out = String::new();
    for prefix in &prefixes {
        out.push_str(prefix);
        out.push_str("\n\n");
    }
    out.push_str(&vanilla);
    for suffix in &suffixes {
        out.push('\n');
        out.push_str(suffix);
    }
    Ok(out)
}

const LABEL_KEYWORDS: [(&str, BiasLabel); 4] = [
    ("left", BiasLabel::Left),
    ("right", BiasLabel::Right),
    ("center", BiasLabel::Center),
    ("uncertain", BiasLabel::Uncertain),
];

// Lowercases and reduces a line to alphanumeric words: every other
// character (punctuation, quotes, dashes) acts as a separator.
fn normalize_line(line: &str) -> String {
    let mut out = String::new();
    for c in line.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.is_empty() && !out.ends_with(' ') {
            out.push(' ');
        }
    }
    out.trim_end().to_string()
}

/// Maps a raw model response to a label. Total: anything unrecognizable
/// (refusals, prose without a unique label keyword) becomes `Invalid`.
///
/// Scans lines from last to first for one whose normalized content is
/// exactly a label word; falls back to a whole-text match when exactly one
/// distinct label keyword occurs anywhere.
pub fn parse_label(raw: &str) -> BiasLabel {
    for line in raw.lines().rev() {
        let norm = normalize_line(line);
        for (keyword, label) in LABEL_KEYWORDS {
            if norm == keyword {
                return label;
            }
        }
    }
    let words = normalize_line(raw);
    let mut found: Option<BiasLabel> = None;
    for (keyword, label) in LABEL_KEYWORDS {
        if words.split(' ').any(|w| w == keyword) {
            if found.is_some() {
                return BiasLabel::Invalid;
            }
            found = Some(label);
        }
    }
    found.unwrap_or(BiasLabel::Invalid)
}

/// One logged probe result. `raw_response` is preserved verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub article_id: String,
    pub model_id: String,
    pub strategy: String,
    pub raw_response: String,
    pub parsed: BiasLabel,
    pub request_digest: String,
    pub timestamp: u64,
}

/// Sweep configuration: which model, which strategy, which sampling knobs.
pub struct AuditJob<'a> {
    pub gateway: &'a Gateway,
    pub templates: &'a PromptTemplates,
    pub model_id: String,
    pub strategy: PromptStrategy,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl<'a> AuditJob<'a> {
    pub fn new(
        gateway: &'a Gateway,
        templates: &'a PromptTemplates,
        model_id: impl Into<String>,
        strategy: PromptStrategy,
    ) -> AuditJob<'a> {
        AuditJob {
            gateway,
            templates,
            model_id: model_id.into(),
            strategy,
            // prediction probes default to greedy sampling
            temperature: 0.0,
            max_output_tokens: 512,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepStats {
    pub total: usize,
    pub newly_run: usize,
    pub skipped_logged: usize,
    pub invalid: usize,
    pub invalid_rate: f64,
    pub provider_calls: u64,
}

/// Log file name inside a run directory.
pub const PREDICTIONS_LOG: &str = "predictions.jsonl";

/// Reads a prediction log, tolerating a trailing partial line from an
/// interrupted run (reported as an error only if it is not the last line).
pub fn read_prediction_log(path: &Path) -> Result<Vec<PredictionRecord>, AuditError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|source| AuditError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PredictionRecord>(line) {
            Ok(record) => records.push(record),
            Err(e) if i + 1 == lines.len() => {
                log::warn!("dropping truncated final log line in {}: {e}", path.display());
            }
            Err(e) => {
                return Err(AuditError::RunLog {
                    path: path.display().to_string(),
                    message: format!("line {}: {e}", i + 1),
                })
            }
        }
    }
    Ok(records)
}

/// Runs one prediction sweep. Articles already present in the run log are
/// skipped, so re-invocation after an interruption (or a completed run)
/// issues no duplicate provider work.
pub fn run_audit(
    job: &AuditJob,
    corpus: &Corpus,
    run_dir: &Path,
) -> Result<(Vec<PredictionRecord>, SweepStats), AuditError> {
    job.strategy.validate()?;
    fs::create_dir_all(run_dir).map_err(|source| AuditError::Io {
        path: run_dir.display().to_string(),
        source,
    })?;
    let log_path = run_dir.join(PREDICTIONS_LOG);
    let descriptor = job.strategy.descriptor();
    let existing = read_prediction_log(&log_path)?;
    let mut done = BTreeSet::new();
    for record in &existing {
        if record.model_id != job.model_id || record.strategy != descriptor {
            return Err(AuditError::RunLog {
                path: log_path.display().to_string(),
                message: format!(
                    "log holds records for model {:?} strategy {:?}, expected {:?}/{:?}",
                    record.model_id, record.strategy, job.model_id, descriptor
                ),
            });
        }
        corpus.require(&record.article_id)?;
        done.insert(record.article_id.clone());
    }

    let pending: Vec<&Article> = corpus.iter().filter(|a| !done.contains(&a.id)).collect();
    let calls_before = job.gateway.provider_calls();

    let log_file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|source| AuditError::Io { path: log_path.display().to_string(), source })?;
    let writer = Mutex::new(log_file);
    let new_records: Mutex<Vec<PredictionRecord>> = Mutex::new(Vec::new());
    let first_error: Mutex<Option<AuditError>> = Mutex::new(None);
    let stop = AtomicBool::new(false);
    let next = AtomicUsize::new(0);
    let progressed = AtomicUsize::new(0);

    let worker = |_worker_id: usize| {
        loop {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            let i = next.fetch_add(1, Ordering::SeqCst);
            if i >= pending.len() {
                break;
            }
            let article = pending[i];
            let outcome = (|| -> Result<PredictionRecord, AuditError> {
                let prompt = render_prompt(&job.strategy, article, job.templates)?;
                let request = ChatRequest::user_turn(&job.model_id, prompt)
                    .with_temperature(job.temperature)
                    .with_max_output_tokens(job.max_output_tokens);
                let digest = job.gateway.chat_cache_key(&request).digest().to_string();
                let completion = job.gateway.complete(&request)?;
                let parsed = parse_label(&completion.text);
                Ok(PredictionRecord {
                    article_id: article.id.clone(),
                    model_id: job.model_id.clone(),
                    strategy: descriptor.clone(),
                    raw_response: completion.text,
                    parsed,
                    request_digest: digest,
                    timestamp: SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                })
            })();
            match outcome {
                Ok(record) => {
                    let line = serde_json::to_string(&record).expect("record serializes");
                    {
                        let mut file = writer.lock().expect("log lock");
                        if let Err(e) = writeln!(file, "{line}") {
                            stop.store(true, Ordering::SeqCst);
                            let mut slot = first_error.lock().expect("error lock");
                            if slot.is_none() {
                                *slot = Some(AuditError::Io {
                                    path: log_path.display().to_string(),
                                    source: e,
                                });
                            }
                            break;
                        }
                    }
                    let n = progressed.fetch_add(1, Ordering::SeqCst) + 1;
                    if n % 50 == 0 {
                        log::info!("audit progress: {n}/{} new predictions", pending.len());
                    }
                    new_records.lock().expect("records lock").push(record);
                }
                Err(e) => {
                    stop.store(true, Ordering::SeqCst);
                    let mut slot = first_error.lock().expect("error lock");
                    if slot.is_none() {
                        *slot = Some(e);
                    }
                    break;
                }
            }
        }
    };

    let workers = job.gateway.concurrency().max(1).min(pending.len().max(1));
    std::thread::scope(|scope| {
        for w in 0..workers {
            scope.spawn(move || worker(w));
        }
    });

    if let Some(e) = first_error.into_inner().expect("error lock") {
        return Err(e);
    }
    {
        let file = writer.into_inner().expect("log lock");
        file.sync_all().ok();
    }

    let newly_run = new_records.lock().expect("records lock").len();
    let mut by_id: std::collections::BTreeMap<String, PredictionRecord> = existing
        .into_iter()
        .map(|r| (r.article_id.clone(), r))
        .collect();
    for record in new_records.into_inner().expect("records lock") {
        by_id.insert(record.article_id.clone(), record);
    }
    // corpus order for deterministic reports
    let records: Vec<PredictionRecord> = corpus
        .iter()
        .filter_map(|a| by_id.get(&a.id).cloned())
        .collect();
    if records.len() != corpus.len() {
        return Err(AuditError::RunLog {
            path: log_path.display().to_string(),
            message: format!("log covers {} of {} articles", records.len(), corpus.len()),
        });
    }
    let invalid = records.iter().filter(|r| r.parsed == BiasLabel::Invalid).count();
    let stats = SweepStats {
        total: records.len(),
        newly_run,
        skipped_logged: records.len() - newly_run,
        invalid,
        invalid_rate: invalid as f64 / records.len().max(1) as f64,
        provider_calls: job.gateway.provider_calls() - calls_before,
    };
    log::info!(
        "audit sweep done: {} records ({} new, {} skipped), invalid rate {:.3}",
        stats.total,
        stats.newly_run,
        stats.skipped_logged,
        stats.invalid_rate
    );
    Ok((records, stats))
}
