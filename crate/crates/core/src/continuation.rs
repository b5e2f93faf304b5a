//! Article-continuation probe: continue a fixed-length prefix with the
//! model, then label the generated suffix by embedding similarity against
//! the same-event triple, by left/right vocabulary hits, or by prompting a
//! classifier; report relative left/right percentages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::parse_label;
use crate::corpus::{drop_prefix, take_prefix, BiasLabel, Corpus, CorpusError, EventTriple};
use crate::gateway::{cosine_similarity, ChatRequest, Gateway, GatewayError};
use crate::lexicon::Vocabulary;
use crate::templates::{fill, PromptTemplates};
use crate::tokenize::tokenize;

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("gateway: {0}")]
    Gateway(#[from] GatewayError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("prefix is empty")]
    EmptyPrefix,
    #[error("model returned an empty suffix")]
    EmptySuffix,
    #[error("reference {article_id:?} is empty after dropping {n} prefix tokens")]
    EmptyReference { article_id: String, n: usize },
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("classifier few-shot mode needs the event triple references")]
    MissingReferences,
    #[error("method {0:?} is not a label method (expected embedding, vocabulary, classifier_zero, classifier_few)")]
    UnknownMethod(String),
}

/// How a generated suffix gets its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMethod {
    Embedding,
    Vocabulary,
    ClassifierZeroShot,
    ClassifierFewShot,
}

impl LabelMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelMethod::Embedding => "embedding",
            LabelMethod::Vocabulary => "vocabulary",
            LabelMethod::ClassifierZeroShot => "classifier_zero",
            LabelMethod::ClassifierFewShot => "classifier_few",
        }
    }

    pub fn parse(s: &str) -> Result<LabelMethod, ContinuationError> {
        match s.trim() {
            "embedding" => Ok(LabelMethod::Embedding),
            "vocabulary" | "vocab" => Ok(LabelMethod::Vocabulary),
            "classifier_zero" | "classifier-zero" => Ok(LabelMethod::ClassifierZeroShot),
            "classifier_few" | "classifier-few" => Ok(LabelMethod::ClassifierFewShot),
            other => Err(ContinuationError::UnknownMethod(other.to_string())),
        }
    }
}

/// The three same-event reference texts, already truncated to drop the
/// prefix (so a suffix is compared against what follows the prefix).
#[derive(Debug, Clone)]
pub struct TripleReferences {
    pub left: String,
    pub center: String,
    pub right: String,
}

impl TripleReferences {
    pub fn texts(&self) -> [&str; 3] {
        [&self.left, &self.center, &self.right]
    }
}

/// Resolves a triple against the corpus and drops the first `n` tokens of
/// each reference body. Errors when truncation leaves a reference empty.
pub fn truncated_references(
    corpus: &Corpus,
    triple: &EventTriple,
    n: usize,
) -> Result<TripleReferences, ContinuationError> {
    let mut texts = Vec::with_capacity(3);
    for label in [BiasLabel::Left, BiasLabel::Center, BiasLabel::Right] {
        let id = triple.article_id(label).expect("ground-truth label");
        let article = corpus.require(id)?;
        let truncated = drop_prefix(&article.body, n);
        if truncated.is_empty() {
            return Err(ContinuationError::EmptyReference { article_id: id.to_string(), n });
        }
        texts.push(truncated);
    }
    let mut texts = texts.into_iter();
    Ok(TripleReferences {
        left: texts.next().unwrap(),
        center: texts.next().unwrap(),
        right: texts.next().unwrap(),
    })
}

/// Prompts the model to continue `prefix`, returning the suffix verbatim.
pub fn continue_article(
    gateway: &Gateway,
    templates: &PromptTemplates,
    model_id: &str,
    prefix: &str,
    temperature: f64,
    max_output_tokens: u32,
) -> Result<String, ContinuationError> {
    if prefix.is_empty() {
        return Err(ContinuationError::EmptyPrefix);
    }
    let prompt = fill(&templates.continuation, &[("article", prefix)]);
    let request = ChatRequest::user_turn(model_id, prompt)
        .with_temperature(temperature)
        .with_max_output_tokens(max_output_tokens);
    let completion = gateway.complete(&request)?;
    if completion.text.is_empty() {
        return Err(ContinuationError::EmptySuffix);
    }
    Ok(completion.text)
}

/// Outcome of the three-way similarity argmax. On an exact tie the winner
/// is the first of (left, center, right) among the maxima, flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatch {
    pub label: BiasLabel,
    /// Cosine similarities in (left, center, right) order.
    pub scores: [f64; 3],
    pub tie: bool,
}

/// The argmax of Eq.-style cosine similarities, factored out so oracles can
/// drive it with arbitrary vectors.
pub fn embedding_argmax(
    suffix: &[f64],
    references: [&[f64]; 3],
) -> Result<EmbeddingMatch, ContinuationError> {
    let mut scores = [0.0f64; 3];
    for (i, reference) in references.iter().enumerate() {
        scores[i] = cosine_similarity(suffix, reference)?;
    }
    let best = scores[0].max(scores[1]).max(scores[2]);
    let winners: Vec<usize> = (0..3).filter(|&i| scores[i] == best).collect();
    let labels = [BiasLabel::Left, BiasLabel::Center, BiasLabel::Right];
    Ok(EmbeddingMatch {
        label: labels[winners[0]],
        scores,
        tie: winners.len() > 1,
    })
}

/// Labels a suffix by cosine similarity against the truncated triple
/// references, embedding all four texts through the same provider.
pub fn label_by_embedding(
    gateway: &Gateway,
    suffix: &str,
    references: &TripleReferences,
) -> Result<EmbeddingMatch, ContinuationError> {
    let texts: Vec<String> = std::iter::once(suffix.to_string())
        .chain(references.texts().iter().map(|t| t.to_string()))
        .collect();
    let vectors = gateway.embed_texts(&texts)?;
    embedding_argmax(
        vectors[0].values(),
        [vectors[1].values(), vectors[2].values(), vectors[3].values()],
    )
}

/// Vocabulary hit counts for a suffix. Equal counts are a tie and label as
/// center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyMatch {
    pub label: BiasLabel,
    pub left_hits: u64,
    pub right_hits: u64,
}

impl VocabularyMatch {
    pub fn tie(&self) -> bool {
        self.left_hits == self.right_hits
    }
}

/// Counts occurrences of left- and right-vocabulary tokens in the
/// lowercased suffix; more left hits labels left, more right hits right,
/// equal counts center.
pub fn label_by_vocabulary(
    suffix: &str,
    vocabulary: &Vocabulary,
) -> Result<VocabularyMatch, ContinuationError> {
    if vocabulary.is_empty() {
        return Err(ContinuationError::EmptyVocabulary);
    }
    let mut left_hits = 0u64;
    let mut right_hits = 0u64;
    for token in tokenize(suffix) {
        let token = token.to_lowercase();
        if vocabulary.is_left(&token) {
            left_hits += 1;
        } else if vocabulary.is_right(&token) {
            right_hits += 1;
        }
    }
    let label = match left_hits.cmp(&right_hits) {
        std::cmp::Ordering::Greater => BiasLabel::Left,
        std::cmp::Ordering::Less => BiasLabel::Right,
        std::cmp::Ordering::Equal => BiasLabel::Center,
    };
    Ok(VocabularyMatch { label, left_hits, right_hits })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierMode {
    ZeroShot,
    FewShot,
}

/// Labels a suffix by prompting a classifier model; few-shot mode includes
/// the truncated triple as references. Responses parse through the same
/// contract as prediction probes.
pub fn label_by_classifier(
    gateway: &Gateway,
    templates: &PromptTemplates,
    model_id: &str,
    suffix: &str,
    mode: ClassifierMode,
    references: Option<&TripleReferences>,
) -> Result<BiasLabel, ContinuationError> {
    let prompt = match mode {
        ClassifierMode::ZeroShot => fill(&templates.classifier_zero_shot, &[("article", suffix)]),
        ClassifierMode::FewShot => {
            let refs = references.ok_or(ContinuationError::MissingReferences)?;
            fill(
                &templates.classifier_few_shot,
                &[
                    ("article", suffix),
                    ("left_reference", &refs.left),
                    ("center_reference", &refs.center),
                    ("right_reference", &refs.right),
                ],
            )
        }
    };
    let request = ChatRequest::user_turn(model_id, prompt).with_max_output_tokens(64);
    let completion = gateway.complete(&request)?;
    Ok(parse_label(&completion.text))
}

/// Relative left/right percentages (0-100) over left+right labels only;
/// everything else is excluded from the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeSplit {
    pub pct_left: f64,
    pub pct_right: f64,
    pub left_count: u64,
    pub right_count: u64,
    pub excluded: u64,
    /// No left or right labels at all; both percentages are 0.
    pub empty_denominator: bool,
}

pub fn relative_left_right(labels: &[BiasLabel]) -> RelativeSplit {
    let left_count = labels.iter().filter(|&&l| l == BiasLabel::Left).count() as u64;
    let right_count = labels.iter().filter(|&&l| l == BiasLabel::Right).count() as u64;
    let excluded = labels.len() as u64 - left_count - right_count;
    let denominator = left_count + right_count;
    if denominator == 0 {
        return RelativeSplit {
            pct_left: 0.0,
            pct_right: 0.0,
            left_count,
            right_count,
            excluded,
            empty_denominator: true,
        };
    }
    RelativeSplit {
        pct_left: 100.0 * left_count as f64 / denominator as f64,
        pct_right: 100.0 * right_count as f64 / denominator as f64,
        left_count,
        right_count,
        excluded,
        empty_denominator: false,
    }
}

/// One labeled continuation, all methods recorded independently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub article_id: String,
    /// Tokens actually used for the prefix (may be fewer than requested on
    /// short articles).
    pub prefix_tokens: usize,
    /// The requested prefix length the sweep was run at.
    pub requested_n: usize,
    pub suffix: String,
    pub suffix_tokens: usize,
    pub labels: BTreeMap<String, BiasLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingMatch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<VocabularyMatch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_provider: Option<String>,
}

/// One cell of the per-n per-method split table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitRow {
    pub n: usize,
    pub method: String,
    pub pct_left: f64,
    pub pct_right: f64,
    pub ties: u64,
    pub count: u64,
}

pub struct ContinuationSweep<'a> {
    pub gateway: &'a Gateway,
    pub templates: &'a PromptTemplates,
    pub model_id: String,
    /// Model used for classifier labeling (defaults to `model_id`).
    pub classifier_model_id: String,
    pub n_values: Vec<usize>,
    pub methods: Vec<LabelMethod>,
    pub vocabulary: Option<&'a Vocabulary>,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl<'a> ContinuationSweep<'a> {
    pub fn new(
        gateway: &'a Gateway,
        templates: &'a PromptTemplates,
        model_id: impl Into<String>,
    ) -> ContinuationSweep<'a> {
        let model_id = model_id.into();
        ContinuationSweep {
            gateway,
            templates,
            classifier_model_id: model_id.clone(),
            model_id,
            n_values: vec![20, 40, 80, 160, 320],
            methods: vec![LabelMethod::Embedding, LabelMethod::Vocabulary],
            vocabulary: None,
            // continuation samples freely unless configured otherwise
            temperature: 1.0,
            max_output_tokens: 1024,
        }
    }
}

/// Runs the continuation probe over every article of every complete triple,
/// for every requested prefix length, labeling with every requested method.
/// Returns the per-result log entries and the aggregated split table.
pub fn run_continuation(
    sweep: &ContinuationSweep,
    corpus: &Corpus,
    triples: &[EventTriple],
) -> Result<(Vec<ContinuationResult>, Vec<SplitRow>), ContinuationError> {
    if sweep.methods.contains(&LabelMethod::Vocabulary) && sweep.vocabulary.is_none() {
        return Err(ContinuationError::EmptyVocabulary);
    }
    let mut results = Vec::new();
    for triple in triples {
        for label in [BiasLabel::Left, BiasLabel::Center, BiasLabel::Right] {
            let id = triple.article_id(label).expect("ground-truth label");
            let article = corpus.require(id)?;
            for &n in &sweep.n_values {
                let (prefix, actual_n) = take_prefix(article, n);
                if prefix.is_empty() {
                    continue;
                }
                let suffix = continue_article(
                    sweep.gateway,
                    sweep.templates,
                    &sweep.model_id,
                    &prefix,
                    sweep.temperature,
                    sweep.max_output_tokens,
                )?;
                let needs_references = sweep.methods.iter().any(|m| {
                    matches!(m, LabelMethod::Embedding | LabelMethod::ClassifierFewShot)
                });
                let references = if needs_references {
                    Some(truncated_references(corpus, triple, actual_n)?)
                } else {
                    None
                };
                let mut result = ContinuationResult {
                    article_id: article.id.clone(),
                    prefix_tokens: actual_n,
                    requested_n: n,
                    suffix_tokens: tokenize(&suffix).len(),
                    suffix,
                    labels: BTreeMap::new(),
                    embedding: None,
                    vocabulary: None,
                    embedding_provider: None,
                };
                for method in &sweep.methods {
                    let label = match method {
                        LabelMethod::Embedding => {
                            let matched = label_by_embedding(
                                sweep.gateway,
                                &result.suffix,
                                references.as_ref().expect("references prepared"),
                            )?;
                            result.embedding_provider = sweep.gateway.embedding_provider_id();
                            let label = matched.label;
                            result.embedding = Some(matched);
                            label
                        }
                        LabelMethod::Vocabulary => {
                            let matched = label_by_vocabulary(
                                &result.suffix,
                                sweep.vocabulary.expect("checked above"),
                            )?;
                            result.vocabulary = Some(matched);
                            matched.label
                        }
                        LabelMethod::ClassifierZeroShot => label_by_classifier(
                            sweep.gateway,
                            sweep.templates,
                            &sweep.classifier_model_id,
                            &result.suffix,
                            ClassifierMode::ZeroShot,
                            None,
                        )?,
                        LabelMethod::ClassifierFewShot => label_by_classifier(
                            sweep.gateway,
                            sweep.templates,
                            &sweep.classifier_model_id,
                            &result.suffix,
                            ClassifierMode::FewShot,
                            references.as_ref(),
                        )?,
                    };
                    result.labels.insert(method.as_str().to_string(), label);
                }
                results.push(result);
            }
        }
    }
    let table = split_table(&results, &sweep.n_values, &sweep.methods);
    Ok((results, table))
}

/// Aggregates results into the per-n per-method relative split table.
pub fn split_table(
    results: &[ContinuationResult],
    n_values: &[usize],
    methods: &[LabelMethod],
) -> Vec<SplitRow> {
    let mut rows = Vec::new();
    for &n in n_values {
        for method in methods {
            let mut labels = Vec::new();
            let mut ties = 0u64;
            for result in results.iter().filter(|r| r.requested_n == n) {
                let Some(&label) = result.labels.get(method.as_str()) else {
                    continue;
                };
                labels.push(label);
                let tied = match method {
                    LabelMethod::Embedding => {
                        result.embedding.as_ref().map(|e| e.tie).unwrap_or(false)
                    }
                    LabelMethod::Vocabulary => {
                        result.vocabulary.map(|v| v.tie()).unwrap_or(false)
                    }
                    _ => false,
                };
                if tied {
                    ties += 1;
                }
            }
            let split = relative_left_right(&labels);
            rows.push(SplitRow {
                n,
                method: method.as_str().to_string(),
                pct_left: split.pct_left,
                pct_right: split.pct_right,
                ties,
                count: labels.len() as u64,
            });
        }
    }
    rows
}
