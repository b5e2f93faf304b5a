//! Python bindings for the bias audit toolkit: corpus handling, prompt
//! rendering, label parsing, metrics, vocabulary matching, and clustering.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bias_audit_core::audit;
use bias_audit_core::cluster::{self, ClusterConfig, Linkage};
use bias_audit_core::continuation;
use bias_audit_core::corpus::{self, BiasLabel, RecordFormat};
use bias_audit_core::finetune;
use bias_audit_core::gateway;
use bias_audit_core::lexicon;
use bias_audit_core::metrics;
use bias_audit_core::templates::PromptTemplates;
use bias_audit_core::tokenize as tok;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn parse_bias_label(s: &str) -> PyResult<BiasLabel> {
    BiasLabel::parse(s).ok_or_else(|| value_err(format!("unknown label {s:?}")))
}

fn ground_truth_label(s: &str) -> PyResult<BiasLabel> {
    BiasLabel::parse_ground_truth(s)
        .ok_or_else(|| value_err(format!("{s:?} is not a ground-truth label")))
}

/// Word-level tokenization used for prefixes and vocabulary counts.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    tok::tokenize(text)
}

/// Joins tokens, omitting the space before punctuation-only tokens.
#[pyfunction]
fn detokenize(tokens: Vec<String>) -> String {
    tok::detokenize(&tokens)
}

/// First `n` tokens of `text` as a string, plus the count actually used.
#[pyfunction]
fn take_prefix(text: &str, n: usize) -> (String, usize) {
    let tokens = tok::tokenize(text);
    let actual = n.min(tokens.len());
    (tok::detokenize(&tokens[..actual]), actual)
}

/// Remainder of `text` after its first `n` tokens.
#[pyfunction]
fn drop_prefix(text: &str, n: usize) -> String {
    corpus::drop_prefix(text, n)
}

/// Maps a raw model response to left/center/right/uncertain/invalid.
#[pyfunction]
fn parse_label(raw: &str) -> String {
    audit::parse_label(raw).as_str().to_string()
}

/// Renders a prediction prompt. `strategy` accepts vanilla, ble, ds,
/// fewshot:K, and '+'-joined composites.
#[pyfunction]
#[pyo3(signature = (strategy, body, seed=0, title=None, include_title=false))]
fn render_prompt(
    strategy: &str,
    body: &str,
    seed: u64,
    title: Option<&str>,
    include_title: bool,
) -> PyResult<String> {
    let kind = audit::parse_strategy_kind(strategy).map_err(value_err)?;
    let mut prompt_strategy = audit::PromptStrategy::new(kind).with_seed(seed);
    prompt_strategy.include_title = include_title;
    let mut article = corpus::Article::new("py", body, BiasLabel::Center);
    if let Some(title) = title {
        article = article.with_title(title);
    }
    let templates = PromptTemplates::builtin();
    audit::render_prompt(&prompt_strategy, &article, &templates).map_err(value_err)
}

/// A validated, immutable article corpus.
#[pyclass]
struct Corpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl Corpus {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.iter().map(|a| a.id.clone()).collect()
    }

    fn label_histogram(&self) -> BTreeMap<String, usize> {
        self.inner
            .label_histogram()
            .into_iter()
            .map(|(label, count)| (label.as_str().to_string(), count))
            .collect()
    }

    /// One article as a dict, or None.
    fn article<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(article) = self.inner.get(id) else {
            return Ok(None);
        };
        let dict = PyDict::new(py);
        dict.set_item("id", &article.id)?;
        dict.set_item("title", &article.title)?;
        dict.set_item("body", &article.body)?;
        dict.set_item("label", article.ground_truth.as_str())?;
        dict.set_item("event_id", article.event_id.as_deref())?;
        dict.set_item("topic", article.topic.as_deref())?;
        dict.set_item("source", &article.source)?;
        dict.set_item("token_count", article.token_count)?;
        Ok(Some(dict))
    }

    /// Complete event triples plus incomplete-event reports.
    fn build_triples(&self) -> PyResult<(Vec<(String, String, String, String)>, Vec<(String, Vec<String>)>)> {
        let set = corpus::build_triples(&self.inner).map_err(value_err)?;
        let triples = set
            .triples
            .into_iter()
            .map(|t| (t.event_id, t.left_id, t.center_id, t.right_id))
            .collect();
        let incomplete = set
            .incomplete
            .into_iter()
            .map(|e| {
                (
                    e.event_id,
                    e.present.iter().map(|l| l.as_str().to_string()).collect(),
                )
            })
            .collect();
        Ok((triples, incomplete))
    }

    /// Center→left, right→center, original left articles dropped.
    fn relabel_right_shift(&self) -> Corpus {
        Corpus { inner: finetune::relabel_right_shift(&self.inner) }
    }

    fn save_jsonl(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_jsonl(&path).map_err(io_err)
    }
}

/// Loads a corpus file; the format comes from the extension
/// (.jsonl/.ndjson/.csv/.tsv).
#[pyfunction]
fn load_corpus(path: PathBuf) -> PyResult<Corpus> {
    let format = RecordFormat::from_path(&path).map_err(value_err)?;
    let inner = corpus::load_corpus(&path, format).map_err(io_err)?;
    Ok(Corpus { inner })
}

/// Counts indexed by (ground truth × prediction).
#[pyclass]
struct ConfusionTally {
    inner: metrics::ConfusionTally,
}

#[pymethods]
impl ConfusionTally {
    #[new]
    fn new() -> ConfusionTally {
        ConfusionTally { inner: metrics::ConfusionTally::new() }
    }

    fn add(&mut self, ground_truth: &str, predicted: &str) -> PyResult<()> {
        let g = ground_truth_label(ground_truth)?;
        let p = parse_bias_label(predicted)?;
        self.inner.add(g, p).map_err(value_err)
    }

    fn count(&self, ground_truth: &str, predicted: &str) -> PyResult<u64> {
        Ok(self
            .inner
            .count(ground_truth_label(ground_truth)?, parse_bias_label(predicted)?))
    }

    fn row_total(&self, ground_truth: &str) -> PyResult<u64> {
        Ok(self.inner.row_total(ground_truth_label(ground_truth)?))
    }

    fn total(&self) -> u64 {
        self.inner.total()
    }

    /// BTI-1: left-vs-right rate of center confusions; positive leans left.
    fn bti1(&self) -> PyResult<f64> {
        metrics::bti1(&self.inner).map_err(value_err)
    }

    /// BTI-2: center ground truth predicted right vs left.
    fn bti2(&self) -> PyResult<f64> {
        metrics::bti2(&self.inner).map_err(value_err)
    }

    /// The five binary metrics as fractions plus zero-denominator flags.
    fn binary_metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let suite = metrics::binary_metrics(&self.inner).map_err(value_err)?;
        let dict = PyDict::new(py);
        dict.set_item("precision", suite.precision)?;
        dict.set_item("recall", suite.recall)?;
        dict.set_item("biased_f1", suite.biased_f1)?;
        dict.set_item("micro_f1", suite.micro_f1)?;
        dict.set_item("macro_f1", suite.macro_f1)?;
        dict.set_item("precision_undefined", suite.flags.precision_undefined)?;
        dict.set_item("recall_undefined", suite.flags.recall_undefined)?;
        dict.set_item("negative_f1_undefined", suite.flags.negative_f1_undefined)?;
        Ok(dict)
    }

    fn swap_left_right(&self) -> ConfusionTally {
        ConfusionTally { inner: self.inner.swap_left_right() }
    }
}

/// Builds a tally from parallel ground-truth / prediction label lists.
#[pyfunction]
fn tally_from_labels(ground_truths: Vec<String>, predictions: Vec<String>) -> PyResult<ConfusionTally> {
    if ground_truths.len() != predictions.len() {
        return Err(value_err("ground_truths and predictions differ in length"));
    }
    let mut tally = ConfusionTally::new();
    for (g, p) in ground_truths.iter().zip(&predictions) {
        tally.add(g, p)?;
    }
    Ok(tally)
}

/// Paired left/right token-frequency vocabulary.
#[pyclass]
struct Vocabulary {
    inner: lexicon::Vocabulary,
}

#[pymethods]
impl Vocabulary {
    fn left(&self) -> BTreeMap<String, u64> {
        self.inner.left.clone()
    }

    fn right(&self) -> BTreeMap<String, u64> {
        self.inner.right.clone()
    }

    fn left_sum(&self) -> u64 {
        self.inner.left_sum()
    }

    fn right_sum(&self) -> u64 {
        self.inner.right_sum()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(io_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Vocabulary> {
        Ok(Vocabulary { inner: lexicon::Vocabulary::load(&path).map_err(io_err)? })
    }
}

/// Builds the vocabulary from a corpus with the shipped stopword list.
#[pyfunction]
#[pyo3(signature = (corpus, ratio_factor=2.0, top_k=2000))]
fn build_vocabulary(corpus: &Corpus, ratio_factor: f64, top_k: usize) -> PyResult<Vocabulary> {
    let stopwords = lexicon::StopwordList::builtin();
    let freqs = lexicon::count_side_frequencies(&corpus.inner, &stopwords).map_err(value_err)?;
    let vocabulary = lexicon::build_vocabulary(
        &freqs,
        lexicon::VocabularyConfig { ratio_factor, left_top_k: top_k },
        lexicon::VocabularyProvenance {
            corpus_id: corpus.inner.id.clone(),
            stopword_list_id: stopwords.id.clone(),
        },
    )
    .map_err(value_err)?;
    Ok(Vocabulary { inner: vocabulary })
}

/// Counts left/right vocabulary hits in `text`: (label, left_hits, right_hits).
#[pyfunction]
fn label_by_vocabulary(text: &str, vocabulary: &Vocabulary) -> PyResult<(String, u64, u64)> {
    let matched =
        continuation::label_by_vocabulary(text, &vocabulary.inner).map_err(value_err)?;
    Ok((matched.label.as_str().to_string(), matched.left_hits, matched.right_hits))
}

/// Agglomerative clustering with a distance threshold; returns member index
/// lists.
#[pyfunction]
#[pyo3(signature = (points, threshold=2.0, linkage="ward", normalize=false))]
fn cluster_points(
    points: Vec<Vec<f64>>,
    threshold: f64,
    linkage: &str,
    normalize: bool,
) -> PyResult<Vec<Vec<usize>>> {
    let linkage = match linkage {
        "ward" => Linkage::Ward,
        "single" => Linkage::Single,
        "complete" => Linkage::Complete,
        "average" => Linkage::Average,
        other => return Err(value_err(format!("unknown linkage {other:?}"))),
    };
    let config = ClusterConfig { linkage, threshold, normalize, ..ClusterConfig::default() };
    cluster::cluster_points(&points, &config).map_err(value_err)
}

/// Deterministic unit-norm embedding derived from (text, seed).
#[pyfunction]
fn mock_embed(text: &str, dimension: usize, seed: u64) -> Vec<f64> {
    gateway::mock_embed(text, dimension, seed).values().to_vec()
}

#[pyfunction]
fn cosine_similarity(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    gateway::cosine_similarity(&a, &b).map_err(value_err)
}

/// Three-way similarity argmax: (label, [left, center, right] scores, tie).
#[pyfunction]
fn embedding_argmax(
    suffix: Vec<f64>,
    left: Vec<f64>,
    center: Vec<f64>,
    right: Vec<f64>,
) -> PyResult<(String, Vec<f64>, bool)> {
    let matched = continuation::embedding_argmax(&suffix, [&left[..], &center[..], &right[..]])
        .map_err(value_err)?;
    Ok((matched.label.as_str().to_string(), matched.scores.to_vec(), matched.tie))
}

/// Relative left/right percentages over left+right labels only.
#[pyfunction]
fn relative_left_right<'py>(py: Python<'py>, labels: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let parsed: Vec<BiasLabel> = labels
        .iter()
        .map(|l| parse_bias_label(l))
        .collect::<PyResult<_>>()?;
    let split = continuation::relative_left_right(&parsed);
    let dict = PyDict::new(py);
    dict.set_item("pct_left", split.pct_left)?;
    dict.set_item("pct_right", split.pct_right)?;
    dict.set_item("left_count", split.left_count)?;
    dict.set_item("right_count", split.right_count)?;
    dict.set_item("excluded", split.excluded)?;
    dict.set_item("empty_denominator", split.empty_denominator)?;
    Ok(dict)
}

#[pymodule]
fn biasaudit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(detokenize, m)?)?;
    m.add_function(wrap_pyfunction!(take_prefix, m)?)?;
    m.add_function(wrap_pyfunction!(drop_prefix, m)?)?;
    m.add_function(wrap_pyfunction!(parse_label, m)?)?;
    m.add_function(wrap_pyfunction!(render_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(tally_from_labels, m)?)?;
    m.add_function(wrap_pyfunction!(build_vocabulary, m)?)?;
    m.add_function(wrap_pyfunction!(label_by_vocabulary, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_points, m)?)?;
    m.add_function(wrap_pyfunction!(mock_embed, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(embedding_argmax, m)?)?;
    m.add_function(wrap_pyfunction!(relative_left_right, m)?)?;
    m.add_class::<Corpus>()?;
    m.add_class::<ConfusionTally>()?;
    m.add_class::<Vocabulary>()?;
    Ok(())
}
