//! Run manifests and report emission.
//!
//! Every report comes as a delimiter-separated text file plus a
//! machine-readable JSON twin, and is regenerable byte-identically from the
//! run logs: nothing below embeds timestamps or other hidden state (the
//! manifest carries the timestamp and is written once).
//!
//! Percentages are printed 0-100 with one decimal; bias tendency values
//! carry a sign and two decimals, `NA` when undefined.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::continuation::{ContinuationResult, SplitRow};
use crate::metrics::{BiasTendency, ConfusionTally, MetricSuite, RankedTopic, TopicMetrics};
use crate::reference::{reference_metrics, reference_splits, ReferenceMetricsRow};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    MalformedManifest { path: String, message: String },
    #[error("run dir already holds a manifest with {field} {existing:?}, got {new:?}")]
    ManifestMismatch {
        field: &'static str,
        existing: String,
        new: String,
    },
    #[error("unknown reference key {0:?}")]
    UnknownReference(String),
    #[error("missing data: {0}")]
    MissingData(String),
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RUN_STATS_FILE: &str = "last_run_stats.json";
pub const CONFUSION_TSV: &str = "confusion.tsv";
pub const METRICS_TSV: &str = "metrics.tsv";
pub const BTI_TSV: &str = "bti.tsv";
pub const PER_TOPIC_TSV: &str = "per_topic_bti.tsv";
pub const TOPIC_RANKING_TSV: &str = "topic_ranking.tsv";
pub const SPLITS_TSV: &str = "splits.tsv";
pub const CONTINUATIONS_LOG: &str = "continuations.jsonl";
pub const CONTINUATION_LABELS_LOG: &str = "continuation_labels.jsonl";
pub const INDICATORS_LOG: &str = "indicators.jsonl";
pub const CLUSTERS_LOG: &str = "clusters.jsonl";
pub const TOPIC_ASSIGNMENT_FILE: &str = "topic_assignment.json";

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    fs::write(path, bytes).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn json_twin(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// `# run: <id>` comment naming the run-dir manifest, when one exists: the
/// audit manifest when present, otherwise the manifest of whichever pass
/// created the directory. The id is a pure function of corpus hash, model,
/// strategy, and provider, so regenerated reports stay byte-identical.
fn manifest_line(dir: &Path) -> String {
    for file in [MANIFEST_FILE, "continue_manifest.json", "topics_manifest.json"] {
        if let Ok(manifest) = RunManifest::load_named(dir, file) {
            return format!("# run: {}\n", manifest.run_id);
        }
    }
    String::new()
}

fn write_pair<T: Serialize>(dir: &Path, tsv_name: &str, tsv: &str, record: &T) -> Result<(), ReportError> {
    let tsv_path = dir.join(tsv_name);
    let body = format!("{}{tsv}", manifest_line(dir));
    write_file(&tsv_path, body.as_bytes())?;
    let json = serde_json::to_vec_pretty(record).expect("report serializes");
    write_file(&json_twin(&tsv_path), &json)
}

/// Formats a fraction in [0,1] as a percentage with one decimal.
pub fn fmt_pct(fraction: f64) -> String {
    format!("{:.1}", fraction * 100.0)
}

/// Formats a value already on the 0-100 scale with one decimal.
pub fn fmt_pct100(value: f64) -> String {
    format!("{value:.1}")
}

/// Formats a bias tendency value: sign plus two decimals, `NA` when absent.
pub fn fmt_bti(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:+.2}"),
        None => "NA".into(),
    }
}

/// Immutable description of one run directory. Reruns must match the
/// existing manifest; reports reference it by `run_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub corpus_id: String,
    pub corpus_hash: String,
    pub model_id: String,
    pub strategy: String,
    pub chat_provider: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_provider: Option<String>,
    pub seed: u64,
    pub concurrency: usize,
    pub temperature: f64,
    pub created_unix: u64,
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        corpus_id: impl Into<String>,
        corpus_hash: impl Into<String>,
        model_id: impl Into<String>,
        strategy: impl Into<String>,
        chat_provider: impl Into<String>,
        embedding_provider: Option<String>,
        seed: u64,
        concurrency: usize,
        temperature: f64,
    ) -> RunManifest {
        let corpus_id = corpus_id.into();
        let corpus_hash = corpus_hash.into();
        let model_id = model_id.into();
        let strategy = strategy.into();
        let chat_provider = chat_provider.into();
        let mut hasher = Sha256::new();
        for part in [&corpus_hash, &model_id, &strategy, &chat_provider] {
            hasher.update(part.as_bytes());
            hasher.update([0]);
        }
        let run_id = hex::encode(hasher.finalize())[..12].to_string();
        RunManifest {
            run_id,
            corpus_id,
            corpus_hash,
            model_id,
            strategy,
            chat_provider,
            embedding_provider,
            seed,
            concurrency,
            temperature,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Writes the manifest on first use; on reruns verifies that corpus,
    /// model, and strategy match and keeps the original file untouched.
    pub fn ensure(self, run_dir: &Path) -> Result<RunManifest, ReportError> {
        self.ensure_named(run_dir, MANIFEST_FILE)
    }

    /// Like [`ensure`](Self::ensure) under a different file name, so one run
    /// directory can hold both an audit manifest and a topics manifest.
    pub fn ensure_named(self, run_dir: &Path, file_name: &str) -> Result<RunManifest, ReportError> {
        fs::create_dir_all(run_dir).map_err(|source| ReportError::Io {
            path: run_dir.display().to_string(),
            source,
        })?;
        let path = run_dir.join(file_name);
        if path.exists() {
            let existing = Self::load_named(run_dir, file_name)?;
            for (field, old, new) in [
                ("corpus_hash", &existing.corpus_hash, &self.corpus_hash),
                ("model_id", &existing.model_id, &self.model_id),
                ("strategy", &existing.strategy, &self.strategy),
                ("chat_provider", &existing.chat_provider, &self.chat_provider),
            ] {
                if old != new {
                    return Err(ReportError::ManifestMismatch {
                        field,
                        existing: old.clone(),
                        new: new.clone(),
                    });
                }
            }
            return Ok(existing);
        }
        let body = serde_json::to_vec_pretty(&self).expect("manifest serializes");
        write_file(&path, &body)?;
        Ok(self)
    }

    pub fn load(run_dir: &Path) -> Result<RunManifest, ReportError> {
        Self::load_named(run_dir, MANIFEST_FILE)
    }

    pub fn load_named(run_dir: &Path, file_name: &str) -> Result<RunManifest, ReportError> {
        let path = run_dir.join(file_name);
        let bytes = fs::read(&path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|e| ReportError::MalformedManifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Per-invocation counters, overwritten on every run (unlike the manifest).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunStats {
    pub run_id: String,
    pub provider_calls: u64,
    pub newly_run: usize,
    pub skipped_logged: usize,
    pub invalid_rate: f64,
}

pub fn write_run_stats(run_dir: &Path, stats: &RunStats) -> Result<(), ReportError> {
    let body = serde_json::to_vec_pretty(stats).expect("stats serialize");
    write_file(&run_dir.join(RUN_STATS_FILE), &body)
}

pub fn read_run_stats(run_dir: &Path) -> Result<RunStats, ReportError> {
    let path = run_dir.join(RUN_STATS_FILE);
    let bytes = fs::read(&path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| ReportError::MalformedManifest {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_confusion(run_dir: &Path, tally: &ConfusionTally) -> Result<(), ReportError> {
    use crate::metrics::{GROUND_TRUTHS, PREDICTIONS};
    let mut tsv = String::from("ground_truth\tleft\tcenter\tright\tuncertain\tinvalid\ttotal\n");
    for g in GROUND_TRUTHS {
        tsv.push_str(g.as_str());
        for p in PREDICTIONS {
            tsv.push_str(&format!("\t{}", tally.count(g, p)));
        }
        tsv.push_str(&format!("\t{}\n", tally.row_total(g)));
    }
    write_pair(run_dir, CONFUSION_TSV, &tsv, tally)
}

pub fn write_metric_suite(run_dir: &Path, suite: &MetricSuite) -> Result<(), ReportError> {
    let rows = [
        ("precision", suite.precision, suite.flags.precision_undefined),
        ("recall", suite.recall, suite.flags.recall_undefined),
        ("biased_f1", suite.biased_f1, suite.flags.biased_f1_undefined),
        ("micro_f1", suite.micro_f1, false),
        ("macro_f1", suite.macro_f1, suite.flags.negative_f1_undefined),
    ];
    let mut tsv = String::from("metric\tvalue\tflag\n");
    for (name, value, flagged) in rows {
        let flag = if flagged { "zero_denominator" } else { "" };
        tsv.push_str(&format!("{name}\t{}\t{flag}\n", fmt_pct(value)));
    }
    write_pair(run_dir, METRICS_TSV, &tsv, suite)
}

pub fn write_bias_tendency(run_dir: &Path, tendency: &BiasTendency) -> Result<(), ReportError> {
    let mut tsv = String::from("index\tvalue\tleft_total\tcenter_total\tright_total\n");
    for (name, value) in [("bti1", tendency.bti1), ("bti2", tendency.bti2)] {
        tsv.push_str(&format!(
            "{name}\t{}\t{}\t{}\t{}\n",
            fmt_bti(value),
            tendency.left_total,
            tendency.center_total,
            tendency.right_total,
        ));
    }
    write_pair(run_dir, BTI_TSV, &tsv, tendency)
}

#[derive(Debug, Clone, Serialize)]
struct PerTopicRow<'a> {
    topic: &'a str,
    interpretation: &'a str,
    bti1: Option<f64>,
    bti2: Option<f64>,
    frequency: u64,
    undefined: bool,
}

/// Per-topic scatter data: one row per topic with both indices, the
/// interpretation when one exists, and the instance count.
pub fn write_per_topic(
    run_dir: &Path,
    per_topic: &BTreeMap<String, TopicMetrics>,
    interpretations: &BTreeMap<String, String>,
) -> Result<(), ReportError> {
    let rows: Vec<PerTopicRow> = per_topic
        .iter()
        .map(|(topic, m)| PerTopicRow {
            topic,
            interpretation: interpretations.get(topic).map(String::as_str).unwrap_or(""),
            bti1: m.tendency.bti1,
            bti2: m.tendency.bti2,
            frequency: m.frequency,
            undefined: m.tendency.bti1.is_none() || m.tendency.bti2.is_none(),
        })
        .collect();
    let mut tsv = String::from("topic\tinterpretation\tbti1\tbti2\tfrequency\tundefined\n");
    for row in &rows {
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            row.topic,
            row.interpretation,
            fmt_bti(row.bti1),
            fmt_bti(row.bti2),
            row.frequency,
            if row.undefined { "yes" } else { "" },
        ));
    }
    write_pair(run_dir, PER_TOPIC_TSV, &tsv, &rows)
}

#[derive(Debug, Clone, Serialize)]
struct RankedRow<'a> {
    rank: usize,
    end: &'static str,
    topic: &'a str,
    interpretation: &'a str,
    bti1: f64,
    bti2: Option<f64>,
    frequency: u64,
}

/// Top-k / bottom-k extract of the BTI-1 ranking over above-average
/// frequency topics.
pub fn write_topic_ranking(
    run_dir: &Path,
    ranked: &[RankedTopic],
    interpretations: &BTreeMap<String, String>,
    k: usize,
) -> Result<(), ReportError> {
    let mut rows: Vec<RankedRow> = Vec::new();
    let n = ranked.len();
    for (i, topic) in ranked.iter().enumerate() {
        let end = if i < k {
            "top"
        } else if i + k >= n {
            "bottom"
        } else {
            continue;
        };
        rows.push(RankedRow {
            rank: i + 1,
            end,
            topic: &topic.topic,
            interpretation: interpretations
                .get(&topic.topic)
                .map(String::as_str)
                .unwrap_or(""),
            bti1: topic.bti1,
            bti2: topic.bti2,
            frequency: topic.frequency,
        });
    }
    let mut tsv = String::from("rank\tend\ttopic\tinterpretation\tbti1\tbti2\tfrequency\n");
    for row in &rows {
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            row.rank,
            row.end,
            row.topic,
            row.interpretation,
            fmt_bti(Some(row.bti1)),
            fmt_bti(row.bti2),
            row.frequency,
        ));
    }
    write_pair(run_dir, TOPIC_RANKING_TSV, &tsv, &rows)
}

/// The per-n per-method continuation split table (columns n, method,
/// pct_left, pct_right, ties, count).
pub fn write_split_table(run_dir: &Path, rows: &[SplitRow]) -> Result<(), ReportError> {
    let mut tsv = String::from("n\tmethod\tpct_left\tpct_right\tties\tcount\n");
    for row in rows {
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            row.n,
            row.method,
            fmt_pct100(row.pct_left),
            fmt_pct100(row.pct_right),
            row.ties,
            row.count,
        ));
    }
    write_pair(run_dir, SPLITS_TSV, &tsv, &rows)
}

#[derive(Debug, Serialize)]
struct ContinuationLabelRow<'a> {
    article_id: &'a str,
    n: usize,
    prefix_tokens: usize,
    method: &'a str,
    label: &'a str,
    tie: bool,
    suffix_tokens: usize,
}

/// Writes both continuation logs: full results (with suffixes) and the
/// per-(article, n, method) label lines.
pub fn write_continuation_logs(
    run_dir: &Path,
    results: &[ContinuationResult],
) -> Result<(), ReportError> {
    let mut full = String::new();
    let mut labels = String::new();
    for result in results {
        full.push_str(&serde_json::to_string(result).expect("result serializes"));
        full.push('\n');
        for (method, label) in &result.labels {
            let tie = match method.as_str() {
                "embedding" => result.embedding.as_ref().map(|e| e.tie).unwrap_or(false),
                "vocabulary" => result.vocabulary.map(|v| v.tie()).unwrap_or(false),
                _ => false,
            };
            let row = ContinuationLabelRow {
                article_id: &result.article_id,
                n: result.requested_n,
                prefix_tokens: result.prefix_tokens,
                method,
                label: label.as_str(),
                tie,
                suffix_tokens: result.suffix_tokens,
            };
            labels.push_str(&serde_json::to_string(&row).expect("row serializes"));
            labels.push('\n');
        }
    }
    write_file(&run_dir.join(CONTINUATIONS_LOG), full.as_bytes())?;
    write_file(&run_dir.join(CONTINUATION_LABELS_LOG), labels.as_bytes())
}

/// One line of a side-by-side comparison (no pass/fail gating).
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub metric: String,
    pub computed: Option<f64>,
    pub reference: f64,
    pub delta: Option<f64>,
}

fn compare_rows(
    suite: &MetricSuite,
    tendency: &BiasTendency,
    reference: &ReferenceMetricsRow,
) -> Vec<CompareRow> {
    let mut rows = Vec::new();
    for (name, computed, reference_value) in [
        ("bti1", tendency.bti1, reference.bti1),
        ("bti2", tendency.bti2, reference.bti2),
    ] {
        rows.push(CompareRow {
            metric: name.into(),
            computed,
            reference: reference_value,
            delta: computed.map(|c| c - reference_value),
        });
    }
    for (name, fraction, reference_value) in [
        ("precision", suite.precision, reference.precision),
        ("recall", suite.recall, reference.recall),
        ("biased_f1", suite.biased_f1, reference.biased_f1),
        ("micro_f1", suite.micro_f1, reference.micro_f1),
        ("macro_f1", suite.macro_f1, reference.macro_f1),
    ] {
        let computed = fraction * 100.0;
        rows.push(CompareRow {
            metric: name.into(),
            computed: Some(computed),
            reference: reference_value,
            delta: Some(computed - reference_value),
        });
    }
    rows
}

/// Emits `compare_<key>.tsv/.json`: computed metrics next to the published
/// reference row named by `key` (e.g. `strategies:vanilla`).
pub fn write_metrics_comparison(
    run_dir: &Path,
    key: &str,
    suite: &MetricSuite,
    tendency: &BiasTendency,
) -> Result<PathBuf, ReportError> {
    let reference =
        reference_metrics(key).ok_or_else(|| ReportError::UnknownReference(key.to_string()))?;
    let rows = compare_rows(suite, tendency, reference);
    let mut tsv = format!("{}# reference: {key}\nmetric\tcomputed\treference\tdelta\n", manifest_line(run_dir));
    for row in &rows {
        let is_bti = row.metric.starts_with("bti");
        let fmt = |v: Option<f64>| -> String {
            match v {
                Some(v) if is_bti => format!("{v:+.2}"),
                Some(v) => format!("{v:.1}"),
                None => "NA".into(),
            }
        };
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            row.metric,
            fmt(row.computed),
            fmt(Some(row.reference)),
            fmt(row.delta),
        ));
    }
    let name = format!("compare_{}.tsv", key.replace([':', '/'], "_"));
    let path = run_dir.join(&name);
    write_file(&path, tsv.as_bytes())?;
    let json = serde_json::to_vec_pretty(&rows).expect("rows serialize");
    write_file(&json_twin(&path), &json)?;
    Ok(path)
}

/// Emits a side-by-side comparison of continuation splits against the
/// published table named by `key` (e.g. `continuation:embedding`).
pub fn write_split_comparison(
    run_dir: &Path,
    key: &str,
    method: &str,
    rows: &[SplitRow],
) -> Result<PathBuf, ReportError> {
    let reference = reference_splits(key);
    if reference.is_empty() {
        return Err(ReportError::UnknownReference(key.to_string()));
    }
    #[derive(Serialize)]
    struct SplitCompareRow {
        n: usize,
        computed_left: Option<f64>,
        reference_left: f64,
        delta_left: Option<f64>,
        computed_right: Option<f64>,
        reference_right: f64,
    }
    let mut out_rows = Vec::new();
    for r in reference {
        let computed = rows.iter().find(|row| row.n == r.n && row.method == method);
        out_rows.push(SplitCompareRow {
            n: r.n,
            computed_left: computed.map(|c| c.pct_left),
            reference_left: r.pct_left,
            delta_left: computed.map(|c| c.pct_left - r.pct_left),
            computed_right: computed.map(|c| c.pct_right),
            reference_right: r.pct_right,
        });
    }
    let mut tsv = format!(
        "{}# reference: {key} (method {method})\nn\tcomputed_left\treference_left\tdelta_left\tcomputed_right\treference_right\n",
        manifest_line(run_dir)
    );
    let fmt = |v: Option<f64>| v.map(fmt_pct100).unwrap_or_else(|| "NA".into());
    for row in &out_rows {
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            row.n,
            fmt(row.computed_left),
            fmt_pct100(row.reference_left),
            fmt(row.delta_left),
            fmt(row.computed_right),
            fmt_pct100(row.reference_right),
        ));
    }
    let name = format!("compare_{}.tsv", key.replace([':', '/'], "_"));
    let path = run_dir.join(&name);
    write_file(&path, tsv.as_bytes())?;
    let json = serde_json::to_vec_pretty(&out_rows).expect("rows serialize");
    write_file(&json_twin(&path), &json)?;
    Ok(path)
}
