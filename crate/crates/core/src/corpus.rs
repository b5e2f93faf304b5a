//! Labeled article corpora: loading, validation, event triples, and
//! prefix/truncation helpers for the continuation probe.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::tokenize::{detokenize, tokenize};

/// Political-leaning label. Ground truth is restricted to the first three;
/// `Uncertain` is a legal model answer and `Invalid` marks responses that
/// could not be parsed (refusals, off-topic text).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasLabel {
    Left,
    Center,
    Right,
    Uncertain,
    Invalid,
}

impl BiasLabel {
    /// Lowercase wire form used in corpus files and run logs.
    pub fn as_str(&self) -> &'static str {
        match self {
            BiasLabel::Left => "left",
            BiasLabel::Center => "center",
            BiasLabel::Right => "right",
            BiasLabel::Uncertain => "uncertain",
            BiasLabel::Invalid => "invalid",
        }
    }

    /// Capitalized form for prompts and reports.
    pub fn display_name(&self) -> &'static str {
        match self {
            BiasLabel::Left => "Left",
            BiasLabel::Center => "Center",
            BiasLabel::Right => "Right",
            BiasLabel::Uncertain => "Uncertain",
            BiasLabel::Invalid => "Invalid",
        }
    }

    pub fn parse(s: &str) -> Option<BiasLabel> {
        let s = s.trim();
        for label in [
            BiasLabel::Left,
            BiasLabel::Center,
            BiasLabel::Right,
            BiasLabel::Uncertain,
            BiasLabel::Invalid,
        ] {
            if s.eq_ignore_ascii_case(label.as_str()) {
                return Some(label);
            }
        }
        None
    }

    /// Parses a ground-truth label, rejecting `uncertain`/`invalid`.
    pub fn parse_ground_truth(s: &str) -> Option<BiasLabel> {
        match Self::parse(s) {
            Some(l) if l.is_ground_truth() => Some(l),
            _ => None,
        }
    }

    pub fn is_ground_truth(&self) -> bool {
        matches!(self, BiasLabel::Left | BiasLabel::Center | BiasLabel::Right)
    }
}

impl fmt::Display for BiasLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled news article, the atomic audit unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub body: String,
    pub ground_truth: BiasLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default)]
    pub source: String,
    pub token_count: usize,
}

impl Article {
    pub fn new(id: impl Into<String>, body: impl Into<String>, ground_truth: BiasLabel) -> Article {
        let body = body.into();
        let token_count = tokenize(&body).len();
        Article {
            id: id.into(),
            title: String::new(),
            body,
            ground_truth,
            event_id: None,
            topic: None,
            source: String::new(),
            token_count,
        }
    }

    pub fn with_event(mut self, event_id: impl Into<String>) -> Article {
        self.event_id = Some(event_id.into());
        self
    }

    pub fn with_topic(mut self, topic: impl Into<String>) -> Article {
        self.topic = Some(topic.into());
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Article {
        self.title = title.into();
        self
    }
}

/// Three same-event articles, one per ground-truth label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTriple {
    pub event_id: String,
    pub left_id: String,
    pub center_id: String,
    pub right_id: String,
}

impl EventTriple {
    pub fn article_id(&self, label: BiasLabel) -> Option<&str> {
        match label {
            BiasLabel::Left => Some(&self.left_id),
            BiasLabel::Center => Some(&self.center_id),
            BiasLabel::Right => Some(&self.right_id),
            _ => None,
        }
    }
}

/// An event that was missing at least one of the three labels. Reported by
/// [`build_triples`] instead of being silently dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteEvent {
    pub event_id: String,
    pub present: Vec<BiasLabel>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    Missing(String),
    #[error("failed to read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unknown ground-truth label {label:?} (expected left/center/right)")]
    UnknownLabel {
        path: String,
        line: usize,
        label: String,
    },
    #[error("duplicate article id {id:?}")]
    DuplicateId { id: String },
    #[error("article {id:?} has an empty body")]
    EmptyBody { id: String },
    #[error("event {event_id:?} has more than one {label} article")]
    DuplicateEventLabel { event_id: String, label: BiasLabel },
    #[error("unknown article id {id:?}")]
    UnknownArticle { id: String },
    #[error("unsupported corpus format for {path:?} (expected .jsonl, .csv or .tsv)")]
    UnknownFormat { path: String },
}

/// On-disk record formats accepted by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    /// One JSON object per line.
    Jsonl,
    /// Delimiter-separated table with a header row.
    Delimited(u8),
}

impl RecordFormat {
    pub const CSV: RecordFormat = RecordFormat::Delimited(b',');
    pub const TSV: RecordFormat = RecordFormat::Delimited(b'\t');

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<RecordFormat, CorpusError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Ok(RecordFormat::Jsonl),
            Some("csv") => Ok(RecordFormat::CSV),
            Some("tsv") => Ok(RecordFormat::TSV),
            _ => Err(CorpusError::UnknownFormat {
                path: path.display().to_string(),
            }),
        }
    }
}

/// Wire form of one article record. `token_count` is always recomputed on
/// load, never trusted from the file.
#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    title: String,
    body: String,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    event_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topic: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    source: String,
}

/// A validated, immutable collection of articles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    /// Identifier for provenance records; the file stem when loaded from disk.
    pub id: String,
    /// SHA-256 of the source file, when loaded from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_hash: Option<String>,
    articles: Vec<Article>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Corpus {
    /// Validates and indexes a set of articles: ids unique, bodies non-empty,
    /// at most one article per label within an event.
    pub fn new(id: impl Into<String>, articles: Vec<Article>) -> Result<Corpus, CorpusError> {
        let mut index = BTreeMap::new();
        let mut event_labels: BTreeMap<(String, BiasLabel), ()> = BTreeMap::new();
        for (pos, article) in articles.iter().enumerate() {
            if article.body.is_empty() {
                return Err(CorpusError::EmptyBody {
                    id: article.id.clone(),
                });
            }
            if index.insert(article.id.clone(), pos).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: article.id.clone(),
                });
            }
            if let Some(event_id) = &article.event_id {
                let key = (event_id.clone(), article.ground_truth);
                if event_labels.insert(key, ()).is_some() {
                    return Err(CorpusError::DuplicateEventLabel {
                        event_id: event_id.clone(),
                        label: article.ground_truth,
                    });
                }
            }
        }
        Ok(Corpus {
            id: id.into(),
            content_hash: None,
            articles,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Article> {
        self.articles.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Article> {
        self.index.get(id).map(|&i| &self.articles[i])
    }

    pub fn require(&self, id: &str) -> Result<&Article, CorpusError> {
        self.get(id).ok_or_else(|| CorpusError::UnknownArticle {
            id: id.to_string(),
        })
    }

    /// Article counts per ground-truth label.
    pub fn label_histogram(&self) -> BTreeMap<BiasLabel, usize> {
        let mut hist = BTreeMap::new();
        for article in &self.articles {
            *hist.entry(article.ground_truth).or_insert(0) += 1;
        }
        hist
    }

    /// Serializes the corpus back to line-delimited records. Two saves of
    /// the same corpus produce identical bytes.
    pub fn save_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let mut out = Vec::new();
        for article in &self.articles {
            let raw = RawRecord {
                id: article.id.clone(),
                title: article.title.clone(),
                body: article.body.clone(),
                label: article.ground_truth.as_str().to_string(),
                event_id: article.event_id.clone(),
                topic: article.topic.clone(),
                source: article.source.clone(),
            };
            serde_json::to_writer(&mut out, &raw).expect("article serializes");
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn record_to_article(
    raw: RawRecord,
    path: &str,
    line: usize,
) -> Result<Article, CorpusError> {
    let label = BiasLabel::parse_ground_truth(&raw.label).ok_or_else(|| {
        CorpusError::UnknownLabel {
            path: path.to_string(),
            line,
            label: raw.label.clone(),
        }
    })?;
    if raw.body.is_empty() {
        return Err(CorpusError::MalformedRecord {
            path: path.to_string(),
            line,
            message: format!("article {:?} has an empty body", raw.id),
        });
    }
    let token_count = tokenize(&raw.body).len();
    Ok(Article {
        id: raw.id,
        title: raw.title,
        body: raw.body,
        ground_truth: label,
        event_id: raw.event_id.filter(|e| !e.is_empty()),
        topic: raw.topic.filter(|t| !t.is_empty()),
        source: raw.source,
        token_count,
    })
}

/// Loads a corpus file, validating every record. Errors carry the line
/// number of the offending record.
pub fn load_corpus(path: &Path, format: RecordFormat) -> Result<Corpus, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::Missing(path.display().to_string()));
    }
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let content_hash = hex::encode(Sha256::digest(&bytes));
    let path_str = path.display().to_string();
    let mut articles = Vec::new();
    match format {
        RecordFormat::Jsonl => {
            let reader = BufReader::new(&bytes[..]);
            for (i, line) in reader.lines().enumerate() {
                let line_no = i + 1;
                let line = line.map_err(|source| CorpusError::Io {
                    path: path_str.clone(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawRecord =
                    serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                        path: path_str.clone(),
                        line: line_no,
                        message: e.to_string(),
                    })?;
                articles.push(record_to_article(raw, &path_str, line_no)?);
            }
        }
        RecordFormat::Delimited(delimiter) => {
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .flexible(false)
                .from_reader(&bytes[..]);
            for (i, result) in reader.deserialize::<RawRecord>().enumerate() {
                // header is line 1
                let line_no = i + 2;
                let raw = result.map_err(|e| CorpusError::MalformedRecord {
                    path: path_str.clone(),
                    line: line_no,
                    message: e.to_string(),
                })?;
                articles.push(record_to_article(raw, &path_str, line_no)?);
            }
        }
    }
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    let mut corpus = Corpus::new(id, articles)?;
    corpus.content_hash = Some(content_hash);
    Ok(corpus)
}

/// Result of grouping a corpus into event triples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleSet {
    pub triples: Vec<EventTriple>,
    pub incomplete: Vec<IncompleteEvent>,
}

/// Groups articles by `event_id` and returns every complete
/// left/center/right triple. Events missing a label are reported in
/// `incomplete`, never silently dropped. Articles without an event id are
/// ignored.
pub fn build_triples(corpus: &Corpus) -> Result<TripleSet, CorpusError> {
    let mut events: BTreeMap<String, BTreeMap<BiasLabel, String>> = BTreeMap::new();
    for article in corpus.iter() {
        let Some(event_id) = &article.event_id else {
            continue;
        };
        let slot = events.entry(event_id.clone()).or_default();
        if slot
            .insert(article.ground_truth, article.id.clone())
            .is_some()
        {
            return Err(CorpusError::DuplicateEventLabel {
                event_id: event_id.clone(),
                label: article.ground_truth,
            });
        }
    }
    let mut triples = Vec::new();
    let mut incomplete = Vec::new();
    for (event_id, slots) in events {
        match (
            slots.get(&BiasLabel::Left),
            slots.get(&BiasLabel::Center),
            slots.get(&BiasLabel::Right),
        ) {
            (Some(left), Some(center), Some(right)) => triples.push(EventTriple {
                event_id,
                left_id: left.clone(),
                center_id: center.clone(),
                right_id: right.clone(),
            }),
            _ => incomplete.push(IncompleteEvent {
                event_id,
                present: slots.keys().copied().collect(),
            }),
        }
    }
    Ok(TripleSet { triples, incomplete })
}

/// Detokenized first `min(n, token_count)` tokens of the article body, plus
/// the actual token count used.
pub fn take_prefix(article: &Article, n: usize) -> (String, usize) {
    let tokens = tokenize(&article.body);
    let actual = n.min(tokens.len());
    (detokenize(&tokens[..actual]), actual)
}

/// Detokenized remainder of `text` after removing its first `n` tokens.
/// Empty when `n` reaches or exceeds the token count.
pub fn drop_prefix(text: &str, n: usize) -> String {
    let tokens = tokenize(text);
    if n >= tokens.len() {
        return String::new();
    }
    detokenize(&tokens[n..])
}

/// Writes a corpus as JSONL to an arbitrary writer; used by fixture
/// generators and the fine-tune module.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut w: W) -> std::io::Result<()> {
    for article in corpus.iter() {
        let raw = RawRecord {
            id: article.id.clone(),
            title: article.title.clone(),
            body: article.body.clone(),
            label: article.ground_truth.as_str().to_string(),
            event_id: article.event_id.clone(),
            topic: article.topic.clone(),
            source: article.source.clone(),
        };
        serde_json::to_writer(&mut w, &raw)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
