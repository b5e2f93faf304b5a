//! Left/Right vocabulary construction from labeled articles.
//!
//! Tokens are lowercased, stopword-filtered counts from left- and
//! right-labeled article bodies (center articles are ignored). A token
//! joins the left side when its left ratio (frequency over all left-side
//! tokens) exceeds `ratio_factor` times its right ratio; the left side keeps
//! the `left_top_k` most frequent such tokens, and the right side is filled
//! greedily by descending frequency until its frequency sum first reaches
//! the left side's sum.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BiasLabel, Corpus};
use crate::tokenize::tokenize;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("corpus has no {0}-labeled articles")]
    MissingSide(BiasLabel),
    #[error("{0} side has no countable tokens")]
    EmptySide(BiasLabel),
    #[error("vocabulary file {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty vocabulary")]
    EmptyVocabulary,
}

/// Frozen stopword list, shipped as a versioned data file.
#[derive(Debug, Clone)]
pub struct StopwordList {
    pub id: String,
    words: BTreeSet<String>,
}

const STOPWORDS_EN_V1: &str = include_str!("../data/stopwords_en_v1.txt");

impl StopwordList {
    /// The list embedded with the crate (`stopwords_en_v1`).
    pub fn builtin() -> StopwordList {
        StopwordList::parse("stopwords_en_v1", STOPWORDS_EN_V1)
    }

    pub fn parse(id: impl Into<String>, text: &str) -> StopwordList {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        StopwordList { id: id.into(), words }
    }

    pub fn load(path: &Path) -> Result<StopwordList, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("stopwords")
            .to_string();
        Ok(StopwordList::parse(id, &text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Per-side token frequencies plus side totals (the ratio denominators).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideFrequencies {
    pub left: BTreeMap<String, u64>,
    pub right: BTreeMap<String, u64>,
    pub left_total: u64,
    pub right_total: u64,
}

/// True for tokens that enter vocabulary statistics: lowercase happens
/// before this check; punctuation-only tokens and stopwords are excluded.
fn countable(token: &str, stopwords: &StopwordList) -> bool {
    token.chars().any(|c| c.is_alphanumeric()) && !stopwords.contains(token)
}

/// Counts lowercased, stopword-filtered token frequencies per side.
/// Center-labeled articles are ignored.
pub fn count_side_frequencies(
    corpus: &Corpus,
    stopwords: &StopwordList,
) -> Result<SideFrequencies, LexiconError> {
    for side in [BiasLabel::Left, BiasLabel::Right] {
        if !corpus.iter().any(|a| a.ground_truth == side) {
            return Err(LexiconError::MissingSide(side));
        }
    }
    let mut left = BTreeMap::new();
    let mut right = BTreeMap::new();
    let mut left_total = 0u64;
    let mut right_total = 0u64;
    for article in corpus.iter() {
        let (table, total) = match article.ground_truth {
            BiasLabel::Left => (&mut left, &mut left_total),
            BiasLabel::Right => (&mut right, &mut right_total),
            _ => continue,
        };
        for token in tokenize(&article.body) {
            let token = token.to_lowercase();
            if countable(&token, stopwords) {
                *table.entry(token).or_insert(0) += 1;
                *total += 1;
            }
        }
    }
    if left_total == 0 {
        return Err(LexiconError::EmptySide(BiasLabel::Left));
    }
    if right_total == 0 {
        return Err(LexiconError::EmptySide(BiasLabel::Right));
    }
    Ok(SideFrequencies { left, right, left_total, right_total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabularyConfig {
    /// A side claims a token when its ratio exceeds `ratio_factor` times the
    /// other side's ratio.
    pub ratio_factor: f64,
    /// How many of the most frequent left candidates to keep.
    pub left_top_k: usize,
}

impl Default for VocabularyConfig {
    fn default() -> Self {
        VocabularyConfig { ratio_factor: 2.0, left_top_k: 2000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyProvenance {
    pub corpus_id: String,
    pub stopword_list_id: String,
}

/// Conditions worth surfacing from a build. Never errors: a small corpus
/// legitimately yields fewer candidates than requested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyFlags {
    /// Fewer left candidates than `left_top_k`; all of them were kept.
    pub left_underfull: bool,
    /// Right candidates ran out before reaching the left frequency sum.
    pub right_sum_shortfall: bool,
    /// The final right token pushed the sum past the left sum (allowed
    /// one-token overshoot).
    pub right_sum_overshoot: bool,
}

/// Paired left/right token-frequency tables with the config and provenance
/// that produced them. Sides are disjoint by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub left: BTreeMap<String, u64>,
    pub right: BTreeMap<String, u64>,
    pub config: VocabularyConfig,
    pub provenance: VocabularyProvenance,
    pub flags: VocabularyFlags,
}

impl Vocabulary {
    pub fn left_sum(&self) -> u64 {
        self.left.values().sum()
    }

    pub fn right_sum(&self) -> u64 {
        self.right.values().sum()
    }

    pub fn is_left(&self, token: &str) -> bool {
        self.left.contains_key(token)
    }

    pub fn is_right(&self, token: &str) -> bool {
        self.right.contains_key(token)
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }
}

/// Tokens ordered by frequency (descending), ties broken lexicographically.
fn by_frequency_desc(table: &BTreeMap<String, u64>) -> Vec<(&String, u64)> {
    let mut items: Vec<(&String, u64)> = table.iter().map(|(t, &f)| (t, f)).collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    items
}

/// Tokens passing the ratio rule for each side, before top-k / sum-matching
/// truncation. Raising `ratio_factor` can only shrink these sets.
pub fn candidate_sets(
    freqs: &SideFrequencies,
    ratio_factor: f64,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let left_total = freqs.left_total as f64;
    let right_total = freqs.right_total as f64;
    let left = freqs
        .left
        .iter()
        .filter(|(token, &freq)| {
            let left_ratio = freq as f64 / left_total;
            let right_ratio =
                freqs.right.get(*token).copied().unwrap_or(0) as f64 / right_total;
            left_ratio > ratio_factor * right_ratio
        })
        .map(|(t, _)| t.clone())
        .collect();
    let right = freqs
        .right
        .iter()
        .filter(|(token, &freq)| {
            let right_ratio = freq as f64 / right_total;
            let left_ratio = freqs.left.get(*token).copied().unwrap_or(0) as f64 / left_total;
            right_ratio > ratio_factor * left_ratio
        })
        .map(|(t, _)| t.clone())
        .collect();
    (left, right)
}

/// Builds the vocabulary from side frequencies. See the module docs for the
/// selection rule.
pub fn build_vocabulary(
    freqs: &SideFrequencies,
    config: VocabularyConfig,
    provenance: VocabularyProvenance,
) -> Result<Vocabulary, LexiconError> {
    if freqs.left_total == 0 {
        return Err(LexiconError::EmptySide(BiasLabel::Left));
    }
    if freqs.right_total == 0 {
        return Err(LexiconError::EmptySide(BiasLabel::Right));
    }
    let left_total = freqs.left_total as f64;
    let right_total = freqs.right_total as f64;
    let mut flags = VocabularyFlags::default();

    let left_candidates: BTreeMap<String, u64> = freqs
        .left
        .iter()
        .filter(|(token, &freq)| {
            let left_ratio = freq as f64 / left_total;
            let right_ratio =
                freqs.right.get(*token).copied().unwrap_or(0) as f64 / right_total;
            left_ratio > config.ratio_factor * right_ratio
        })
        .map(|(t, &f)| (t.clone(), f))
        .collect();
    if left_candidates.len() < config.left_top_k {
        flags.left_underfull = true;
    }
    let left: BTreeMap<String, u64> = by_frequency_desc(&left_candidates)
        .into_iter()
        .take(config.left_top_k)
        .map(|(t, f)| (t.clone(), f))
        .collect();
    let left_sum: u64 = left.values().sum();

    let right_candidates: BTreeMap<String, u64> = freqs
        .right
        .iter()
        .filter(|(token, &freq)| {
            let right_ratio = freq as f64 / right_total;
            let left_ratio = freqs.left.get(*token).copied().unwrap_or(0) as f64 / left_total;
            right_ratio > config.ratio_factor * left_ratio
        })
        .map(|(t, &f)| (t.clone(), f))
        .collect();
    let mut right = BTreeMap::new();
    let mut right_sum = 0u64;
    for (token, freq) in by_frequency_desc(&right_candidates) {
        if right_sum >= left_sum {
            break;
        }
        right.insert(token.clone(), freq);
        right_sum += freq;
    }
    if right_sum < left_sum {
        flags.right_sum_shortfall = true;
    } else if right_sum > left_sum {
        flags.right_sum_overshoot = true;
    }

    debug_assert!(left.keys().all(|t| !right.contains_key(t)));
    Ok(Vocabulary { left, right, config, provenance, flags })
}

const FILE_HEADER: &str = "# bias-audit vocabulary v1";

impl Vocabulary {
    /// Writes the two-column per-side text format. Rebuilds of the same
    /// vocabulary produce identical bytes.
    pub fn save(&self, path: &Path) -> Result<(), LexiconError> {
        let mut out = String::new();
        out.push_str(FILE_HEADER);
        out.push('\n');
        out.push_str(&format!("# corpus_id={}\n", self.provenance.corpus_id));
        out.push_str(&format!("# stopwords={}\n", self.provenance.stopword_list_id));
        out.push_str(&format!("# ratio_factor={}\n", self.config.ratio_factor));
        out.push_str(&format!("# left_top_k={}\n", self.config.left_top_k));
        let mut flag_names = Vec::new();
        if self.flags.left_underfull {
            flag_names.push("left_underfull");
        }
        if self.flags.right_sum_shortfall {
            flag_names.push("right_sum_shortfall");
        }
        if self.flags.right_sum_overshoot {
            flag_names.push("right_sum_overshoot");
        }
        out.push_str(&format!("# flags={}\n", flag_names.join(",")));
        out.push_str("[left]\n");
        for (token, freq) in by_frequency_desc(&self.left) {
            out.push_str(&format!("{token}\t{freq}\n"));
        }
        out.push_str("[right]\n");
        for (token, freq) in by_frequency_desc(&self.right) {
            out.push_str(&format!("{token}\t{freq}\n"));
        }
        fs::write(path, out).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Vocabulary, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let path_str = path.display().to_string();
        let mut vocabulary = Vocabulary {
            left: BTreeMap::new(),
            right: BTreeMap::new(),
            config: VocabularyConfig::default(),
            provenance: VocabularyProvenance::default(),
            flags: VocabularyFlags::default(),
        };
        let mut section: Option<BiasLabel> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((key, value)) = rest.split_once('=') {
                    match key {
                        "corpus_id" => vocabulary.provenance.corpus_id = value.to_string(),
                        "stopwords" => vocabulary.provenance.stopword_list_id = value.to_string(),
                        "ratio_factor" => {
                            vocabulary.config.ratio_factor =
                                value.parse().map_err(|e| LexiconError::Parse {
                                    path: path_str.clone(),
                                    line: line_no,
                                    message: format!("bad ratio_factor: {e}"),
                                })?
                        }
                        "left_top_k" => {
                            vocabulary.config.left_top_k =
                                value.parse().map_err(|e| LexiconError::Parse {
                                    path: path_str.clone(),
                                    line: line_no,
                                    message: format!("bad left_top_k: {e}"),
                                })?
                        }
                        "flags" => {
                            for flag in value.split(',').filter(|f| !f.is_empty()) {
                                match flag {
                                    "left_underfull" => vocabulary.flags.left_underfull = true,
                                    "right_sum_shortfall" => {
                                        vocabulary.flags.right_sum_shortfall = true
                                    }
                                    "right_sum_overshoot" => {
                                        vocabulary.flags.right_sum_overshoot = true
                                    }
                                    other => {
                                        return Err(LexiconError::Parse {
                                            path: path_str.clone(),
                                            line: line_no,
                                            message: format!("unknown flag {other:?}"),
                                        })
                                    }
                                }
                            }
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            match line {
                "[left]" => {
                    section = Some(BiasLabel::Left);
                    continue;
                }
                "[right]" => {
                    section = Some(BiasLabel::Right);
                    continue;
                }
                _ => {}
            }
            let (token, freq) = line.split_once('\t').ok_or_else(|| LexiconError::Parse {
                path: path_str.clone(),
                line: line_no,
                message: "expected <token><TAB><frequency>".into(),
            })?;
            let freq: u64 = freq.parse().map_err(|e| LexiconError::Parse {
                path: path_str.clone(),
                line: line_no,
                message: format!("bad frequency: {e}"),
            })?;
            match section {
                Some(BiasLabel::Left) => {
                    vocabulary.left.insert(token.to_string(), freq);
                }
                Some(BiasLabel::Right) => {
                    vocabulary.right.insert(token.to_string(), freq);
                }
                _ => {
                    return Err(LexiconError::Parse {
                        path: path_str.clone(),
                        line: line_no,
                        message: "token line before any [left]/[right] section".into(),
                    })
                }
            }
        }
        if vocabulary.is_empty() {
            return Err(LexiconError::EmptyVocabulary);
        }
        Ok(vocabulary)
    }
}
