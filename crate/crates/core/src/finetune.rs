//! Fine-tuning dataset preparation with controlled label mixes, the
//! right-shift relabeling scheme, and provider job submission.
//!
//! Each training example pairs the prediction prompt (user turn) with the
//! lowercase ground-truth label (assistant turn), in the common chat
//! fine-tuning line-delimited format.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audit::{render_prompt, AuditError, PromptStrategy};
use crate::corpus::{Article, BiasLabel, Corpus, CorpusError};
use crate::gateway::{GatewayError, HttpFineTuneProvider};
use crate::templates::PromptTemplates;

pub use crate::gateway::FineTuneJobRef;

#[derive(Debug, Error)]
pub enum FineTuneError {
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("prompt: {0}")]
    Prompt(#[from] AuditError),
    #[error("provider: {0}")]
    Provider(#[from] GatewayError),
    #[error("invalid mix: {0}")]
    BadMix(String),
    #[error("not enough {label} articles: requested {requested}, corpus holds {available}")]
    InsufficientArticles {
        label: BiasLabel,
        requested: usize,
        available: usize,
    },
    #[error("io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Label proportions of a fine-tuning set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MixKind {
    /// All left-labeled articles.
    L,
    /// Half left, half center (left gets the odd example).
    LC,
    /// Equal thirds, remainder going to left then center.
    LCR,
    /// Explicit per-label counts.
    Custom(BTreeMap<BiasLabel, usize>),
}

impl MixKind {
    pub fn parse(s: &str) -> Option<MixKind> {
        match s.to_ascii_lowercase().as_str() {
            "l" | "l-ft" => Some(MixKind::L),
            "lc" | "lc-ft" => Some(MixKind::LC),
            "lcr" | "lcr-ft" => Some(MixKind::LCR),
            _ => None,
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            MixKind::L => "L-FT".into(),
            MixKind::LC => "LC-FT".into(),
            MixKind::LCR => "LCR-FT".into(),
            MixKind::Custom(counts) => {
                let parts: Vec<String> =
                    counts.iter().map(|(l, c)| format!("{}={c}", l.as_str())).collect();
                format!("custom({})", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FineTuneMix {
    pub kind: MixKind,
    pub total: usize,
    pub seed: u64,
}

impl FineTuneMix {
    pub fn new(kind: MixKind, total: usize, seed: u64) -> FineTuneMix {
        FineTuneMix { kind, total, seed }
    }

    /// Per-label example counts; they always sum to `total`.
    pub fn counts(&self) -> Result<BTreeMap<BiasLabel, usize>, FineTuneError> {
        if self.total == 0 {
            return Err(FineTuneError::BadMix("total must be positive".into()));
        }
        let counts = match &self.kind {
            MixKind::L => BTreeMap::from([(BiasLabel::Left, self.total)]),
            MixKind::LC => {
                let center = self.total / 2;
                BTreeMap::from([
                    (BiasLabel::Left, self.total - center),
                    (BiasLabel::Center, center),
                ])
            }
            MixKind::LCR => {
                let base = self.total / 3;
                let remainder = self.total % 3;
                BTreeMap::from([
                    (BiasLabel::Left, base + usize::from(remainder >= 1)),
                    (BiasLabel::Center, base + usize::from(remainder >= 2)),
                    (BiasLabel::Right, base),
                ])
            }
            MixKind::Custom(counts) => {
                for label in counts.keys() {
                    if !label.is_ground_truth() {
                        return Err(FineTuneError::BadMix(format!(
                            "{label} is not a ground-truth label"
                        )));
                    }
                }
                let sum: usize = counts.values().sum();
                if sum != self.total {
                    return Err(FineTuneError::BadMix(format!(
                        "counts sum to {sum}, total is {}",
                        self.total
                    )));
                }
                counts.clone()
            }
        };
        Ok(counts)
    }
}

/// Provider hyperparameters; the defaults are epochs 3, batch size 32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub epochs: u32,
    pub batch_size: u32,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters { epochs: 3, batch_size: 32 }
    }
}

/// What went into a training file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FineTuneManifest {
    pub corpus_id: String,
    pub mix: String,
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
    pub seed: u64,
    pub article_ids: Vec<String>,
    pub prompt_template_sha256: String,
    pub created_unix: u64,
}

fn seeded_sample<'a>(
    articles: &[&'a Article],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a Article> {
    let indices = rand::seq::index::sample(rng, articles.len(), count);
    indices.into_iter().map(|i| articles[i]).collect()
}

/// Builds the chat-format training file plus its manifest. Identical
/// (corpus, mix, seed) inputs produce a byte-identical file.
pub fn build_ft_dataset(
    corpus: &Corpus,
    mix: &FineTuneMix,
    templates: &PromptTemplates,
    out_path: &Path,
) -> Result<FineTuneManifest, FineTuneError> {
    let counts = mix.counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix.seed);
    let strategy = PromptStrategy::vanilla();
    let mut lines = String::new();
    let mut article_ids = Vec::with_capacity(mix.total);
    let mut emitted: BTreeMap<String, usize> = BTreeMap::new();
    for label in [BiasLabel::Left, BiasLabel::Center, BiasLabel::Right] {
        let Some(&requested) = counts.get(&label) else {
            continue;
        };
        let available: Vec<&Article> =
            corpus.iter().filter(|a| a.ground_truth == label).collect();
        if available.len() < requested {
            return Err(FineTuneError::InsufficientArticles {
                label,
                requested,
                available: available.len(),
            });
        }
        for article in seeded_sample(&available, requested, &mut rng) {
            let prompt = render_prompt(&strategy, article, templates)?;
            let line = serde_json::json!({
                "messages": [
                    { "role": "user", "content": prompt },
                    { "role": "assistant", "content": article.ground_truth.as_str() },
                ]
            });
            lines.push_str(&line.to_string());
            lines.push('\n');
            article_ids.push(article.id.clone());
            *emitted.entry(article.ground_truth.as_str().to_string()).or_insert(0) += 1;
        }
    }
    fs::write(out_path, &lines).map_err(|source| FineTuneError::Io {
        path: out_path.display().to_string(),
        source,
    })?;
    let manifest = FineTuneManifest {
        corpus_id: corpus.id.clone(),
        mix: mix.kind.descriptor(),
        counts: emitted,
        total: mix.total,
        seed: mix.seed,
        article_ids,
        prompt_template_sha256: templates.prediction_hash(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let manifest_path = out_path.with_extension("manifest.json");
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, body).map_err(|source| FineTuneError::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;
    Ok(manifest)
}

/// The right-leaning relabel scheme: center articles become left, right
/// articles become center, and original left articles are dropped (they
/// have no target under the shift).
pub fn relabel_right_shift(corpus: &Corpus) -> Corpus {
    let articles: Vec<Article> = corpus
        .iter()
        .filter(|a| a.ground_truth != BiasLabel::Left)
        .map(|a| {
            let mut shifted = a.clone();
            shifted.ground_truth = match a.ground_truth {
                BiasLabel::Center => BiasLabel::Left,
                BiasLabel::Right => BiasLabel::Center,
                other => other,
            };
            shifted
        })
        .collect();
    Corpus::new(format!("{}+right-shift", corpus.id), articles)
        .expect("relabeling preserves validity")
}

/// Anything that can accept a training file and start a fine-tuning job.
pub trait FineTuneSubmitter {
    fn submit(
        &self,
        training_file: &[u8],
        filename: &str,
        model_id: &str,
        hyperparameters: Hyperparameters,
    ) -> Result<FineTuneJobRef, FineTuneError>;

    fn status(&self, job_id: &str) -> Result<String, FineTuneError>;
}

impl FineTuneSubmitter for HttpFineTuneProvider {
    fn submit(
        &self,
        training_file: &[u8],
        filename: &str,
        model_id: &str,
        hyperparameters: Hyperparameters,
    ) -> Result<FineTuneJobRef, FineTuneError> {
        let file_id = self.upload_training_file(training_file, filename)?;
        Ok(self.create_job(
            &file_id,
            model_id,
            hyperparameters.epochs,
            hyperparameters.batch_size,
        )?)
    }

    fn status(&self, job_id: &str) -> Result<String, FineTuneError> {
        Ok(self.job_status(job_id)?)
    }
}

/// Offline submitter returning a fake job id derived from the file digest.
#[derive(Debug, Default)]
pub struct MockFineTuneSubmitter;

impl FineTuneSubmitter for MockFineTuneSubmitter {
    fn submit(
        &self,
        training_file: &[u8],
        _filename: &str,
        model_id: &str,
        _hyperparameters: Hyperparameters,
    ) -> Result<FineTuneJobRef, FineTuneError> {
        let mut hasher = Sha256::new();
        hasher.update(model_id.as_bytes());
        hasher.update(training_file);
        let digest = hex::encode(hasher.finalize());
        Ok(FineTuneJobRef {
            job_id: format!("ftjob-mock-{}", &digest[..12]),
            training_file_id: format!("file-mock-{}", &digest[12..24]),
            status: "succeeded".into(),
        })
    }

    fn status(&self, _job_id: &str) -> Result<String, FineTuneError> {
        Ok("succeeded".into())
    }
}

/// Submits a training file from disk with the given defaults.
pub fn submit_ft_job(
    submitter: &dyn FineTuneSubmitter,
    training_path: &Path,
    model_id: &str,
    hyperparameters: Hyperparameters,
) -> Result<FineTuneJobRef, FineTuneError> {
    let bytes = fs::read(training_path).map_err(|source| FineTuneError::Io {
        path: training_path.display().to_string(),
        source,
    })?;
    let filename = training_path
        .file_name()
        .and_then(|f| f.to_str())
        .unwrap_or("training.jsonl");
    submitter.submit(&bytes, filename, model_id, hyperparameters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled_corpus(left: usize, center: usize, right: usize) -> Corpus {
        let mut articles = Vec::new();
        for (label, count, tag) in [
            (BiasLabel::Left, left, "l"),
            (BiasLabel::Center, center, "c"),
            (BiasLabel::Right, right, "r"),
        ] {
            for i in 0..count {
                articles.push(Article::new(
                    format!("{tag}{i:03}"),
                    format!("Synthetic {tag} article number {i} about the budget."),
                    label,
                ));
            }
        }
        Corpus::new("ft-fixture", articles).unwrap()
    }

    #[test]
    fn mix_counts() {
        assert_eq!(
            FineTuneMix::new(MixKind::L, 300, 0).counts().unwrap(),
            BTreeMap::from([(BiasLabel::Left, 300)])
        );
        assert_eq!(
            FineTuneMix::new(MixKind::LC, 300, 0).counts().unwrap(),
            BTreeMap::from([(BiasLabel::Left, 150), (BiasLabel::Center, 150)])
        );
        assert_eq!(
            FineTuneMix::new(MixKind::LCR, 300, 0).counts().unwrap(),
            BTreeMap::from([
                (BiasLabel::Left, 100),
                (BiasLabel::Center, 100),
                (BiasLabel::Right, 100)
            ])
        );
        // remainder goes left, then center
        assert_eq!(
            FineTuneMix::new(MixKind::LCR, 301, 0).counts().unwrap(),
            BTreeMap::from([
                (BiasLabel::Left, 101),
                (BiasLabel::Center, 100),
                (BiasLabel::Right, 100)
            ])
        );
        assert!(FineTuneMix::new(MixKind::L, 0, 0).counts().is_err());
    }

    #[test]
    fn l_mix_emits_only_left_examples() {
        let corpus = labeled_corpus(320, 5, 5);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("train.jsonl");
        let templates = PromptTemplates::builtin();
        let mix = FineTuneMix::new(MixKind::L, 300, 7);
        let manifest = build_ft_dataset(&corpus, &mix, &templates, &out).unwrap();
        assert_eq!(manifest.counts, BTreeMap::from([("left".to_string(), 300)]));
        let text = fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 300);
        for line in text.lines() {
            let value: serde_json::Value = serde_json::from_str(line).unwrap();
            let messages = value["messages"].as_array().unwrap();
            assert_eq!(messages.len(), 2);
            assert_eq!(messages[0]["role"], "user");
            assert!(messages[0]["content"]
                .as_str()
                .unwrap()
                .starts_with("Given the article provided below:"));
            assert_eq!(messages[1]["role"], "assistant");
            assert_eq!(messages[1]["content"], "left");
        }
    }

    #[test]
    fn lcr_mix_is_exactly_balanced() {
        let corpus = labeled_corpus(120, 120, 120);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("train.jsonl");
        let templates = PromptTemplates::builtin();
        let mix = FineTuneMix::new(MixKind::LCR, 300, 7);
        let manifest = build_ft_dataset(&corpus, &mix, &templates, &out).unwrap();
        assert_eq!(
            manifest.counts,
            BTreeMap::from([
                ("left".to_string(), 100),
                ("center".to_string(), 100),
                ("right".to_string(), 100)
            ])
        );
        assert_eq!(manifest.article_ids.len(), 300);
    }

    #[test]
    fn insufficient_articles_error() {
        let corpus = labeled_corpus(10, 10, 10);
        let dir = tempfile::tempdir().unwrap();
        let templates = PromptTemplates::builtin();
        let mix = FineTuneMix::new(MixKind::L, 300, 7);
        let err = build_ft_dataset(&corpus, &mix, &templates, &dir.path().join("t.jsonl"))
            .unwrap_err();
        assert!(matches!(err, FineTuneError::InsufficientArticles { .. }));
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let corpus = labeled_corpus(40, 40, 40);
        let dir = tempfile::tempdir().unwrap();
        let templates = PromptTemplates::builtin();
        let mix = FineTuneMix::new(MixKind::LCR, 30, 99);
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        build_ft_dataset(&corpus, &mix, &templates, &a).unwrap();
        build_ft_dataset(&corpus, &mix, &templates, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

        let other_seed = FineTuneMix::new(MixKind::LCR, 30, 100);
        let c = dir.path().join("c.jsonl");
        build_ft_dataset(&corpus, &other_seed, &templates, &c).unwrap();
        assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    }

    #[test]
    fn right_shift_drops_left_and_shifts_rest() {
        let corpus = labeled_corpus(10, 10, 10);
        let shifted = relabel_right_shift(&corpus);
        assert_eq!(shifted.len(), 20);
        let hist = shifted.label_histogram();
        assert_eq!(hist.get(&BiasLabel::Left), Some(&10), "former center articles");
        assert_eq!(hist.get(&BiasLabel::Center), Some(&10), "former right articles");
        assert_eq!(hist.get(&BiasLabel::Right), None, "right never appears");
        for article in shifted.iter() {
            assert!(!article.id.starts_with('l'), "original left articles are dropped");
        }
        assert!(shifted.id.ends_with("+right-shift"));
    }

    #[test]
    fn right_shift_on_all_right_corpus() {
        let corpus = labeled_corpus(0, 0, 5);
        let shifted = relabel_right_shift(&corpus);
        assert_eq!(shifted.len(), 5);
        assert!(shifted.iter().all(|a| a.ground_truth == BiasLabel::Center));
    }

    #[test]
    fn mock_submitter_is_deterministic() {
        let submitter = MockFineTuneSubmitter;
        let a = submitter
            .submit(b"{\"messages\":[]}\n", "t.jsonl", "gpt-x", Hyperparameters::default())
            .unwrap();
        let b = submitter
            .submit(b"{\"messages\":[]}\n", "t.jsonl", "gpt-x", Hyperparameters::default())
            .unwrap();
        assert_eq!(a, b);
        assert!(a.job_id.starts_with("ftjob-mock-"));
        assert_eq!(submitter.status(&a.job_id).unwrap(), "succeeded");
    }

    #[test]
    fn default_hyperparameters_match_reference() {
        let h = Hyperparameters::default();
        assert_eq!(h.epochs, 3);
        assert_eq!(h.batch_size, 32);
    }

    #[test]
    fn http_submitter_requires_credentials_before_upload() {
        use crate::gateway::HttpProviderConfig;
        let config = HttpProviderConfig::open_schema(
            "p",
            "https://api.example.invalid/v1",
            "BIAS_AUDIT_UNSET_CREDENTIAL",
        );
        assert!(HttpFineTuneProvider::new(config).is_err());
    }
}
