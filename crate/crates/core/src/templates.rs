//! Prompt templates.
//!
//! Every prompt the toolkit sends is rendered from an editable text file
//! with `{{name}}` placeholder markers. The built-in defaults ship in the
//! crate's `templates/` directory and are embedded at compile time;
//! [`PromptTemplates::load_dir`] overlays per-file overrides from a
//! directory, falling back to the defaults for files that are absent.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::BiasLabel;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("failed to read template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("few-shot pool {path}:{line}: {message}")]
    Pool {
        path: String,
        line: usize,
        message: String,
    },
}

/// One few-shot instance: a headline with its ground-truth label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotExample {
    pub headline: String,
    pub label: BiasLabel,
}

#[derive(Debug, Clone)]
pub struct PromptTemplates {
    pub prediction: String,
    pub ble: String,
    pub ds: String,
    pub continuation: String,
    pub classifier_zero_shot: String,
    pub classifier_few_shot: String,
    pub indicators: String,
    pub topic_title: String,
    pub fewshot_pool: Vec<FewShotExample>,
}

const PREDICTION: &str = include_str!("../templates/prediction.txt");
const BLE: &str = include_str!("../templates/ble.txt");
const DS: &str = include_str!("../templates/ds.txt");
const CONTINUATION: &str = include_str!("../templates/continuation.txt");
const CLASSIFIER_ZERO_SHOT: &str = include_str!("../templates/classifier_zero_shot.txt");
const CLASSIFIER_FEW_SHOT: &str = include_str!("../templates/classifier_few_shot.txt");
const INDICATORS: &str = include_str!("../templates/indicators.txt");
const TOPIC_TITLE: &str = include_str!("../templates/topic_title.txt");
const FEWSHOT_POOL: &str = include_str!("../templates/fewshot_pool.tsv");

fn parse_pool(text: &str, path: &str) -> Result<Vec<FewShotExample>, TemplateError> {
    let mut pool = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (headline, label) = line.rsplit_once('\t').ok_or_else(|| TemplateError::Pool {
            path: path.to_string(),
            line: i + 1,
            message: "expected <headline><TAB><label>".into(),
        })?;
        let label = BiasLabel::parse_ground_truth(label).ok_or_else(|| TemplateError::Pool {
            path: path.to_string(),
            line: i + 1,
            message: format!("unknown label {label:?}"),
        })?;
        pool.push(FewShotExample { headline: headline.trim_end().to_string(), label });
    }
    Ok(pool)
}

impl PromptTemplates {
    /// The compiled-in defaults.
    pub fn builtin() -> PromptTemplates {
        PromptTemplates {
            prediction: PREDICTION.to_string(),
            ble: BLE.to_string(),
            ds: DS.to_string(),
            continuation: CONTINUATION.to_string(),
            classifier_zero_shot: CLASSIFIER_ZERO_SHOT.to_string(),
            classifier_few_shot: CLASSIFIER_FEW_SHOT.to_string(),
            indicators: INDICATORS.to_string(),
            topic_title: TOPIC_TITLE.to_string(),
            fewshot_pool: parse_pool(FEWSHOT_POOL, "builtin fewshot_pool.tsv")
                .expect("builtin pool parses"),
        }
    }

    /// Defaults overlaid with any files present in `dir`. Recognized names:
    /// `prediction.txt`, `ble.txt`, `ds.txt`, `continuation.txt`,
    /// `classifier_zero_shot.txt`, `classifier_few_shot.txt`,
    /// `indicators.txt`, `topic_title.txt`, `fewshot_pool.tsv`.
    pub fn load_dir(dir: &Path) -> Result<PromptTemplates, TemplateError> {
        let mut templates = PromptTemplates::builtin();
        let read = |name: &str| -> Result<Option<String>, TemplateError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(None);
            }
            fs::read_to_string(&path)
                .map(Some)
                .map_err(|source| TemplateError::Io { path: path.display().to_string(), source })
        };
        if let Some(t) = read("prediction.txt")? {
            templates.prediction = t;
        }
        if let Some(t) = read("ble.txt")? {
            templates.ble = t;
        }
        if let Some(t) = read("ds.txt")? {
            templates.ds = t;
        }
        if let Some(t) = read("continuation.txt")? {
            templates.continuation = t;
        }
        if let Some(t) = read("classifier_zero_shot.txt")? {
            templates.classifier_zero_shot = t;
        }
        if let Some(t) = read("classifier_few_shot.txt")? {
            templates.classifier_few_shot = t;
        }
        if let Some(t) = read("indicators.txt")? {
            templates.indicators = t;
        }
        if let Some(t) = read("topic_title.txt")? {
            templates.topic_title = t;
        }
        let pool_path = dir.join("fewshot_pool.tsv");
        if pool_path.exists() {
            let text = fs::read_to_string(&pool_path).map_err(|source| TemplateError::Io {
                path: pool_path.display().to_string(),
                source,
            })?;
            templates.fewshot_pool = parse_pool(&text, &pool_path.display().to_string())?;
        }
        Ok(templates)
    }

    /// SHA-256 of the prediction template, recorded in fine-tune manifests.
    pub fn prediction_hash(&self) -> String {
        hex::encode(Sha256::digest(self.prediction.as_bytes()))
    }
}

/// Replaces every `{{name}}` marker with its value.
pub fn fill(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in substitutions {
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    out
}
