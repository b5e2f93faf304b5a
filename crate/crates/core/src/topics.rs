//! Latent topic construction: extracts per-article bias indicators with an
//! LLM prompt, clusters their embeddings, titles each cluster, and assigns
//! every article a topic (predefined when the corpus carries one, plurality
//! of indicator clusters otherwise).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{cluster_points, ClusterConfig, ClusterError};
use crate::corpus::{Article, Corpus};
use crate::gateway::{ChatRequest, EmbeddingVector, Gateway, GatewayError};
use crate::templates::{fill, PromptTemplates};

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("gateway: {0}")]
    Gateway(#[from] GatewayError),
    #[error("clustering: {0}")]
    Cluster(#[from] ClusterError),
    #[error("{got} embeddings for {expected} indicators")]
    EmbeddingCount { expected: usize, got: usize },
    #[error("article {0:?} has neither a predefined topic nor any indicators")]
    NoTopicSource(String),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
}

/// One short bias-indicator sentence extracted from an article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub id: String,
    pub article_id: String,
    pub text: String,
}

/// A group of indicators standing in for one latent topic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicCluster {
    pub cluster_id: usize,
    pub indicator_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<String>,
    pub article_ids: BTreeSet<String>,
}

impl TopicCluster {
    /// Stable topic key used in assignments and reports.
    pub fn topic_key(&self) -> String {
        latent_topic_key(self.cluster_id)
    }
}

pub fn latent_topic_key(cluster_id: usize) -> String {
    format!("latent-{cluster_id:03}")
}

/// Splits a model response into one indicator per line: bullets and list
/// numbering are stripped, surrounding quotes removed, empties dropped.
pub fn parse_indicator_lines(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut s = line.trim();
        for bullet in ["- ", "* ", "• "] {
            if let Some(rest) = s.strip_prefix(bullet) {
                s = rest.trim_start();
            }
        }
        // "1." / "12)" list numbering
        let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            let rest = &s[digits..];
            if let Some(rest) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
                s = rest.trim_start();
            }
        }
        let s = s
            .trim_matches(|c| c == '"' || c == '\u{201c}' || c == '\u{201d}')
            .trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
    }
    out
}

/// Prompts the model for bias indicators in one article. An output with no
/// parseable lines yields zero indicators (callers count and report these).
pub fn extract_indicators(
    article: &Article,
    gateway: &Gateway,
    templates: &PromptTemplates,
    model_id: &str,
) -> Result<Vec<Indicator>, TopicsError> {
    let prompt = fill(&templates.indicators, &[("article", &article.body)]);
    let request = ChatRequest::user_turn(model_id, prompt).with_max_output_tokens(1024);
    let completion = gateway.complete(&request)?;
    let lines = parse_indicator_lines(&completion.text);
    if lines.is_empty() {
        log::warn!("no indicators parsed for article {}", article.id);
    }
    Ok(lines
        .into_iter()
        .enumerate()
        .map(|(i, text)| Indicator {
            id: format!("{}#{i}", article.id),
            article_id: article.id.clone(),
            text,
        })
        .collect())
}

/// Clusters indicator embeddings into latent topics. `embeddings[i]` must
/// belong to `indicators[i]`.
pub fn cluster_indicators(
    indicators: &[Indicator],
    embeddings: &[EmbeddingVector],
    config: &ClusterConfig,
) -> Result<Vec<TopicCluster>, TopicsError> {
    if indicators.len() != embeddings.len() {
        return Err(TopicsError::EmbeddingCount {
            expected: indicators.len(),
            got: embeddings.len(),
        });
    }
    let points: Vec<Vec<f64>> = embeddings.iter().map(|e| e.values().to_vec()).collect();
    let partition = cluster_points(&points, config)?;
    let mut clusters = Vec::with_capacity(partition.len());
    for (cluster_id, member_indices) in partition.into_iter().enumerate() {
        if member_indices.is_empty() {
            return Err(TopicsError::EmptyCluster(cluster_id));
        }
        let indicator_ids: Vec<String> =
            member_indices.iter().map(|&i| indicators[i].id.clone()).collect();
        let article_ids: BTreeSet<String> = member_indices
            .iter()
            .map(|&i| indicators[i].article_id.clone())
            .collect();
        clusters.push(TopicCluster {
            cluster_id,
            indicator_ids,
            interpretation: None,
            article_ids,
        });
    }
    Ok(clusters)
}

/// Asks the model for a one-line title over the cluster's indicator texts
/// (the first `max_indicators` of them).
pub fn interpret_topic(
    cluster: &TopicCluster,
    indicators: &[Indicator],
    gateway: &Gateway,
    templates: &PromptTemplates,
    model_id: &str,
    max_indicators: usize,
) -> Result<String, TopicsError> {
    let by_id: BTreeMap<&str, &Indicator> =
        indicators.iter().map(|i| (i.id.as_str(), i)).collect();
    let texts: Vec<String> = cluster
        .indicator_ids
        .iter()
        .filter_map(|id| by_id.get(id.as_str()))
        .take(max_indicators.max(1))
        .map(|i| format!("- {}", i.text))
        .collect();
    let prompt = fill(&templates.topic_title, &[("indicators", &texts.join("\n"))]);
    let request = ChatRequest::user_turn(model_id, prompt).with_max_output_tokens(64);
    let completion = gateway.complete(&request)?;
    Ok(completion.text.lines().next().unwrap_or("").trim().to_string())
}

/// Topic assignment outcome: article → topic key, plus tie notes for
/// articles whose indicator plurality was ambiguous.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub topics: BTreeMap<String, String>,
    pub ties: Vec<String>,
}

/// Assigns every article a topic. Predefined topics pass through; articles
/// without one fall back to the latent cluster holding the plurality of
/// their indicators (ties resolve to the lowest cluster id and are flagged).
pub fn assign_topics(
    corpus: &Corpus,
    latent: Option<(&[Indicator], &[TopicCluster])>,
) -> Result<TopicAssignment, TopicsError> {
    let mut indicator_cluster: BTreeMap<&str, usize> = BTreeMap::new();
    if let Some((_, clusters)) = latent {
        for cluster in clusters {
            for id in &cluster.indicator_ids {
                indicator_cluster.insert(id, cluster.cluster_id);
            }
        }
    }
    let mut by_article: BTreeMap<&str, BTreeMap<usize, usize>> = BTreeMap::new();
    if let Some((indicators, _)) = latent {
        for indicator in indicators {
            if let Some(&cluster_id) = indicator_cluster.get(indicator.id.as_str()) {
                *by_article
                    .entry(indicator.article_id.as_str())
                    .or_default()
                    .entry(cluster_id)
                    .or_insert(0) += 1;
            }
        }
    }

    let mut assignment = TopicAssignment::default();
    for article in corpus.iter() {
        if let Some(topic) = &article.topic {
            assignment.topics.insert(article.id.clone(), topic.clone());
            continue;
        }
        let Some(counts) = by_article.get(article.id.as_str()) else {
            return Err(TopicsError::NoTopicSource(article.id.clone()));
        };
        let best_count = counts.values().copied().max().unwrap_or(0);
        let winners: Vec<usize> = counts
            .iter()
            .filter(|(_, &c)| c == best_count)
            .map(|(&id, _)| id)
            .collect();
        let chosen = *winners.iter().min().expect("non-empty counts");
        if winners.len() > 1 {
            assignment.ties.push(format!(
                "{}: tie between clusters {:?}, took {}",
                article.id, winners, chosen
            ));
        }
        assignment
            .topics
            .insert(article.id.clone(), latent_topic_key(chosen));
    }
    Ok(assignment)
}
