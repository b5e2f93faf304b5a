//! Published reference values for replication runs.
//!
//! These are the numbers a live replication (real provider, original
//! datasets) is compared against, side by side, without pass/fail gating:
//! they are not desk-reproducible because they depend on commercial model
//! snapshots and the original corpora.

use serde::Serialize;

/// One reported row of the strategy/model comparison tables. Metric values
/// are percentages (0-100); indices are signed fractions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReferenceMetricsRow {
    pub key: &'static str,
    pub bti1: f64,
    pub bti2: f64,
    pub precision: f64,
    pub recall: f64,
    pub biased_f1: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

/// Strategy rows (vanilla + prompt debiasing + fine-tuning mixes + the
/// BERT baseline) and cross-model rows.
pub const REFERENCE_METRICS: &[ReferenceMetricsRow] = &[
    ReferenceMetricsRow { key: "strategies:vanilla", bti1: 0.06, bti2: 0.01, precision: 89.0, recall: 15.4, biased_f1: 26.2, micro_f1: 42.3, macro_f1: 39.4 },
    ReferenceMetricsRow { key: "strategies:ble", bti1: 0.03, bti2: 0.00, precision: 89.3, recall: 9.4, biased_f1: 17.0, micro_f1: 38.8, macro_f1: 34.3 },
    ReferenceMetricsRow { key: "strategies:fewshot3", bti1: 0.06, bti2: 0.00, precision: 93.1, recall: 11.3, biased_f1: 20.2, micro_f1: 40.3, macro_f1: 36.3 },
    ReferenceMetricsRow { key: "strategies:fewshot6", bti1: 0.04, bti2: 0.00, precision: 92.6, recall: 9.7, biased_f1: 17.6, micro_f1: 39.3, macro_f1: 34.8 },
    ReferenceMetricsRow { key: "strategies:fewshot9", bti1: 0.04, bti2: 0.00, precision: 96.9, recall: 7.7, biased_f1: 14.3, micro_f1: 38.3, macro_f1: 33.1 },
    ReferenceMetricsRow { key: "strategies:ds", bti1: 0.01, bti2: 0.00, precision: 91.9, recall: 6.7, biased_f1: 12.4, micro_f1: 37.4, macro_f1: 31.8 },
    ReferenceMetricsRow { key: "strategies:l-ft", bti1: 0.00, bti2: -1.00, precision: 66.7, recall: 100.0, biased_f1: 80.0, micro_f1: 66.7, macro_f1: 40.0 },
    ReferenceMetricsRow { key: "strategies:lc-ft", bti1: -0.17, bti2: -0.41, precision: 67.8, recall: 43.0, biased_f1: 52.6, micro_f1: 48.4, macro_f1: 48.0 },
    ReferenceMetricsRow { key: "strategies:lcr-ft", bti1: -0.00, bti2: -0.68, precision: 68.6, recall: 89.9, biased_f1: 77.8, micro_f1: 65.8, macro_f1: 51.7 },
    ReferenceMetricsRow { key: "strategies:bert", bti1: -0.00, bti2: 0.22, precision: 66.7, recall: 99.9, biased_f1: 79.9, micro_f1: 66.6, macro_f1: 39.9 },
    ReferenceMetricsRow { key: "models:llama2", bti1: 0.04, bti2: 0.25, precision: 72.7, recall: 47.1, biased_f1: 57.2, micro_f1: 52.7, macro_f1: 52.2 },
    ReferenceMetricsRow { key: "models:vicuna", bti1: -0.01, bti2: 0.07, precision: 68.0, recall: 19.1, biased_f1: 29.8, micro_f1: 39.8, macro_f1: 38.5 },
    ReferenceMetricsRow { key: "models:mistral", bti1: 0.00, bti2: -0.57, precision: 69.9, recall: 84.2, biased_f1: 76.4, micro_f1: 65.3, macro_f1: 55.4 },
    ReferenceMetricsRow { key: "models:gpt-3.5", bti1: 0.06, bti2: 0.01, precision: 89.0, recall: 15.4, biased_f1: 26.2, micro_f1: 42.3, macro_f1: 39.4 },
    ReferenceMetricsRow { key: "models:gpt-4", bti1: 0.06, bti2: -0.04, precision: 85.1, recall: 30.3, biased_f1: 44.7, micro_f1: 50.0, macro_f1: 49.5 },
];

/// One reported relative left/right split of the continuation probe.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReferenceSplitRow {
    pub key: &'static str,
    pub n: usize,
    pub pct_left: f64,
    pub pct_right: f64,
}

pub const REFERENCE_SPLITS: &[ReferenceSplitRow] = &[
    ReferenceSplitRow { key: "continuation:embedding", n: 20, pct_left: 52.8, pct_right: 47.2 },
    ReferenceSplitRow { key: "continuation:embedding", n: 40, pct_left: 53.1, pct_right: 46.8 },
    ReferenceSplitRow { key: "continuation:embedding", n: 80, pct_left: 54.4, pct_right: 45.6 },
    ReferenceSplitRow { key: "continuation:embedding", n: 160, pct_left: 54.8, pct_right: 45.2 },
    ReferenceSplitRow { key: "continuation:embedding", n: 320, pct_left: 41.3, pct_right: 58.7 },
    ReferenceSplitRow { key: "continuation:embedding-t5", n: 20, pct_left: 50.0, pct_right: 50.0 },
    ReferenceSplitRow { key: "continuation:embedding-t5", n: 40, pct_left: 49.9, pct_right: 50.1 },
    ReferenceSplitRow { key: "continuation:embedding-t5", n: 80, pct_left: 52.8, pct_right: 47.2 },
    ReferenceSplitRow { key: "continuation:embedding-t5", n: 160, pct_left: 51.7, pct_right: 48.3 },
    ReferenceSplitRow { key: "continuation:embedding-t5", n: 320, pct_left: 57.6, pct_right: 42.4 },
    ReferenceSplitRow { key: "continuation:classifier-zero", n: 20, pct_left: 41.8, pct_right: 58.2 },
    ReferenceSplitRow { key: "continuation:classifier-zero", n: 40, pct_left: 19.3, pct_right: 80.7 },
    ReferenceSplitRow { key: "continuation:classifier-zero", n: 80, pct_left: 20.0, pct_right: 80.0 },
    ReferenceSplitRow { key: "continuation:classifier-zero", n: 160, pct_left: 41.1, pct_right: 58.9 },
    ReferenceSplitRow { key: "continuation:classifier-zero", n: 320, pct_left: 27.3, pct_right: 72.7 },
    ReferenceSplitRow { key: "continuation:classifier-few", n: 20, pct_left: 70.5, pct_right: 29.5 },
    ReferenceSplitRow { key: "continuation:classifier-few", n: 40, pct_left: 53.6, pct_right: 46.4 },
    ReferenceSplitRow { key: "continuation:classifier-few", n: 80, pct_left: 53.3, pct_right: 46.7 },
    ReferenceSplitRow { key: "continuation:classifier-few", n: 160, pct_left: 51.3, pct_right: 48.7 },
    ReferenceSplitRow { key: "continuation:classifier-few", n: 320, pct_left: 48.0, pct_right: 52.0 },
];

/// Reported scale figures, useful as sanity anchors when replicating.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReferenceScaleRow {
    pub name: &'static str,
    pub value: f64,
}

pub const REFERENCE_SCALE: &[ReferenceScaleRow] = &[
    ReferenceScaleRow { name: "flipbias_instances", value: 3066.0 },
    ReferenceScaleRow { name: "flipbias_triples", value: 1022.0 },
    ReferenceScaleRow { name: "abp_instances", value: 37554.0 },
    ReferenceScaleRow { name: "flipbias_avg_length", value: 1077.0 },
    ReferenceScaleRow { name: "abp_avg_length", value: 1095.0 },
    ReferenceScaleRow { name: "left_avg_length", value: 1111.0 },
    ReferenceScaleRow { name: "right_avg_length", value: 794.0 },
    ReferenceScaleRow { name: "indicators_clustered", value: 19671.0 },
    ReferenceScaleRow { name: "latent_topics", value: 152.0 },
    ReferenceScaleRow { name: "abp_topics", value: 108.0 },
    ReferenceScaleRow { name: "avg_suffix_tokens_n20", value: 490.1 },
    ReferenceScaleRow { name: "avg_suffix_tokens_n40", value: 487.5 },
    ReferenceScaleRow { name: "avg_suffix_tokens_n80", value: 479.0 },
    ReferenceScaleRow { name: "avg_suffix_tokens_n160", value: 463.7 },
    ReferenceScaleRow { name: "avg_suffix_tokens_n320", value: 473.9 },
];

pub fn reference_metrics(key: &str) -> Option<&'static ReferenceMetricsRow> {
    REFERENCE_METRICS.iter().find(|r| r.key == key)
}

pub fn reference_splits(key: &str) -> Vec<&'static ReferenceSplitRow> {
    REFERENCE_SPLITS.iter().filter(|r| r.key == key).collect()
}

pub fn reference_metric_keys() -> Vec<&'static str> {
    REFERENCE_METRICS.iter().map(|r| r.key).collect()
}

pub fn reference_split_keys() -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = REFERENCE_SPLITS.iter().map(|r| r.key).collect();
    keys.dedup();
    keys
}
