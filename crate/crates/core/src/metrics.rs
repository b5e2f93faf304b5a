//! Confusion tallies, bias tendency indices, and the binary bias-detection
//! metric suite.
//!
//! The bias tendency indices compare center-confusion rates across
//! ground-truth rows:
//!
//! ```text
//! BTI-1 = count(left→center)/total(left) − count(right→center)/total(right)
//! BTI-2 = count(center→right)/total(center) − count(center→left)/total(center)
//! ```
//!
//! Positive values mean the audited model leans left, negative right. Row
//! totals include `uncertain`/`invalid` predictions, which keeps the indices
//! comparable across models with different refusal rates.
//!
//! The five classification metrics binarize with positive class "biased"
//! (ground truth or prediction in {left, right}); `center`, `uncertain` and
//! `invalid` all count as the negative class. See
//! `docs/metrics_derivation.md` for why this convention is forced.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::PredictionRecord;
use crate::corpus::{BiasLabel, Corpus};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{0} is not a ground-truth label")]
    NotGroundTruth(BiasLabel),
    #[error("record references unknown article {0:?}")]
    UnknownArticle(String),
    #[error("article {0:?} has no topic assignment")]
    MissingTopic(String),
    #[error("undefined value: {0}")]
    Undefined(String),
    #[error("empty tally")]
    EmptyTally,
}

pub const GROUND_TRUTHS: [BiasLabel; 3] = [BiasLabel::Left, BiasLabel::Center, BiasLabel::Right];
pub const PREDICTIONS: [BiasLabel; 5] = [
    BiasLabel::Left,
    BiasLabel::Center,
    BiasLabel::Right,
    BiasLabel::Uncertain,
    BiasLabel::Invalid,
];

fn gt_index(label: BiasLabel) -> Result<usize, MetricsError> {
    GROUND_TRUTHS
        .iter()
        .position(|&g| g == label)
        .ok_or(MetricsError::NotGroundTruth(label))
}

fn pred_index(label: BiasLabel) -> usize {
    PREDICTIONS.iter().position(|&p| p == label).expect("all labels are predictions")
}

/// Counts indexed by (ground truth × prediction). The sole input to every
/// metric in this module.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TallyWire", into = "TallyWire")]
pub struct ConfusionTally {
    counts: [[u64; 5]; 3],
}

#[derive(Serialize, Deserialize)]
struct TallyWire(BTreeMap<String, BTreeMap<String, u64>>);

impl From<TallyWire> for ConfusionTally {
    fn from(wire: TallyWire) -> ConfusionTally {
        let mut tally = ConfusionTally::default();
        for (g, row) in wire.0 {
            let Some(g) = BiasLabel::parse(&g).filter(BiasLabel::is_ground_truth) else {
                continue;
            };
            for (p, count) in row {
                if let Some(p) = BiasLabel::parse(&p) {
                    tally.counts[gt_index(g).expect("ground truth")][pred_index(p)] = count;
                }
            }
        }
        tally
    }
}

impl From<ConfusionTally> for TallyWire {
    fn from(tally: ConfusionTally) -> TallyWire {
        let mut out = BTreeMap::new();
        for g in GROUND_TRUTHS {
            let mut row = BTreeMap::new();
            for p in PREDICTIONS {
                row.insert(p.as_str().to_string(), tally.count(g, p));
            }
            out.insert(g.as_str().to_string(), row);
        }
        TallyWire(out)
    }
}

impl ConfusionTally {
    pub fn new() -> ConfusionTally {
        ConfusionTally::default()
    }

    pub fn add(&mut self, ground_truth: BiasLabel, predicted: BiasLabel) -> Result<(), MetricsError> {
        self.counts[gt_index(ground_truth)?][pred_index(predicted)] += 1;
        Ok(())
    }

    pub fn count(&self, ground_truth: BiasLabel, predicted: BiasLabel) -> u64 {
        gt_index(ground_truth)
            .map(|g| self.counts[g][pred_index(predicted)])
            .unwrap_or(0)
    }

    /// All predictions for one ground-truth row, including uncertain/invalid.
    pub fn row_total(&self, ground_truth: BiasLabel) -> u64 {
        gt_index(ground_truth)
            .map(|g| self.counts[g].iter().sum())
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &ConfusionTally) {
        for g in 0..3 {
            for p in 0..5 {
                self.counts[g][p] += other.counts[g][p];
            }
        }
    }

    /// The same tally with the left and right roles exchanged in both
    /// ground truth and predictions.
    pub fn swap_left_right(&self) -> ConfusionTally {
        let mut out = ConfusionTally::default();
        for g in GROUND_TRUTHS {
            for p in PREDICTIONS {
                let swapped_g = swap_role(g);
                let swapped_p = swap_role(p);
                out.counts[gt_index(swapped_g).expect("ground truth")][pred_index(swapped_p)] =
                    self.count(g, p);
            }
        }
        out
    }

    pub fn from_pairs<I>(pairs: I) -> Result<ConfusionTally, MetricsError>
    where
        I: IntoIterator<Item = (BiasLabel, BiasLabel)>,
    {
        let mut tally = ConfusionTally::new();
        for (g, p) in pairs {
            tally.add(g, p)?;
        }
        Ok(tally)
    }
}

fn swap_role(label: BiasLabel) -> BiasLabel {
    match label {
        BiasLabel::Left => BiasLabel::Right,
        BiasLabel::Right => BiasLabel::Left,
        other => other,
    }
}

/// Builds a tally from prediction records, validating every article id
/// against the corpus.
pub fn tally(records: &[PredictionRecord], corpus: &Corpus) -> Result<ConfusionTally, MetricsError> {
    let mut out = ConfusionTally::new();
    for record in records {
        let article = corpus
            .get(&record.article_id)
            .ok_or_else(|| MetricsError::UnknownArticle(record.article_id.clone()))?;
        out.add(article.ground_truth, record.parsed)?;
    }
    Ok(out)
}

/// Rate difference of left-vs-right ground truth predicted as center.
/// Positive = left-leaning model. Errors when either row is empty instead
/// of silently returning 0.
pub fn bti1(tally: &ConfusionTally) -> Result<f64, MetricsError> {
    let left_total = tally.row_total(BiasLabel::Left);
    let right_total = tally.row_total(BiasLabel::Right);
    if left_total == 0 || right_total == 0 {
        return Err(MetricsError::Undefined(format!(
            "bti1 needs left and right rows; totals are {left_total}/{right_total}"
        )));
    }
    let left_to_center = tally.count(BiasLabel::Left, BiasLabel::Center) as f64 / left_total as f64;
    let right_to_center =
        tally.count(BiasLabel::Right, BiasLabel::Center) as f64 / right_total as f64;
    Ok(left_to_center - right_to_center)
}

/// Rate difference of center ground truth predicted right vs left.
/// Positive = left-leaning model.
pub fn bti2(tally: &ConfusionTally) -> Result<f64, MetricsError> {
    let center_total = tally.row_total(BiasLabel::Center);
    if center_total == 0 {
        return Err(MetricsError::Undefined("bti2 needs a center row".into()));
    }
    let center_to_right =
        tally.count(BiasLabel::Center, BiasLabel::Right) as f64 / center_total as f64;
    let center_to_left =
        tally.count(BiasLabel::Center, BiasLabel::Left) as f64 / center_total as f64;
    Ok(center_to_right - center_to_left)
}

/// Both indices plus the denominators they used; `None` marks an undefined
/// value (empty row), which reports must surface rather than hide.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasTendency {
    pub bti1: Option<f64>,
    pub bti2: Option<f64>,
    pub left_total: u64,
    pub center_total: u64,
    pub right_total: u64,
}

impl BiasTendency {
    pub fn from_tally(tally: &ConfusionTally) -> BiasTendency {
        BiasTendency {
            bti1: bti1(tally).ok(),
            bti2: bti2(tally).ok(),
            left_total: tally.row_total(BiasLabel::Left),
            center_total: tally.row_total(BiasLabel::Center),
            right_total: tally.row_total(BiasLabel::Right),
        }
    }
}

/// Components that hit a zero denominator and were reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub biased_f1_undefined: bool,
    pub negative_f1_undefined: bool,
}

impl MetricFlags {
    pub fn any(&self) -> bool {
        self.precision_undefined
            || self.recall_undefined
            || self.biased_f1_undefined
            || self.negative_f1_undefined
    }
}

/// The five classification metrics as fractions in [0, 1]; reports format
/// them as percentages with one decimal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSuite {
    pub precision: f64,
    pub recall: f64,
    pub biased_f1: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub flags: MetricFlags,
}

fn ratio(numerator: u64, denominator: u64, flag: &mut bool) -> f64 {
    if denominator == 0 {
        *flag = true;
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

fn f1(precision: f64, recall: f64, flag: &mut bool) -> f64 {
    if precision + recall == 0.0 {
        *flag = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Binary suite over the biased-vs-center binarization. Zero-denominator
/// components come back as 0 with the matching flag set.
pub fn binary_metrics(tally: &ConfusionTally) -> Result<MetricSuite, MetricsError> {
    if tally.total() == 0 {
        return Err(MetricsError::EmptyTally);
    }
    let positive_pred = [BiasLabel::Left, BiasLabel::Right];
    let negative_pred = [BiasLabel::Center, BiasLabel::Uncertain, BiasLabel::Invalid];
    let mut tp = 0u64;
    let mut fn_ = 0u64;
    for g in [BiasLabel::Left, BiasLabel::Right] {
        tp += positive_pred.iter().map(|&p| tally.count(g, p)).sum::<u64>();
        fn_ += negative_pred.iter().map(|&p| tally.count(g, p)).sum::<u64>();
    }
    let fp: u64 = positive_pred
        .iter()
        .map(|&p| tally.count(BiasLabel::Center, p))
        .sum();
    let tn: u64 = negative_pred
        .iter()
        .map(|&p| tally.count(BiasLabel::Center, p))
        .sum();

    let mut flags = MetricFlags::default();
    let precision = ratio(tp, tp + fp, &mut flags.precision_undefined);
    let recall = ratio(tp, tp + fn_, &mut flags.recall_undefined);
    let biased_f1 = f1(precision, recall, &mut flags.biased_f1_undefined);
    // binary micro-F1 reduces to accuracy
    let micro_f1 = (tp + tn) as f64 / tally.total() as f64;
    let mut scratch = false;
    let negative_precision = ratio(tn, tn + fn_, &mut scratch);
    let negative_recall = ratio(tn, tn + fp, &mut scratch);
    let negative_f1 = f1(
        negative_precision,
        negative_recall,
        &mut flags.negative_f1_undefined,
    );
    let macro_f1 = (biased_f1 + negative_f1) / 2.0;
    Ok(MetricSuite { precision, recall, biased_f1, micro_f1, macro_f1, flags })
}

/// Per-topic slice of the audit: tally, tendency, and instance count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicMetrics {
    pub tally: ConfusionTally,
    pub tendency: BiasTendency,
    pub frequency: u64,
}

/// Splits records by the topic of their article and computes per-topic
/// tallies and tendencies. Every article must have a topic in `assignment`.
pub fn per_topic(
    records: &[PredictionRecord],
    corpus: &Corpus,
    assignment: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, TopicMetrics>, MetricsError> {
    let mut tallies: BTreeMap<String, ConfusionTally> = BTreeMap::new();
    let mut frequencies: BTreeMap<String, u64> = BTreeMap::new();
    for record in records {
        let article = corpus
            .get(&record.article_id)
            .ok_or_else(|| MetricsError::UnknownArticle(record.article_id.clone()))?;
        let topic = assignment
            .get(&article.id)
            .ok_or_else(|| MetricsError::MissingTopic(article.id.clone()))?;
        tallies
            .entry(topic.clone())
            .or_default()
            .add(article.ground_truth, record.parsed)?;
        *frequencies.entry(topic.clone()).or_insert(0) += 1;
    }
    Ok(tallies
        .into_iter()
        .map(|(topic, tally)| {
            let tendency = BiasTendency::from_tally(&tally);
            let frequency = frequencies[&topic];
            (topic, TopicMetrics { tally, tendency, frequency })
        })
        .collect())
}

/// One row of the ranked per-topic extract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedTopic {
    pub topic: String,
    pub bti1: f64,
    pub bti2: Option<f64>,
    pub frequency: u64,
}

/// Ranks topics by BTI-1 (descending), restricted to topics whose frequency
/// is at least the mean frequency and whose BTI-1 is defined. Topics with an
/// undefined BTI-1 never appear here; callers surface them separately.
pub fn rank_topics_by_bti1(per_topic: &BTreeMap<String, TopicMetrics>) -> Vec<RankedTopic> {
    if per_topic.is_empty() {
        return Vec::new();
    }
    let mean = per_topic.values().map(|t| t.frequency as f64).sum::<f64>()
        / per_topic.len() as f64;
    let mut ranked: Vec<RankedTopic> = per_topic
        .iter()
        .filter(|(_, m)| (m.frequency as f64) >= mean)
        .filter_map(|(topic, m)| {
            m.tendency.bti1.map(|bti1| RankedTopic {
                topic: topic.clone(),
                bti1,
                bti2: m.tendency.bti2,
                frequency: m.frequency,
            })
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.bti1
            .partial_cmp(&a.bti1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.topic.cmp(&b.topic))
    });
    ranked
}
