//! Deterministic offline providers for tests and `--mock` runs.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::Duration;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{
    canonical_json, ChatProvider, ChatRequest, Completion, EmbeddingProvider, EmbeddingVector,
    GatewayError, Usage,
};

/// What the mock chat provider answers with. Every variant is a pure
/// function of (seed, request), so reruns reproduce byte-identical text.
#[derive(Debug, Clone)]
pub enum MockBehavior {
    /// A short analysis line followed by a label line, refusing to answer
    /// for roughly `refusal_rate` of requests.
    Labels { refusal_rate: f64 },
    /// Pseudo-prose continuation of the requested length.
    Continuation { sentences: usize },
    /// Quoted one-line bias indicators.
    Indicators { count: usize },
    /// A short topic title.
    TopicTitle,
    /// Always the same text.
    Fixed(String),
    /// Dispatches on the shape of the final user message: continuation
    /// prompts get prose, indicator prompts get quoted lines, title prompts
    /// get a title, everything else gets a label answer. Matches the
    /// built-in templates; custom templates fall back to label answers.
    Auto { refusal_rate: f64 },
}

const CONTINUATION_WORDS: &[&str] = &[
    "the", "council", "budget", "senator", "market", "union", "tax", "reform", "border",
    "climate", "fairness", "security", "freedom", "community", "regulation", "growth",
    "welfare", "tradition", "progress", "debate", "measure", "vote", "economy", "program",
    "funding", "state", "federal", "court", "policy", "hearing", "report", "official",
    "agency", "committee", "spending", "plan",
];

const INDICATOR_VERBS: &[&str] = &[
    "Quotes", "Highlights", "Frames", "Emphasizes", "Downplays", "Contrasts",
];
const INDICATOR_OBJECTS: &[&str] = &[
    "official statements", "partisan sources", "economic figures", "protest coverage",
    "legal filings", "expert opinions",
];

fn request_rng(seed: u64, request: &ChatRequest) -> ChaCha8Rng {
    let value = serde_json::to_value(request).expect("request serializes");
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(canonical_json(&value).as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(bytes))
}

pub struct MockChatProvider {
    id: String,
    seed: u64,
    behavior: MockBehavior,
    latency: Duration,
    /// The first N calls fail with a retryable transport error.
    fail_first: u64,
    calls: AtomicU64,
    inflight: AtomicUsize,
    max_inflight: AtomicUsize,
}

impl MockChatProvider {
    pub fn new(seed: u64, behavior: MockBehavior) -> MockChatProvider {
        MockChatProvider {
            id: "mock-chat".into(),
            seed,
            behavior,
            latency: Duration::ZERO,
            fail_first: 0,
            calls: AtomicU64::new(0),
            inflight: AtomicUsize::new(0),
            max_inflight: AtomicUsize::new(0),
        }
    }

    pub fn with_latency(mut self, latency: Duration) -> MockChatProvider {
        self.latency = latency;
        self
    }

    pub fn failing_first(mut self, calls: u64) -> MockChatProvider {
        self.fail_first = calls;
        self
    }

    /// High-water mark of concurrent in-flight calls, for asserting the
    /// fan-out bound.
    pub fn max_inflight(&self) -> usize {
        self.max_inflight.load(Ordering::SeqCst)
    }

    fn respond(&self, request: &ChatRequest) -> Completion {
        let mut rng = request_rng(self.seed, request);
        let behavior = match &self.behavior {
            MockBehavior::Auto { refusal_rate } => {
                let prompt = request
                    .messages
                    .last()
                    .map(|m| m.content.as_str())
                    .unwrap_or("");
                if prompt.starts_with("Continue the text provided below:") {
                    MockBehavior::Continuation { sentences: 6 }
                } else if prompt.starts_with("List the fine-grained statements") {
                    MockBehavior::Indicators { count: 3 }
                } else if prompt.starts_with("Provide a short one-line topic title") {
                    MockBehavior::TopicTitle
                } else {
                    MockBehavior::Labels { refusal_rate: *refusal_rate }
                }
            }
            other => other.clone(),
        };
        let text = match &behavior {
            MockBehavior::Labels { refusal_rate } => {
                if rng.random::<f64>() < *refusal_rate {
                    "I cannot determine the political leaning of this text.".to_string()
                } else {
                    let label = match rng.random_range(0..10u32) {
                        0..=2 => "left",
                        3..=5 => "center",
                        6..=8 => "right",
                        _ => "uncertain",
                    };
                    format!("Analysis: synthetic review of the provided text.\n{label}")
                }
            }
            MockBehavior::Continuation { sentences } => {
                let mut out = String::new();
                for _ in 0..*sentences {
                    let len = rng.random_range(8..=14usize);
                    for w in 0..len {
                        let word = CONTINUATION_WORDS[rng.random_range(0..CONTINUATION_WORDS.len())];
                        if w == 0 {
                            let mut chars = word.chars();
                            if let Some(first) = chars.next() {
                                out.extend(first.to_uppercase());
                                out.push_str(chars.as_str());
                            }
                        } else {
                            out.push(' ');
                            out.push_str(word);
                        }
                    }
                    out.push_str(". ");
                }
                out.trim_end().to_string()
            }
            MockBehavior::Indicators { count } => {
                let mut lines = Vec::with_capacity(*count);
                for i in 0..*count {
                    let verb = INDICATOR_VERBS[rng.random_range(0..INDICATOR_VERBS.len())];
                    let object = INDICATOR_OBJECTS[rng.random_range(0..INDICATOR_OBJECTS.len())];
                    lines.push(format!("\"{verb} {object} in paragraph {}\"", i + 1));
                }
                lines.join("\n")
            }
            MockBehavior::TopicTitle => {
                let object = INDICATOR_OBJECTS[rng.random_range(0..INDICATOR_OBJECTS.len())];
                let mut title = String::new();
                for word in object.split(' ') {
                    let mut chars = word.chars();
                    if let Some(first) = chars.next() {
                        title.extend(first.to_uppercase());
                        title.push_str(chars.as_str());
                    }
                    title.push(' ');
                }
                format!("{}Coverage", title)
            }
            MockBehavior::Fixed(text) => text.clone(),
            MockBehavior::Auto { .. } => unreachable!("resolved above"),
        };
        let prompt_tokens: u64 = request
            .messages
            .iter()
            .map(|m| m.content.split_whitespace().count() as u64)
            .sum();
        Completion {
            usage: Usage {
                prompt_tokens,
                completion_tokens: text.split_whitespace().count() as u64,
            },
            finish_reason: "stop".into(),
            text,
        }
    }
}

impl ChatProvider for MockChatProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let call_no = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        let now = self.inflight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_inflight.fetch_max(now, Ordering::SeqCst);
        if !self.latency.is_zero() {
            std::thread::sleep(self.latency);
        }
        let result = if call_no <= self.fail_first {
            Err(GatewayError::Transport("synthetic transport failure".into()))
        } else {
            Ok(self.respond(request))
        };
        self.inflight.fetch_sub(1, Ordering::SeqCst);
        result
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Deterministic unit-norm embedding derived from a hash of (text, seed).
pub fn mock_embed(text: &str, dimension: usize, seed: u64) -> EmbeddingVector {
    assert!(dimension >= 2, "mock embeddings need dimension >= 2");
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(bytes));
    let mut values: Vec<f64> = (0..dimension).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        values[0] = 1.0;
    } else {
        for v in &mut values {
            *v /= norm;
        }
    }
    EmbeddingVector::new(values, "mock-embed").expect("finite values")
}

pub struct MockEmbeddingProvider {
    id: String,
    model_id: String,
    seed: u64,
    dimension: usize,
    batch_size: usize,
    calls: AtomicU64,
}

impl MockEmbeddingProvider {
    pub fn new(seed: u64, dimension: usize) -> MockEmbeddingProvider {
        MockEmbeddingProvider {
            id: "mock-embed".into(),
            model_id: "mock-embedding-v1".into(),
            seed,
            dimension,
            batch_size: 16,
            calls: AtomicU64::new(0),
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> MockEmbeddingProvider {
        self.batch_size = batch_size.max(1);
        self
    }
}

impl EmbeddingProvider for MockEmbeddingProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(texts
            .iter()
            .map(|t| mock_embed(t, self.dimension, self.seed))
            .collect())
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}
