//! Uniform access to chat-completion and text-embedding providers.
//!
//! The gateway layers a content-addressed response cache, a retry policy,
//! and bounded-concurrency fan-out over pluggable providers. A deterministic
//! mock provider backs all offline tests; the HTTP provider speaks the
//! common open chat-completions/embeddings schema against a configurable
//! base URL.

mod cache;
mod http;
mod mock;
mod retry;

pub use cache::{CacheKey, ResponseCache};
pub use http::{FineTuneJobRef, HttpChatProvider, HttpEmbeddingProvider, HttpFineTuneProvider, HttpProviderConfig};
pub use mock::{mock_embed, MockBehavior, MockChatProvider, MockEmbeddingProvider};
pub use retry::RetryPolicy;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("retries exhausted after {attempts} attempts; last error: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("cache error: {0}")]
    Cache(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("provider not configured: {0}")]
    NotConfigured(String),
}

impl GatewayError {
    /// Transient failures worth retrying with backoff.
    pub fn retryable(&self) -> bool {
        match self {
            GatewayError::RateLimited(_) | GatewayError::Transport(_) => true,
            GatewayError::Provider { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Message {
        Message { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Message {
        Message { role: Role::User, content: content.into() }
    }
}

/// One chat-completion request. The last message must be a user turn.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    pub fn user_turn(model_id: impl Into<String>, content: impl Into<String>) -> ChatRequest {
        ChatRequest {
            model_id: model_id.into(),
            messages: vec![Message::user(content)],
            temperature: 0.0,
            max_output_tokens: 1024,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> ChatRequest {
        self.temperature = temperature;
        self
    }

    pub fn with_max_output_tokens(mut self, max: u32) -> ChatRequest {
        self.max_output_tokens = max;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("messages are empty".into()));
        }
        if self.messages.last().map(|m| m.role) != Some(Role::User) {
            return Err(GatewayError::InvalidRequest(
                "last message must be a user turn".into(),
            ));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} out of range",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::InvalidRequest(
                "max_output_tokens must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Provider response for one chat request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub finish_reason: String,
    pub usage: Usage,
}

/// Fixed-length embedding with its provider of origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    pub provider_id: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, provider_id: impl Into<String>) -> Result<EmbeddingVector, GatewayError> {
        if values.is_empty() {
            return Err(GatewayError::MalformedResponse("empty embedding".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GatewayError::MalformedResponse(
                "embedding contains non-finite values".into(),
            ));
        }
        Ok(EmbeddingVector { values, provider_id: provider_id.into() })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Cosine similarity between two embeddings.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, GatewayError> {
    if a.len() != b.len() {
        return Err(GatewayError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(GatewayError::InvalidRequest("zero-norm vector".into()));
    }
    Ok(dot / (na * nb))
}

pub trait ChatProvider: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError>;
    /// Number of calls that reached the provider (cache hits excluded).
    fn calls(&self) -> u64;
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn model_id(&self) -> &str;
    /// Maximum texts per provider round-trip.
    fn batch_size(&self) -> usize;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError>;
    fn calls(&self) -> u64;
}

/// Serializes a JSON value with recursively sorted object keys, so that
/// logically identical requests digest to identical cache keys.
pub(crate) fn canonical_json(value: &serde_json::Value) -> String {
    fn write(value: &serde_json::Value, out: &mut String) {
        match value {
            serde_json::Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                out.push('{');
                for (i, k) in keys.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(k).expect("string"));
                    out.push(':');
                    write(&map[*k], out);
                }
                out.push('}');
            }
            serde_json::Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write(item, out);
                }
                out.push(']');
            }
            other => out.push_str(&serde_json::to_string(other).expect("scalar")),
        }
    }
    let mut out = String::new();
    write(value, &mut out);
    out
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Upper bound on in-flight provider requests during fan-out.
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { concurrency: 4, retry: RetryPolicy::default() }
    }
}

/// Shared front end over one chat provider and (optionally) one embedding
/// provider, with caching and retries.
pub struct Gateway {
    chat: Arc<dyn ChatProvider>,
    embedder: Option<Arc<dyn EmbeddingProvider>>,
    cache: Option<ResponseCache>,
    config: GatewayConfig,
}

impl Gateway {
    pub fn new(chat: Arc<dyn ChatProvider>, config: GatewayConfig) -> Gateway {
        Gateway { chat, embedder: None, cache: None, config }
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn EmbeddingProvider>) -> Gateway {
        self.embedder = Some(embedder);
        self
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Gateway {
        self.cache = Some(cache);
        self
    }

    pub fn chat_provider_id(&self) -> &str {
        self.chat.id()
    }

    /// Configured fan-out bound.
    pub fn concurrency(&self) -> usize {
        self.config.concurrency
    }

    pub fn embedding_provider_id(&self) -> Option<String> {
        self.embedder
            .as_ref()
            .map(|e| format!("{}/{}", e.id(), e.model_id()))
    }

    /// Total calls that reached any provider since construction.
    pub fn provider_calls(&self) -> u64 {
        self.chat.calls() + self.embedder.as_ref().map(|e| e.calls()).unwrap_or(0)
    }

    /// Cache key for a chat request under the configured provider.
    pub fn chat_cache_key(&self, request: &ChatRequest) -> CacheKey {
        CacheKey::for_chat(self.chat.id(), request)
    }

    /// Completes one request, serving from cache when possible and retrying
    /// transient failures with exponential backoff.
    pub fn complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError> {
        request.validate()?;
        let key = self.chat_cache_key(request);
        if let Some(cache) = &self.cache {
            if let Some(bytes) = cache.get(&key)? {
                return serde_json::from_slice(&bytes)
                    .map_err(|e| GatewayError::Cache(format!("corrupt cache entry {key}: {e}")));
            }
        }
        let completion = self.with_retries(|| self.chat.complete(request))?;
        if let Some(cache) = &self.cache {
            let payload = serde_json::to_vec(&completion).expect("completion serializes");
            cache.put(&key, &key.request_canonical(), &payload, "chat")?;
        }
        Ok(completion)
    }

    /// Completes a batch with at most `config.concurrency` requests in
    /// flight at any time. Result order matches input order.
    pub fn complete_many(&self, requests: &[ChatRequest]) -> Vec<Result<Completion, GatewayError>> {
        let n = requests.len();
        if n == 0 {
            return Vec::new();
        }
        let workers = self.config.concurrency.max(1).min(n);
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<Completion, GatewayError>>>> =
            Mutex::new((0..n).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let result = self.complete(&requests[i]);
                    results.lock().expect("results lock")[i] = Some(result);
                });
            }
        });
        results
            .into_inner()
            .expect("results lock")
            .into_iter()
            .map(|slot| slot.expect("all slots filled"))
            .collect()
    }

    /// Embeds texts in input order, caching per text and batching misses
    /// into provider-sized chunks.
    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        let embedder = self
            .embedder
            .as_ref()
            .ok_or_else(|| GatewayError::NotConfigured("no embedding provider".into()))?;
        if texts.is_empty() {
            return Err(GatewayError::InvalidRequest("no texts to embed".into()));
        }
        if let Some(empty) = texts.iter().position(|t| t.is_empty()) {
            return Err(GatewayError::InvalidRequest(format!(
                "text at index {empty} is empty"
            )));
        }
        let keys: Vec<CacheKey> = texts
            .iter()
            .map(|t| CacheKey::for_embedding(embedder.id(), embedder.model_id(), t))
            .collect();
        let mut out: Vec<Option<EmbeddingVector>> = vec![None; texts.len()];
        if let Some(cache) = &self.cache {
            for (i, key) in keys.iter().enumerate() {
                if let Some(bytes) = cache.get(key)? {
                    let values: Vec<f64> = serde_json::from_slice(&bytes)
                        .map_err(|e| GatewayError::Cache(format!("corrupt cache entry {key}: {e}")))?;
                    out[i] = Some(EmbeddingVector::new(values, embedder.id())?);
                }
            }
        }
        // Dedupe misses so identical texts cost one provider slot.
        let mut miss_order: Vec<String> = Vec::new();
        let mut miss_index: std::collections::BTreeMap<String, usize> = Default::default();
        for (i, text) in texts.iter().enumerate() {
            if out[i].is_none() && !miss_index.contains_key(text) {
                miss_index.insert(text.clone(), miss_order.len());
                miss_order.push(text.clone());
            }
        }
        let mut fetched: Vec<EmbeddingVector> = Vec::with_capacity(miss_order.len());
        for chunk in miss_order.chunks(embedder.batch_size().max(1)) {
            let vectors = self.with_retries(|| embedder.embed_batch(chunk))?;
            if vectors.len() != chunk.len() {
                return Err(GatewayError::MalformedResponse(format!(
                    "expected {} embeddings, got {}",
                    chunk.len(),
                    vectors.len()
                )));
            }
            fetched.extend(vectors);
        }
        for (i, text) in texts.iter().enumerate() {
            if out[i].is_none() {
                let vector = fetched[miss_index[text]].clone();
                if let Some(cache) = &self.cache {
                    let payload = serde_json::to_vec(vector.values()).expect("vector serializes");
                    cache.put(&keys[i], &keys[i].request_canonical(), &payload, "embedding")?;
                }
                out[i] = Some(vector);
            }
        }
        let vectors: Vec<EmbeddingVector> = out.into_iter().map(|v| v.expect("filled")).collect();
        let dim = vectors[0].dimension();
        for v in &vectors {
            if v.dimension() != dim {
                return Err(GatewayError::DimensionMismatch { expected: dim, got: v.dimension() });
            }
        }
        Ok(vectors)
    }

    fn with_retries<T>(
        &self,
        mut call: impl FnMut() -> Result<T, GatewayError>,
    ) -> Result<T, GatewayError> {
        let policy = &self.config.retry;
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            match call() {
                Ok(value) => return Ok(value),
                Err(e) if e.retryable() && attempt < policy.max_attempts => {
                    std::thread::sleep(policy.delay(attempt));
                }
                Err(e) if e.retryable() => {
                    return Err(GatewayError::RetriesExhausted {
                        attempts: attempt,
                        last: e.to_string(),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }
}
