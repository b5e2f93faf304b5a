//! HTTP providers speaking the common open chat-completions / embeddings
//! schema. The base URL, endpoint paths, and auth header are configurable so
//! audits run against any compatible endpoint; credentials come from an
//! environment variable, never from flags or files.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde_json::json;

use super::{
    ChatProvider, ChatRequest, Completion, EmbeddingProvider, EmbeddingVector, GatewayError, Usage,
};

/// Connection settings shared by the chat, embedding, and fine-tune
/// endpoints of one provider.
#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    /// Stable identifier recorded in cache keys and manifests.
    pub provider_id: String,
    /// e.g. `https://api.openai.com/v1`
    pub base_url: String,
    pub chat_path: String,
    pub embeddings_path: String,
    pub files_path: String,
    pub fine_tuning_path: String,
    pub auth_header: String,
    /// Formatted header value, e.g. `Bearer sk-...`.
    pub auth_value: Option<String>,
    pub timeout: Duration,
}

impl HttpProviderConfig {
    /// Settings for an open-schema endpoint, reading the credential from
    /// `credential_env` (unset leaves the provider unauthenticated).
    pub fn open_schema(provider_id: &str, base_url: &str, credential_env: &str) -> HttpProviderConfig {
        let auth_value = std::env::var(credential_env)
            .ok()
            .filter(|v| !v.is_empty())
            .map(|key| format!("Bearer {key}"));
        HttpProviderConfig {
            provider_id: provider_id.to_string(),
            base_url: base_url.trim_end_matches('/').to_string(),
            chat_path: "/chat/completions".into(),
            embeddings_path: "/embeddings".into(),
            files_path: "/files".into(),
            fine_tuning_path: "/fine_tuning/jobs".into(),
            auth_header: "Authorization".into(),
            auth_value,
            timeout: Duration::from_secs(120),
        }
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent()
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url, path)
    }

    pub fn require_auth(&self) -> Result<&str, GatewayError> {
        self.auth_value
            .as_deref()
            .ok_or_else(|| GatewayError::NotConfigured("no API credential in environment".into()))
    }
}

fn post_json(
    config: &HttpProviderConfig,
    path: &str,
    payload: &serde_json::Value,
) -> Result<serde_json::Value, GatewayError> {
    let url = config.url(path);
    let mut request = config.agent().post(&url);
    if let Some(auth) = &config.auth_value {
        request = request.header(&config.auth_header, auth);
    }
    let mut response = request
        .send_json(payload)
        .map_err(|e| GatewayError::Transport(format!("POST {url}: {e}")))?;
    let status = response.status().as_u16();
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| GatewayError::Transport(format!("read body from {url}: {e}")))?;
    match status {
        200..=299 => serde_json::from_str(&body)
            .map_err(|e| GatewayError::MalformedResponse(format!("{url}: {e}"))),
        401 | 403 => Err(GatewayError::Auth(truncate(&body))),
        429 => Err(GatewayError::RateLimited(truncate(&body))),
        _ => Err(GatewayError::Provider { status, message: truncate(&body) }),
    }
}

fn truncate(body: &str) -> String {
    const MAX: usize = 400;
    if body.len() > MAX {
        format!("{}...", &body[..MAX])
    } else {
        body.to_string()
    }
}

pub struct HttpChatProvider {
    config: HttpProviderConfig,
    calls: AtomicU64,
}

impl HttpChatProvider {
    pub fn new(config: HttpProviderConfig) -> HttpChatProvider {
        HttpChatProvider { config, calls: AtomicU64::new(0) }
    }
}

impl ChatProvider for HttpChatProvider {
    fn id(&self) -> &str {
        &self.config.provider_id
    }

    fn complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let payload = json!({
            "model": request.model_id,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        let body = post_json(&self.config, &self.config.chat_path, &payload)?;
        let choice = body
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| GatewayError::MalformedResponse("no choices in response".into()))?;
        let text = choice
            .pointer("/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| GatewayError::MalformedResponse("no message content".into()))?
            .to_string();
        let finish_reason = choice
            .get("finish_reason")
            .and_then(|v| v.as_str())
            .unwrap_or("unknown")
            .to_string();
        let usage = Usage {
            prompt_tokens: body.pointer("/usage/prompt_tokens").and_then(|v| v.as_u64()).unwrap_or(0),
            completion_tokens: body
                .pointer("/usage/completion_tokens")
                .and_then(|v| v.as_u64())
                .unwrap_or(0),
        };
        Ok(Completion { text, finish_reason, usage })
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

pub struct HttpEmbeddingProvider {
    config: HttpProviderConfig,
    model_id: String,
    batch_size: usize,
    calls: AtomicU64,
}

impl HttpEmbeddingProvider {
    pub fn new(config: HttpProviderConfig, model_id: impl Into<String>) -> HttpEmbeddingProvider {
        HttpEmbeddingProvider {
            config,
            model_id: model_id.into(),
            batch_size: 64,
            calls: AtomicU64::new(0),
        }
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn id(&self) -> &str {
        &self.config.provider_id
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let payload = json!({ "model": self.model_id, "input": texts });
        let body = post_json(&self.config, &self.config.embeddings_path, &payload)?;
        let data = body
            .get("data")
            .and_then(|d| d.as_array())
            .ok_or_else(|| GatewayError::MalformedResponse("no data array".into()))?;
        if data.len() != texts.len() {
            return Err(GatewayError::MalformedResponse(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                data.len()
            )));
        }
        // Providers return entries tagged with an index; order by it.
        let mut indexed: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
        for (fallback_index, entry) in data.iter().enumerate() {
            let index = entry
                .get("index")
                .and_then(|v| v.as_u64())
                .map(|v| v as usize)
                .unwrap_or(fallback_index);
            let values: Vec<f64> = entry
                .get("embedding")
                .and_then(|v| v.as_array())
                .ok_or_else(|| GatewayError::MalformedResponse("no embedding values".into()))?
                .iter()
                .map(|v| v.as_f64().unwrap_or(f64::NAN))
                .collect();
            indexed.push((index, values));
        }
        indexed.sort_by_key(|(i, _)| *i);
        indexed
            .into_iter()
            .map(|(_, values)| EmbeddingVector::new(values, &self.config.provider_id))
            .collect()
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Reference to a provider-side fine-tuning job.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FineTuneJobRef {
    pub job_id: String,
    pub training_file_id: String,
    pub status: String,
}

/// Uploads training files and creates fine-tuning jobs on an open-schema
/// endpoint.
pub struct HttpFineTuneProvider {
    config: HttpProviderConfig,
}

impl HttpFineTuneProvider {
    /// Fails before any upload when no credential is configured.
    pub fn new(config: HttpProviderConfig) -> Result<HttpFineTuneProvider, GatewayError> {
        config.require_auth()?;
        Ok(HttpFineTuneProvider { config })
    }

    pub fn upload_training_file(&self, bytes: &[u8], filename: &str) -> Result<String, GatewayError> {
        let boundary = "bias-audit-boundary-7f3a91";
        let mut body = Vec::new();
        body.extend_from_slice(format!("--{boundary}\r\n").as_bytes());
        body.extend_from_slice(b"Content-Disposition: form-data; name=\"purpose\"\r\n\r\n");
        body.extend_from_slice(b"fine-tune\r\n");
        body.extend_from_slice(format!("--{boundary}\r\n").as_bytes());
        body.extend_from_slice(
            format!("Content-Disposition: form-data; name=\"file\"; filename=\"{filename}\"\r\n")
                .as_bytes(),
        );
        body.extend_from_slice(b"Content-Type: application/jsonl\r\n\r\n");
        body.extend_from_slice(bytes);
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());

        let url = self.config.url(&self.config.files_path);
        let auth = self.config.require_auth()?.to_string();
        let mut response = self
            .config
            .agent()
            .post(&url)
            .header(&self.config.auth_header, &auth)
            .header("Content-Type", &format!("multipart/form-data; boundary={boundary}"))
            .send(&body[..])
            .map_err(|e| GatewayError::Transport(format!("POST {url}: {e}")))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(format!("read body from {url}: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::Provider { status, message: truncate(&text) });
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| GatewayError::MalformedResponse(format!("{url}: {e}")))?;
        value
            .get("id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| GatewayError::MalformedResponse("no file id in upload response".into()))
    }

    pub fn create_job(
        &self,
        training_file_id: &str,
        model_id: &str,
        epochs: u32,
        batch_size: u32,
    ) -> Result<FineTuneJobRef, GatewayError> {
        let payload = json!({
            "training_file": training_file_id,
            "model": model_id,
            "hyperparameters": { "n_epochs": epochs, "batch_size": batch_size },
        });
        let body = post_json(&self.config, &self.config.fine_tuning_path, &payload)?;
        let job_id = body
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| GatewayError::MalformedResponse("no job id".into()))?
            .to_string();
        let status = body
            .get("status")
            .and_then(|v| v.as_str())
            .unwrap_or("created")
            .to_string();
        Ok(FineTuneJobRef { job_id, training_file_id: training_file_id.to_string(), status })
    }

    pub fn job_status(&self, job_id: &str) -> Result<String, GatewayError> {
        let url = self.config.url(&format!("{}/{job_id}", self.config.fine_tuning_path));
        let auth = self.config.require_auth()?.to_string();
        let mut response = self
            .config
            .agent()
            .get(&url)
            .header(&self.config.auth_header, &auth)
            .call()
            .map_err(|e| GatewayError::Transport(format!("GET {url}: {e}")))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(format!("read body from {url}: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::Provider { status, message: truncate(&text) });
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| GatewayError::MalformedResponse(format!("{url}: {e}")))?;
        Ok(value
            .get("status")
            .and_then(|v| v.as_str())
            .unwrap_or("unknown")
            .to_string())
    }
}
