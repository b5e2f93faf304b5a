//! Shared setup: corpus loading, template resolution, and gateway
//! construction from the global flags.

use std::path::Path;
use std::sync::Arc;

use bias_audit_core::corpus::{load_corpus, Corpus, RecordFormat};
use bias_audit_core::gateway::{
    Gateway, GatewayConfig, HttpChatProvider, HttpEmbeddingProvider, HttpProviderConfig,
    MockBehavior, MockChatProvider, MockEmbeddingProvider, ResponseCache, RetryPolicy,
};
use bias_audit_core::templates::PromptTemplates;

use crate::cli::GlobalArgs;
use crate::errors::CliError;

/// Environment variables consulted for the HTTP credential, in order.
pub const CREDENTIAL_ENV_VARS: [&str; 2] = ["BIAS_AUDIT_API_KEY", "OPENAI_API_KEY"];

pub fn load_corpus_arg(global: &GlobalArgs) -> Result<Corpus, CliError> {
    let path = global
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Usage("--corpus is required for this command".into()))?;
    let format = RecordFormat::from_path(path)?;
    Ok(load_corpus(path, format)?)
}

pub fn load_templates(global: &GlobalArgs) -> Result<PromptTemplates, CliError> {
    match &global.templates {
        Some(dir) => Ok(PromptTemplates::load_dir(dir)?),
        None => Ok(PromptTemplates::builtin()),
    }
}

fn http_config(global: &GlobalArgs) -> HttpProviderConfig {
    let env_var = CREDENTIAL_ENV_VARS
        .iter()
        .find(|v| std::env::var(v).map(|s| !s.is_empty()).unwrap_or(false))
        .copied()
        .unwrap_or(CREDENTIAL_ENV_VARS[0]);
    let host = global
        .provider
        .split("://")
        .nth(1)
        .unwrap_or(&global.provider)
        .split('/')
        .next()
        .unwrap_or("provider");
    HttpProviderConfig::open_schema(&format!("http:{host}"), &global.provider, env_var)
}

/// Builds the gateway: mock providers under `--mock`, HTTP otherwise, with
/// the response cache at `--cache-dir` either way.
pub fn build_gateway(global: &GlobalArgs, cache_subdir: Option<&Path>) -> Result<Gateway, CliError> {
    let cache_dir = match cache_subdir {
        Some(dir) => dir.to_path_buf(),
        None => global.cache_dir.clone(),
    };
    let cache = ResponseCache::open(cache_dir)?;
    let config = GatewayConfig {
        concurrency: global.concurrency.max(1),
        retry: RetryPolicy::default(),
    };
    let gateway = if global.mock {
        let chat = Arc::new(MockChatProvider::new(
            global.seed,
            MockBehavior::Auto { refusal_rate: global.mock_refusal_rate },
        ));
        let embedder = Arc::new(MockEmbeddingProvider::new(global.seed, global.mock_embed_dim));
        Gateway::new(chat, config).with_embedder(embedder)
    } else {
        let http = http_config(global);
        let chat = Arc::new(HttpChatProvider::new(http.clone()));
        let embedder = Arc::new(HttpEmbeddingProvider::new(http, &global.embedding_model));
        Gateway::new(chat, config).with_embedder(embedder)
    };
    Ok(gateway.with_cache(cache))
}

pub fn http_finetune_config(global: &GlobalArgs) -> HttpProviderConfig {
    http_config(global)
}
