use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Audit the political leaning of chat models against labeled article
/// corpora: prediction probes, continuation probes, bias tendency indices,
/// latent topics, and fine-tuning preparation.
#[derive(Debug, Parser)]
#[command(name = "bias-audit", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Corpus file (.jsonl, .csv, or .tsv)
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,

    /// Chat model identifier
    #[arg(long, global = true, default_value = "gpt-3.5-turbo")]
    pub model: String,

    /// Base URL of an open-schema chat/embeddings endpoint
    #[arg(long, global = true, default_value = "https://api.openai.com/v1")]
    pub provider: String,

    /// Embedding model identifier (HTTP provider only)
    #[arg(long, global = true, default_value = "text-embedding-3-small")]
    pub embedding_model: String,

    /// Response cache directory
    #[arg(long, global = true, default_value = "bias_audit_cache")]
    pub cache_dir: PathBuf,

    /// Seed for anything sampled (few-shot draws, mixes, mock providers)
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Use the deterministic offline mock provider instead of HTTP
    #[arg(long, global = true)]
    pub mock: bool,

    /// Fraction of mock responses that refuse to answer
    #[arg(long, global = true, default_value_t = 0.0)]
    pub mock_refusal_rate: f64,

    /// Embedding dimension of the mock provider
    #[arg(long, global = true, default_value_t = 32)]
    pub mock_embed_dim: usize,

    /// Upper bound on in-flight provider requests
    #[arg(long, global = true, default_value_t = 4)]
    pub concurrency: usize,

    /// Directory of prompt template overrides
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a prediction sweep and emit confusion/metric/BTI reports
    Audit(AuditArgs),
    /// Run the continuation probe and emit the per-n split table
    #[command(name = "continue")]
    Continue(ContinueArgs),
    /// Build the left/right vocabulary from a labeled corpus
    Lexicon(LexiconArgs),
    /// Extract bias indicators, cluster them into latent topics, and
    /// assign every article a topic
    Topics(TopicsArgs),
    /// Prepare (and optionally submit) a fine-tuning dataset
    Finetune(FinetuneArgs),
    /// Re-derive reports from run logs
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Run directory for logs and reports
    #[arg(long)]
    pub run_dir: PathBuf,

    /// vanilla | ble | ds | fewshot:K, composable with '+', e.g. "ble+ds"
    #[arg(long, default_value = "vanilla")]
    pub strategy: String,

    /// Prepend the article title to the prompt's article slot
    #[arg(long)]
    pub include_title: bool,

    /// Sampling temperature for prediction probes
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,

    #[arg(long, default_value_t = 512)]
    pub max_output_tokens: u32,
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    #[arg(long)]
    pub run_dir: PathBuf,

    /// Prefix lengths, comma separated
    #[arg(long, default_value = "20,40,80,160,320", value_delimiter = ',')]
    pub prefix_lens: Vec<usize>,

    /// Label methods: embedding, vocabulary, classifier_zero, classifier_few
    #[arg(long, default_value = "embedding", value_delimiter = ',')]
    pub methods: Vec<String>,

    /// Vocabulary file (required by the vocabulary method)
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,

    /// Model used for classifier labeling (defaults to --model)
    #[arg(long)]
    pub classifier_model: Option<String>,

    /// Sampling temperature for continuation generation
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,

    #[arg(long, default_value_t = 1024)]
    pub max_output_tokens: u32,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// Output vocabulary file
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 2.0)]
    pub ratio_factor: f64,

    #[arg(long, default_value_t = 2000)]
    pub top_k: usize,

    /// Stopword list file (defaults to the shipped stopwords_en_v1)
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    #[arg(long)]
    pub run_dir: PathBuf,

    /// Pass through predefined article topics instead of building latent ones
    #[arg(long)]
    pub predefined: bool,

    /// Agglomerative distance threshold
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,

    /// ward | single | complete | average
    #[arg(long, default_value = "ward")]
    pub linkage: String,

    /// Unit-normalize indicator embeddings before clustering
    #[arg(long)]
    pub normalize: bool,

    /// Hard cap on points for the O(n^2) distance matrix
    #[arg(long, default_value_t = 25000)]
    pub max_points: usize,

    /// Indicators sampled per cluster when asking for a title
    #[arg(long, default_value_t = 12)]
    pub max_interpret_indicators: usize,

    /// Skip asking the model for cluster titles
    #[arg(long)]
    pub no_interpret: bool,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Output training file (JSONL chat format)
    #[arg(long)]
    pub out: PathBuf,

    /// l | lc | lcr
    #[arg(long, default_value = "lcr")]
    pub mix: String,

    #[arg(long, default_value_t = 300)]
    pub total: usize,

    /// Apply the right-shift relabeling (center→left, right→center, left dropped)
    #[arg(long)]
    pub right_shift: bool,

    /// Submit the file to the provider fine-tuning endpoint
    #[arg(long)]
    pub submit: bool,

    #[arg(long, default_value_t = 3)]
    pub epochs: u32,

    #[arg(long, default_value_t = 32)]
    pub batch_size: u32,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Per-topic BTI scatter data plus the ranked top/bottom extract
    Topics(ReportTopicsArgs),
    /// Side-by-side comparison of a run against published reference values
    Compare(ReportCompareArgs),
}

#[derive(Debug, Args)]
pub struct ReportTopicsArgs {
    #[arg(long)]
    pub run_dir: PathBuf,

    /// Rows to keep at each end of the BTI-1 ranking
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct ReportCompareArgs {
    #[arg(long)]
    pub run_dir: PathBuf,

    /// Reference key, e.g. strategies:vanilla or continuation:embedding
    #[arg(long, required_unless_present = "list")]
    pub reference: Option<String>,

    /// Method column to compare for continuation references
    #[arg(long, default_value = "embedding")]
    pub method: String,

    /// List available reference keys and exit
    #[arg(long)]
    pub list: bool,
}
