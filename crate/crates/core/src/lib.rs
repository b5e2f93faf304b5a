//! Audits the political leaning of chat-completion models against
//! three-way (left/center/right) labeled article corpora.
//!
//! The crate covers the full measurement pipeline: corpus ingestion and
//! event-triple grouping, prompt rendering for prediction probes with
//! debiasing variants, article-continuation probes labeled by embedding
//! similarity / lexicon matching / classifier prompting, bias tendency
//! indices and a binary detection metric suite, latent topic construction
//! via agglomerative clustering of bias indicators, and fine-tuning dataset
//! preparation with controlled label mixes.

pub mod audit;
pub mod cluster;
pub mod continuation;
pub mod corpus;
pub mod finetune;
pub mod gateway;
pub mod lexicon;
pub mod metrics;
pub mod reference;
pub mod report;
pub mod templates;
pub mod tokenize;
pub mod topics;

pub use corpus::{
    build_triples, drop_prefix, load_corpus, take_prefix, Article, BiasLabel, Corpus, CorpusError,
    EventTriple, IncompleteEvent, RecordFormat, TripleSet,
};
pub use gateway::{Gateway, GatewayConfig};
pub use metrics::{binary_metrics, bti1, bti2, tally, BiasTendency, ConfusionTally, MetricSuite};
