//! `bias-audit audit`: prediction sweep plus confusion, metric-suite, BTI,
//! and (when topics are available) per-topic BTI reports.

use std::collections::BTreeMap;
use std::path::Path;

use bias_audit_core::audit::{parse_strategy_kind, run_audit, AuditJob, PromptStrategy};
use bias_audit_core::corpus::Corpus;
use bias_audit_core::metrics::{binary_metrics, per_topic, tally, BiasTendency};
use bias_audit_core::report::{
    self, write_bias_tendency, write_confusion, write_metric_suite, write_per_topic,
    write_run_stats, RunManifest, RunStats,
};

use crate::cli::{AuditArgs, GlobalArgs};
use crate::context::{build_gateway, load_corpus_arg, load_templates};
use crate::errors::CliError;
use crate::topic_files::load_topic_artifacts;

pub fn run(global: &GlobalArgs, args: &AuditArgs) -> Result<(), CliError> {
    let corpus = load_corpus_arg(global)?;
    let templates = load_templates(global)?;
    let gateway = build_gateway(global, None)?;

    let kind = parse_strategy_kind(&args.strategy)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut strategy = PromptStrategy::new(kind).with_seed(global.seed);
    strategy.include_title = args.include_title;
    let descriptor = strategy.descriptor();

    let manifest = RunManifest::new(
        corpus.id.clone(),
        corpus.content_hash.clone().unwrap_or_default(),
        global.model.clone(),
        descriptor,
        gateway.chat_provider_id().to_string(),
        gateway.embedding_provider_id(),
        global.seed,
        global.concurrency,
        args.temperature,
    )
    .ensure(&args.run_dir)?;

    let mut job = AuditJob::new(&gateway, &templates, &global.model, strategy);
    job.temperature = args.temperature;
    job.max_output_tokens = args.max_output_tokens;

    let (records, stats) = run_audit(&job, &corpus, &args.run_dir)?;

    let confusion = tally(&records, &corpus)?;
    write_confusion(&args.run_dir, &confusion)?;
    let suite = binary_metrics(&confusion)?;
    write_metric_suite(&args.run_dir, &suite)?;
    let tendency = BiasTendency::from_tally(&confusion);
    write_bias_tendency(&args.run_dir, &tendency)?;

    if let Some(assignment) = topic_assignment(&corpus, &args.run_dir)? {
        let by_topic = per_topic(&records, &corpus, &assignment.topics)?;
        write_per_topic(&args.run_dir, &by_topic, &assignment.interpretations)?;
        println!("per-topic BTI over {} topics written", by_topic.len());
    }

    write_run_stats(
        &args.run_dir,
        &RunStats {
            run_id: manifest.run_id.clone(),
            provider_calls: stats.provider_calls,
            newly_run: stats.newly_run,
            skipped_logged: stats.skipped_logged,
            invalid_rate: stats.invalid_rate,
        },
    )?;

    println!(
        "audit {}: {} records ({} new, {} skipped), invalid rate {}",
        manifest.run_id,
        stats.total,
        stats.newly_run,
        stats.skipped_logged,
        report::fmt_pct(stats.invalid_rate),
    );
    println!(
        "bti1 {}  bti2 {}  biased_f1 {}  micro_f1 {}  macro_f1 {}",
        report::fmt_bti(tendency.bti1),
        report::fmt_bti(tendency.bti2),
        report::fmt_pct(suite.biased_f1),
        report::fmt_pct(suite.micro_f1),
        report::fmt_pct(suite.macro_f1),
    );
    Ok(())
}

pub struct ResolvedTopics {
    pub topics: BTreeMap<String, String>,
    pub interpretations: BTreeMap<String, String>,
}

/// Topic source resolution: predefined topics on every article win;
/// otherwise a topic assignment file left by `bias-audit topics`; otherwise
/// no per-topic reporting.
pub fn topic_assignment(
    corpus: &Corpus,
    run_dir: &Path,
) -> Result<Option<ResolvedTopics>, CliError> {
    if corpus.iter().all(|a| a.topic.is_some()) {
        let topics = corpus
            .iter()
            .map(|a| (a.id.clone(), a.topic.clone().expect("checked")))
            .collect();
        return Ok(Some(ResolvedTopics { topics, interpretations: BTreeMap::new() }));
    }
    match load_topic_artifacts(run_dir)? {
        Some(artifacts) => Ok(Some(ResolvedTopics {
            topics: artifacts.assignment,
            interpretations: artifacts.interpretations,
        })),
        None => Ok(None),
    }
}
