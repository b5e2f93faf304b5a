//! `bias-audit report`: re-derives reports from run logs.

use std::fs;

use bias_audit_core::audit::{read_prediction_log, PREDICTIONS_LOG};
use bias_audit_core::continuation::SplitRow;
use bias_audit_core::metrics::{
    binary_metrics, per_topic, rank_topics_by_bti1, tally, BiasTendency,
};
use bias_audit_core::reference::{reference_metric_keys, reference_split_keys};
use bias_audit_core::report::{
    write_metrics_comparison, write_per_topic, write_split_comparison, write_topic_ranking,
    SPLITS_TSV,
};

use crate::cli::{GlobalArgs, ReportCommand, ReportCompareArgs, ReportTopicsArgs};
use crate::context::load_corpus_arg;
use crate::errors::CliError;
use crate::topic_files::load_topic_artifacts;

pub fn run(global: &GlobalArgs, command: &ReportCommand) -> Result<(), CliError> {
    match command {
        ReportCommand::Topics(args) => report_topics(global, args),
        ReportCommand::Compare(args) => report_compare(global, args),
    }
}

fn report_topics(global: &GlobalArgs, args: &ReportTopicsArgs) -> Result<(), CliError> {
    let corpus = load_corpus_arg(global)?;
    let log_path = args.run_dir.join(PREDICTIONS_LOG);
    if !log_path.exists() {
        return Err(CliError::Data(format!(
            "{} not found; run `bias-audit audit` first",
            log_path.display()
        )));
    }
    let records = read_prediction_log(&log_path)?;
    let artifacts = load_topic_artifacts(&args.run_dir)?;
    let (assignment, interpretations) = match artifacts {
        Some(a) => {
            if !a.ties.is_empty() {
                println!("note: {} plurality ties in the topic assignment", a.ties.len());
            }
            (a.assignment, a.interpretations)
        }
        None if corpus.iter().all(|a| a.topic.is_some()) => (
            corpus
                .iter()
                .map(|a| (a.id.clone(), a.topic.clone().expect("checked")))
                .collect(),
            Default::default(),
        ),
        None => {
            return Err(CliError::Data(
                "no topic data in the run dir (run `bias-audit topics`) and the corpus has no predefined topics"
                    .into(),
            ))
        }
    };
    let by_topic = per_topic(&records, &corpus, &assignment)?;
    write_per_topic(&args.run_dir, &by_topic, &interpretations)?;
    let ranked = rank_topics_by_bti1(&by_topic);
    write_topic_ranking(&args.run_dir, &ranked, &interpretations, args.top_k)?;
    let undefined = by_topic.values().filter(|m| m.tendency.bti1.is_none()).count();
    println!(
        "per-topic BTI: {} topics ({} with undefined BTI-1), ranking keeps {} above-average-frequency topics",
        by_topic.len(),
        undefined,
        ranked.len(),
    );
    Ok(())
}

fn report_compare(global: &GlobalArgs, args: &ReportCompareArgs) -> Result<(), CliError> {
    if args.list {
        println!("metric references:");
        for key in reference_metric_keys() {
            println!("  {key}");
        }
        println!("continuation references:");
        for key in reference_split_keys() {
            println!("  {key}");
        }
        return Ok(());
    }
    let key = args.reference.as_deref().expect("required unless --list");
    if key.starts_with("continuation:") {
        let splits_path = args.run_dir.join(SPLITS_TSV).with_extension("json");
        if !splits_path.exists() {
            return Err(CliError::Data(format!(
                "{} not found; run `bias-audit continue` first",
                splits_path.display()
            )));
        }
        let rows: Vec<SplitRow> = serde_json::from_slice(&fs::read(&splits_path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", splits_path.display())))?;
        let path = write_split_comparison(&args.run_dir, key, &args.method, &rows)?;
        println!("comparison written to {}", path.display());
        return Ok(());
    }
    let corpus = load_corpus_arg(global)?;
    let log_path = args.run_dir.join(PREDICTIONS_LOG);
    if !log_path.exists() {
        return Err(CliError::Data(format!(
            "{} not found; run `bias-audit audit` first",
            log_path.display()
        )));
    }
    let records = read_prediction_log(&log_path)?;
    let confusion = tally(&records, &corpus)?;
    let suite = binary_metrics(&confusion)?;
    let tendency = BiasTendency::from_tally(&confusion);
    let path = write_metrics_comparison(&args.run_dir, key, &suite, &tendency)?;
    println!("comparison written to {} (side by side, no gating)", path.display());
    Ok(())
}
