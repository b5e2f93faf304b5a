//! `bias-audit topics`: indicator extraction, clustering, interpretation,
//! and article→topic assignment.

use std::fs;

use bias_audit_core::cluster::{ClusterConfig, Linkage};
use bias_audit_core::report::RunManifest;
use bias_audit_core::topics::{
    assign_topics, cluster_indicators, extract_indicators, interpret_topic, Indicator,
};

use crate::cli::{GlobalArgs, TopicsArgs};
use crate::context::{build_gateway, load_corpus_arg, load_templates};
use crate::errors::CliError;
use crate::topic_files::write_topic_artifacts;

fn parse_linkage(s: &str) -> Result<Linkage, CliError> {
    match s {
        "ward" => Ok(Linkage::Ward),
        "single" => Ok(Linkage::Single),
        "complete" => Ok(Linkage::Complete),
        "average" => Ok(Linkage::Average),
        other => Err(CliError::Usage(format!(
            "unknown linkage {other:?} (expected ward, single, complete, or average)"
        ))),
    }
}

pub fn run(global: &GlobalArgs, args: &TopicsArgs) -> Result<(), CliError> {
    let corpus = load_corpus_arg(global)?;
    fs::create_dir_all(&args.run_dir)?;

    if args.predefined {
        let assignment = assign_topics(&corpus, None)?;
        write_topic_artifacts(&args.run_dir, &[], &[], &assignment)?;
        println!(
            "predefined topics passed through for {} articles",
            assignment.topics.len()
        );
        return Ok(());
    }

    let templates = load_templates(global)?;
    let gateway = build_gateway(global, None)?;
    RunManifest::new(
        corpus.id.clone(),
        corpus.content_hash.clone().unwrap_or_default(),
        global.model.clone(),
        format!("topics:{}@{}", args.linkage, args.threshold),
        gateway.chat_provider_id().to_string(),
        gateway.embedding_provider_id(),
        global.seed,
        global.concurrency,
        0.0,
    )
    .ensure_named(&args.run_dir, "topics_manifest.json")?;

    let mut indicators: Vec<Indicator> = Vec::new();
    let mut empty_articles = 0usize;
    for article in corpus.iter() {
        let extracted = extract_indicators(article, &gateway, &templates, &global.model)?;
        if extracted.is_empty() {
            empty_articles += 1;
        }
        indicators.extend(extracted);
    }
    if indicators.is_empty() {
        return Err(CliError::Data(
            "no indicators extracted from any article; cannot build latent topics".into(),
        ));
    }
    if empty_articles > 0 {
        println!("note: {empty_articles} articles yielded no indicators");
    }

    let texts: Vec<String> = indicators.iter().map(|i| i.text.clone()).collect();
    let embeddings = gateway.embed_texts(&texts)?;

    let config = ClusterConfig {
        linkage: parse_linkage(&args.linkage)?,
        threshold: args.threshold,
        max_points: args.max_points,
        normalize: args.normalize,
    };
    let mut clusters = cluster_indicators(&indicators, &embeddings, &config)?;

    if !args.no_interpret {
        for cluster in &mut clusters {
            let title = interpret_topic(
                cluster,
                &indicators,
                &gateway,
                &templates,
                &global.model,
                args.max_interpret_indicators,
            )?;
            cluster.interpretation = Some(title);
        }
    }

    let assignment = assign_topics(&corpus, Some((&indicators, &clusters)))?;
    if !assignment.ties.is_empty() {
        println!("note: {} plurality ties (lowest cluster id taken)", assignment.ties.len());
    }
    write_topic_artifacts(&args.run_dir, &indicators, &clusters, &assignment)?;

    println!(
        "topics: {} indicators over {} articles clustered into {} latent topics ({} linkage, threshold {})",
        indicators.len(),
        corpus.len(),
        clusters.len(),
        args.linkage,
        args.threshold,
    );
    Ok(())
}
