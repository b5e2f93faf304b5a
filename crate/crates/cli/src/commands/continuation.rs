//! `bias-audit continue`: the continuation probe over complete triples.

use bias_audit_core::continuation::{ContinuationSweep, LabelMethod};
use bias_audit_core::corpus::build_triples;
use bias_audit_core::lexicon::Vocabulary;
use bias_audit_core::report::{write_continuation_logs, write_split_table, RunManifest};

use crate::cli::{ContinueArgs, GlobalArgs};
use crate::context::{build_gateway, load_corpus_arg, load_templates};
use crate::errors::CliError;

pub fn run(global: &GlobalArgs, args: &ContinueArgs) -> Result<(), CliError> {
    let corpus = load_corpus_arg(global)?;
    let templates = load_templates(global)?;
    let gateway = build_gateway(global, None)?;

    let methods: Vec<LabelMethod> = args
        .methods
        .iter()
        .map(|m| LabelMethod::parse(m).map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    if args.prefix_lens.is_empty() {
        return Err(CliError::Usage("--prefix-lens must name at least one length".into()));
    }

    let vocabulary = match (&args.vocabulary, methods.contains(&LabelMethod::Vocabulary)) {
        (Some(path), _) => Some(Vocabulary::load(path)?),
        (None, true) => {
            return Err(CliError::Usage(
                "the vocabulary method needs --vocabulary FILE (build one with `bias-audit lexicon`)"
                    .into(),
            ))
        }
        (None, false) => None,
    };

    let triple_set = build_triples(&corpus)?;
    if triple_set.triples.is_empty() {
        return Err(CliError::Data(
            "no complete left/center/right event triples in the corpus".into(),
        ));
    }
    if !triple_set.incomplete.is_empty() {
        println!(
            "note: {} incomplete events skipped (missing labels)",
            triple_set.incomplete.len()
        );
    }

    RunManifest::new(
        corpus.id.clone(),
        corpus.content_hash.clone().unwrap_or_default(),
        global.model.clone(),
        format!(
            "continue:{}",
            methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join("+")
        ),
        gateway.chat_provider_id().to_string(),
        gateway.embedding_provider_id(),
        global.seed,
        global.concurrency,
        args.temperature,
    )
    .ensure_named(&args.run_dir, "continue_manifest.json")?;

    let mut sweep = ContinuationSweep::new(&gateway, &templates, &global.model);
    sweep.classifier_model_id = args.classifier_model.clone().unwrap_or_else(|| global.model.clone());
    sweep.n_values = args.prefix_lens.clone();
    sweep.methods = methods.clone();
    sweep.vocabulary = vocabulary.as_ref();
    sweep.temperature = args.temperature;
    sweep.max_output_tokens = args.max_output_tokens;

    let (results, table) = bias_audit_core::continuation::run_continuation(
        &sweep,
        &corpus,
        &triple_set.triples,
    )?;
    write_continuation_logs(&args.run_dir, &results)?;
    write_split_table(&args.run_dir, &table)?;

    println!(
        "continuation: {} results over {} triples",
        results.len(),
        triple_set.triples.len()
    );
    for row in &table {
        println!(
            "n={}\t{}\tleft {}\tright {}\tties {}\tcount {}",
            row.n,
            row.method,
            bias_audit_core::report::fmt_pct100(row.pct_left),
            bias_audit_core::report::fmt_pct100(row.pct_right),
            row.ties,
            row.count,
        );
    }
    Ok(())
}
