//! `bias-audit finetune`: dataset preparation and optional job submission.

use bias_audit_core::finetune::{
    build_ft_dataset, relabel_right_shift, submit_ft_job, FineTuneMix, Hyperparameters,
    MixKind, MockFineTuneSubmitter,
};
use bias_audit_core::gateway::HttpFineTuneProvider;

use crate::cli::{FinetuneArgs, GlobalArgs};
use crate::context::{http_finetune_config, load_corpus_arg, load_templates};
use crate::errors::CliError;

pub fn run(global: &GlobalArgs, args: &FinetuneArgs) -> Result<(), CliError> {
    let mut corpus = load_corpus_arg(global)?;
    let templates = load_templates(global)?;
    if args.right_shift {
        corpus = relabel_right_shift(&corpus);
        println!("right-shift applied: {} articles remain", corpus.len());
    }
    let kind = MixKind::parse(&args.mix)
        .ok_or_else(|| CliError::Usage(format!("unknown mix {:?} (expected l, lc, or lcr)", args.mix)))?;
    let mix = FineTuneMix::new(kind, args.total, global.seed);
    let manifest = build_ft_dataset(&corpus, &mix, &templates, &args.out)?;
    println!(
        "training file {} ({} examples, mix {}, seed {})",
        args.out.display(),
        manifest.article_ids.len(),
        manifest.mix,
        manifest.seed,
    );
    for (label, count) in &manifest.counts {
        println!("  {label}: {count}");
    }

    if args.submit {
        let hyperparameters = Hyperparameters { epochs: args.epochs, batch_size: args.batch_size };
        let job = if global.mock {
            submit_ft_job(&MockFineTuneSubmitter, &args.out, &global.model, hyperparameters)?
        } else {
            let provider = HttpFineTuneProvider::new(http_finetune_config(global))
                .map_err(|e| CliError::Provider(format!("fine-tune endpoint: {e}")))?;
            submit_ft_job(&provider, &args.out, &global.model, hyperparameters)?
        };
        println!(
            "fine-tune job {} (file {}, status {})",
            job.job_id, job.training_file_id, job.status
        );
    }
    Ok(())
}
