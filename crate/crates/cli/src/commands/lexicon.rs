//! `bias-audit lexicon`: vocabulary construction.

use bias_audit_core::lexicon::{
    build_vocabulary, count_side_frequencies, StopwordList, VocabularyConfig,
    VocabularyProvenance,
};

use crate::cli::{GlobalArgs, LexiconArgs};
use crate::context::load_corpus_arg;
use crate::errors::CliError;

pub fn run(global: &GlobalArgs, args: &LexiconArgs) -> Result<(), CliError> {
    let corpus = load_corpus_arg(global)?;
    let stopwords = match &args.stopwords {
        Some(path) => StopwordList::load(path)?,
        None => StopwordList::builtin(),
    };
    let freqs = count_side_frequencies(&corpus, &stopwords)?;
    let vocabulary = build_vocabulary(
        &freqs,
        VocabularyConfig { ratio_factor: args.ratio_factor, left_top_k: args.top_k },
        VocabularyProvenance {
            corpus_id: corpus.id.clone(),
            stopword_list_id: stopwords.id.clone(),
        },
    )?;
    vocabulary.save(&args.out)?;
    println!(
        "vocabulary: {} left tokens (sum {}), {} right tokens (sum {})",
        vocabulary.left.len(),
        vocabulary.left_sum(),
        vocabulary.right.len(),
        vocabulary.right_sum(),
    );
    if vocabulary.flags.left_underfull {
        println!("note: fewer left candidates than --top-k; kept them all");
    }
    if vocabulary.flags.right_sum_shortfall {
        println!("note: right candidates ran out before matching the left frequency sum");
    }
    if vocabulary.flags.right_sum_overshoot {
        println!("note: right frequency sum overshoots the left sum by part of one token");
    }
    println!("written to {}", args.out.display());
    Ok(())
}
