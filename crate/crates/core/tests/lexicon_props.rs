//! Vocabulary construction invariants over random synthetic corpora.

use proptest::prelude::*;

use bias_audit_core::corpus::{Article, BiasLabel, Corpus};
use bias_audit_core::lexicon::{
    build_vocabulary, candidate_sets, count_side_frequencies, StopwordList, VocabularyConfig,
    VocabularyProvenance,
};

const WORDS: &[&str] = &[
    "union", "market", "welfare", "liberty", "climate", "border", "justice", "tradition",
    "reform", "security", "fairness", "growth", "tax", "freedom", "community", "order",
];

fn arb_corpus() -> impl Strategy<Value = Corpus> {
    let article = proptest::collection::vec(0usize..WORDS.len(), 3..40);
    let side = proptest::collection::vec(article, 1..6);
    (side.clone(), side).prop_map(|(left, right)| {
        let mut articles = Vec::new();
        for (i, words) in left.into_iter().enumerate() {
            let body: Vec<&str> = words.into_iter().map(|w| WORDS[w]).collect();
            articles.push(Article::new(format!("l{i}"), body.join(" "), BiasLabel::Left));
        }
        for (i, words) in right.into_iter().enumerate() {
            let body: Vec<&str> = words.into_iter().map(|w| WORDS[w]).collect();
            articles.push(Article::new(format!("r{i}"), body.join(" "), BiasLabel::Right));
        }
        Corpus::new("prop", articles).unwrap()
    })
}

proptest! {
    #[test]
    fn sides_are_disjoint_and_sum_window_holds(corpus in arb_corpus(), top_k in 1usize..12) {
        let freqs = count_side_frequencies(&corpus, &StopwordList::builtin()).unwrap();
        let vocabulary = build_vocabulary(
            &freqs,
            VocabularyConfig { ratio_factor: 2.0, left_top_k: top_k },
            VocabularyProvenance::default(),
        ).unwrap();

        for token in vocabulary.left.keys() {
            prop_assert!(!vocabulary.right.contains_key(token), "token {token} on both sides");
        }

        let left_sum = vocabulary.left_sum();
        let right_sum = vocabulary.right_sum();
        if vocabulary.flags.right_sum_shortfall {
            prop_assert!(right_sum < left_sum);
        } else if left_sum > 0 {
            prop_assert!(right_sum >= left_sum);
            let max_right = vocabulary.right.values().copied().max().unwrap_or(0);
            prop_assert!(
                right_sum < left_sum + max_right.max(1),
                "right sum {right_sum} overshoots left sum {left_sum} by more than one token"
            );
        }
    }

    #[test]
    fn raising_the_ratio_factor_never_adds_a_candidate(corpus in arb_corpus()) {
        let freqs = count_side_frequencies(&corpus, &StopwordList::builtin()).unwrap();
        let (left_2, right_2) = candidate_sets(&freqs, 2.0);
        let (left_3, right_3) = candidate_sets(&freqs, 3.0);
        prop_assert!(left_3.is_subset(&left_2));
        prop_assert!(right_3.is_subset(&right_2));
    }

    #[test]
    fn rebuilds_are_deterministic(corpus in arb_corpus()) {
        let freqs = count_side_frequencies(&corpus, &StopwordList::builtin()).unwrap();
        let config = VocabularyConfig { ratio_factor: 2.0, left_top_k: 5 };
        let a = build_vocabulary(&freqs, config, VocabularyProvenance::default()).unwrap();
        let b = build_vocabulary(&freqs, config, VocabularyProvenance::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn every_left_token_satisfies_the_ratio_rule(corpus in arb_corpus()) {
        let freqs = count_side_frequencies(&corpus, &StopwordList::builtin()).unwrap();
        let vocabulary = build_vocabulary(
            &freqs,
            VocabularyConfig::default(),
            VocabularyProvenance::default(),
        ).unwrap();
        let lt = freqs.left_total as f64;
        let rt = freqs.right_total as f64;
        for (token, &freq) in &vocabulary.left {
            let left_ratio = freq as f64 / lt;
            let right_ratio = freqs.right.get(token).copied().unwrap_or(0) as f64 / rt;
            prop_assert!(left_ratio > 2.0 * right_ratio, "token {token} violates the rule");
        }
        for (token, &freq) in &vocabulary.right {
            let right_ratio = freq as f64 / rt;
            let left_ratio = freqs.left.get(token).copied().unwrap_or(0) as f64 / lt;
            prop_assert!(right_ratio > 2.0 * left_ratio, "token {token} violates the rule");
        }
    }
}
