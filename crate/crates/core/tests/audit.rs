//! Prompt rendering, response parsing, and resumable sweep behaviour.

use std::sync::Arc;

use bias_audit_core::audit::{
    parse_label, parse_strategy_kind, render_prompt, run_audit, AuditJob, PromptStrategy,
    StrategyKind,
};
use bias_audit_core::corpus::{Article, BiasLabel, Corpus};
use bias_audit_core::gateway::{
    Gateway, GatewayConfig, MockBehavior, MockChatProvider, ResponseCache, RetryPolicy,
};
use bias_audit_core::templates::PromptTemplates;

use BiasLabel::{Center, Invalid, Left, Right, Uncertain};

// Hand-labeled fixture of response shapes observed from chat models. The
// expected labels define the parsing contract.
const RESPONSE_FIXTURE: &[(&str, BiasLabel)] = &[
    ("left", Left),
    ("Left", Left),
    ("  RIGHT  ", Right),
    ("center.", Center),
    ("\"uncertain\"", Uncertain),
    ("**Left**", Left),
    (
        "Analysis: the article criticizes the administration's policy and uses emotive language.\ncenter",
        Center,
    ),
    ("The article shows strong support for tax cuts and deregulation.\n\nright", Right),
    ("label: left", Left),
    ("The assigned label is: Center", Center),
    ("I would classify this as uncertain.", Uncertain),
    ("As an AI, I can't determine political leaning.", Invalid),
    ("I cannot provide a political assessment of this text.", Invalid),
    ("I'm sorry, but I can't help with that request.", Invalid),
    ("The article is neither left nor right.", Invalid),
    ("It could be left or center depending on framing.", Invalid),
    ("LEFT\n", Left),
    ("right\n\n\n", Right),
    ("Label:\ncenter", Center),
    ("The text leans left.\nleft", Left),
    ("Based on my analysis, the correct label is right.", Right),
    ("- left", Left),
    ("1. center", Center),
    ("The label is \"Right\".", Right),
    ("uncertain — the political orientation could not be determined", Uncertain),
    ("This is a balanced piece. center", Center),
    ("", Invalid),
    ("   \n\n", Invalid),
    ("The article discusses the budget debate in Congress.", Invalid),
    ("left right center uncertain", Invalid),
    ("Centrist viewpoints dominate the piece.", Invalid),
    (
        "The outlet is known for its left-leaning coverage, but this piece is center.\ncenter",
        Center,
    ),
    ("Sure! Here's my analysis:\nThe article uses loaded terms.\nFinal answer: left", Left),
    ("La etiqueta es: izquierda", Invalid),
    ("right-leaning", Right),
    ("The piece is written from a progressive angle.\nLabel: Left", Left),
    ("# Verdict\n\ncenter", Center),
    ("察覺不到政治傾向", Invalid),
    ("Respuesta: center", Center),
    (
        "The article appears to lean to the political left based on its framing of the protest.",
        Left,
    ),
    ("Uncertain. The text lacks clear markers.", Uncertain),
    ("analysis:\n- quotes both sides\n- neutral tone\nconclusion: center", Center),
    ("<label>right</label>", Right),
    ("json\n{\"label\": \"center\"}", Center),
    ("Es un artículo de centro.", Invalid),
    ("I refuse to engage with political content.", Invalid),
    ("The correct classification is CENTER, as the piece merely reports facts.", Center),
    ("LEFT.", Left),
    ("право", Invalid),
    ("This looks uncertain to me, though it could also be read as center.", Invalid),
];

#[test]
fn parse_label_fixture_corpus() {
    assert_eq!(RESPONSE_FIXTURE.len(), 50);
    for (raw, expected) in RESPONSE_FIXTURE {
        assert_eq!(parse_label(raw), *expected, "parse_label({raw:?})");
    }
}

#[test]
fn parse_label_is_idempotent_on_canonical_labels() {
    for label in [Left, Center, Right, Uncertain] {
        for variant in [
            label.as_str().to_string(),
            label.as_str().to_uppercase(),
            format!("  {}  ", label.display_name()),
            format!("\n{}\n", label.as_str()),
        ] {
            assert_eq!(parse_label(&variant), label, "variant {variant:?}");
        }
    }
}

fn article() -> Article {
    Article::new(
        "a1",
        "The city council approved the new transit budget on Tuesday after a lengthy debate.",
        Center,
    )
    .with_title("Council Approves Budget")
}

#[test]
fn vanilla_prompt_contains_article_and_instruction() {
    let templates = PromptTemplates::builtin();
    let prompt = render_prompt(&PromptStrategy::vanilla(), &article(), &templates).unwrap();
    assert!(prompt.starts_with("Given the article provided below: The city council"));
    assert!(prompt.contains("assign a label from {left, right, center, uncertain}"));
    assert!(prompt.ends_with("output a new single line containing only the assigned label."));
    // body only by default; the title needs an explicit flag
    assert!(!prompt.contains("Council Approves Budget"));
}

#[test]
fn include_title_flag_prepends_title() {
    let templates = PromptTemplates::builtin();
    let mut strategy = PromptStrategy::vanilla();
    strategy.include_title = true;
    let prompt = render_prompt(&strategy, &article(), &templates).unwrap();
    assert!(prompt.contains("Council Approves Budget\nThe city council"));
}

#[test]
fn ds_appends_exact_sentence_as_final_line() {
    let templates = PromptTemplates::builtin();
    let strategy = PromptStrategy::new(StrategyKind::DebiasStatement);
    let prompt = render_prompt(&strategy, &article(), &templates).unwrap();
    let vanilla = render_prompt(&PromptStrategy::vanilla(), &article(), &templates).unwrap();
    assert_eq!(
        prompt,
        format!(
            "{vanilla}\nPlease ensure that your answer is unbiased and free from reliance on stereotypes."
        )
    );
}

#[test]
fn ble_prepends_the_three_definitions() {
    let templates = PromptTemplates::builtin();
    let strategy = PromptStrategy::new(StrategyKind::BiasLabelExplanation);
    let prompt = render_prompt(&strategy, &article(), &templates).unwrap();
    assert!(prompt.starts_with("Left-wing politics describes the range"));
    assert!(prompt.contains("Right-wing politics is the range"));
    assert!(prompt.contains("Centrism is a political outlook"));
    assert!(prompt.contains("Given the article provided below:"));
}

#[test]
fn fewshot_draws_whole_triples_deterministically() {
    let templates = PromptTemplates::builtin();
    let strategy = PromptStrategy::new(StrategyKind::FewShot(3)).with_seed(42);
    let a = render_prompt(&strategy, &article(), &templates).unwrap();
    let b = render_prompt(&strategy, &article(), &templates).unwrap();
    assert_eq!(a, b, "rendering must be pure");
    // three examples, one per label, from one pool triple
    assert_eq!(a.matches("Text: ").count(), 3);
    assert_eq!(a.matches("Label: Left").count(), 1);
    assert_eq!(a.matches("Label: Center").count(), 1);
    assert_eq!(a.matches("Label: Right").count(), 1);

    let other_seed = PromptStrategy::new(StrategyKind::FewShot(3)).with_seed(7);
    let c = render_prompt(&other_seed, &article(), &templates).unwrap();
    assert_ne!(a, c, "different seeds should usually draw different triples");
}

#[test]
fn fewshot_rejects_oversized_k() {
    let templates = PromptTemplates::builtin();
    let strategy = PromptStrategy::new(StrategyKind::FewShot(13));
    assert!(render_prompt(&strategy, &article(), &templates).is_err());
}

#[test]
fn composite_applies_parts_in_order() {
    let templates = PromptTemplates::builtin();
    let strategy = PromptStrategy::new(StrategyKind::Composite(vec![
        StrategyKind::BiasLabelExplanation,
        StrategyKind::DebiasStatement,
    ]));
    let prompt = render_prompt(&strategy, &article(), &templates).unwrap();
    assert!(prompt.starts_with("Left-wing politics"));
    assert!(prompt.ends_with("free from reliance on stereotypes."));

    let dup = PromptStrategy::new(StrategyKind::Composite(vec![
        StrategyKind::DebiasStatement,
        StrategyKind::DebiasStatement,
    ]));
    assert!(render_prompt(&dup, &article(), &templates).is_err());
}

#[test]
fn strategy_flag_parsing() {
    assert_eq!(parse_strategy_kind("vanilla").unwrap(), StrategyKind::Vanilla);
    assert_eq!(parse_strategy_kind("fewshot:9").unwrap(), StrategyKind::FewShot(9));
    assert_eq!(
        parse_strategy_kind("ble+ds").unwrap(),
        StrategyKind::Composite(vec![
            StrategyKind::BiasLabelExplanation,
            StrategyKind::DebiasStatement
        ])
    );
    assert!(parse_strategy_kind("chain-of-thought").is_err());
}

fn small_corpus(n: usize) -> Corpus {
    let labels = [Left, Center, Right];
    let articles: Vec<Article> = (0..n)
        .map(|i| {
            Article::new(
                format!("a{i:03}"),
                format!("Synthetic article number {i} about the council budget debate."),
                labels[i % 3],
            )
        })
        .collect();
    Corpus::new("small", articles).unwrap()
}

fn mock_gateway(dir: &std::path::Path, refusal_rate: f64) -> Gateway {
    let provider = Arc::new(MockChatProvider::new(11, MockBehavior::Labels { refusal_rate }));
    Gateway::new(provider, GatewayConfig { concurrency: 4, retry: RetryPolicy::fast(2) })
        .with_cache(ResponseCache::open(dir.join("cache")).unwrap())
}

#[test]
fn sweep_covers_corpus_and_resumes_without_provider_calls() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(30);
    let templates = PromptTemplates::builtin();
    let gateway = mock_gateway(dir.path(), 0.0);
    let job = AuditJob::new(&gateway, &templates, "mock-model", PromptStrategy::vanilla());
    let run_dir = dir.path().join("run");

    let (records, stats) = run_audit(&job, &corpus, &run_dir).unwrap();
    assert_eq!(records.len(), 30);
    assert_eq!(stats.newly_run, 30);
    assert_eq!(stats.invalid, 0, "mock labels always parse");
    assert_eq!(stats.provider_calls, 30);
    let logged: std::collections::BTreeSet<String> =
        records.iter().map(|r| r.article_id.clone()).collect();
    let ids: std::collections::BTreeSet<String> =
        corpus.iter().map(|a| a.id.clone()).collect();
    assert_eq!(logged, ids, "run-log completeness");

    // rerun: everything is skipped via the log, zero provider calls
    let (again, stats2) = run_audit(&job, &corpus, &run_dir).unwrap();
    assert_eq!(stats2.newly_run, 0);
    assert_eq!(stats2.skipped_logged, 30);
    assert_eq!(stats2.provider_calls, 0);
    assert_eq!(records.len(), again.len());
    for (a, b) in records.iter().zip(&again) {
        assert_eq!(a.article_id, b.article_id);
        assert_eq!(a.raw_response, b.raw_response);
        assert_eq!(a.parsed, b.parsed);
    }
}

#[test]
fn refusing_mock_yields_matching_invalid_rate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(300);
    let templates = PromptTemplates::builtin();
    let gateway = mock_gateway(dir.path(), 0.2);
    let job = AuditJob::new(&gateway, &templates, "mock-model", PromptStrategy::vanilla());
    let (_, stats) = run_audit(&job, &corpus, &dir.path().join("run")).unwrap();
    assert!(
        (stats.invalid_rate - 0.2).abs() < 0.08,
        "invalid rate {} should be near the mock refusal rate 0.2",
        stats.invalid_rate
    );
}

#[test]
fn mismatched_log_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(3);
    let templates = PromptTemplates::builtin();
    let gateway = mock_gateway(dir.path(), 0.0);
    let run_dir = dir.path().join("run");
    let job = AuditJob::new(&gateway, &templates, "mock-model", PromptStrategy::vanilla());
    run_audit(&job, &corpus, &run_dir).unwrap();

    let other = AuditJob::new(&gateway, &templates, "other-model", PromptStrategy::vanilla());
    let err = run_audit(&other, &corpus, &run_dir).unwrap_err();
    assert!(err.to_string().contains("run log"), "got: {err}");
}
