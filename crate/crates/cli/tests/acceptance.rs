//! Acceptance suite. Each test covers one numbered criterion, enforces its
//! runtime budget, and prints one pass line (visible with --nocapture).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bias_audit_core::audit::{render_prompt, PromptStrategy, StrategyKind};
use bias_audit_core::cluster::{ClusterConfig, Linkage};
use bias_audit_core::continuation::{embedding_argmax, label_by_embedding, truncated_references};
use bias_audit_core::corpus::{drop_prefix, Article, BiasLabel, Corpus, EventTriple};
use bias_audit_core::gateway::{
    mock_embed, EmbeddingVector, Gateway, GatewayConfig, MockBehavior, MockChatProvider,
    MockEmbeddingProvider,
};
use bias_audit_core::lexicon::{
    build_vocabulary, count_side_frequencies, StopwordList, VocabularyConfig,
    VocabularyProvenance,
};
use bias_audit_core::metrics::{
    binary_metrics, bti1, bti2, ConfusionTally, GROUND_TRUTHS, PREDICTIONS,
};
use bias_audit_core::templates::PromptTemplates;
use bias_audit_core::tokenize::tokenize;
use bias_audit_core::topics::{cluster_indicators, Indicator};

fn assert_runtime(start: Instant, budget: Duration, criterion: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "{criterion} ran {elapsed:?}, budget {budget:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 1: metric analytics against the published all-left row.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_metric_analytics_reference_row() {
    let start = Instant::now();
    let labels = [BiasLabel::Left, BiasLabel::Center, BiasLabel::Right];
    let articles: Vec<Article> = (0..999)
        .map(|i| Article::new(format!("a{i:04}"), format!("body {i}"), labels[i % 3]))
        .collect();
    let corpus = Corpus::new("balanced999", articles).unwrap();
    assert_eq!(corpus.len(), 999);

    let records: Vec<bias_audit_core::audit::PredictionRecord> = corpus
        .iter()
        .map(|a| bias_audit_core::audit::PredictionRecord {
            article_id: a.id.clone(),
            model_id: "all-left".into(),
            strategy: "vanilla".into(),
            raw_response: "left".into(),
            parsed: BiasLabel::Left,
            request_digest: String::new(),
            timestamp: 0,
        })
        .collect();
    let tally = bias_audit_core::metrics::tally(&records, &corpus).unwrap();

    let suite = binary_metrics(&tally).unwrap();
    let checks = [
        ("Pre", suite.precision * 100.0, 66.7),
        ("Rec", suite.recall * 100.0, 100.0),
        ("BiF1", suite.biased_f1 * 100.0, 80.0),
        ("MiF1", suite.micro_f1 * 100.0, 66.7),
        ("MaF1", suite.macro_f1 * 100.0, 40.0),
    ];
    for (name, got, want) in checks {
        assert!((got - want).abs() <= 0.1, "{name}: got {got:.2}, want {want} ±0.1");
    }
    let v1 = bti1(&tally).unwrap();
    let v2 = bti2(&tally).unwrap();
    assert!((v1 - 0.0).abs() <= 0.1 / 100.0 * 100.0, "BTI-1 {v1}");
    assert!(v1.abs() <= 0.1, "BTI-1 {v1} vs 0.00 ±0.1");
    assert!((v2 - (-1.0)).abs() <= 0.1, "BTI-2 {v2} vs -1.00 ±0.1");

    assert_runtime(start, Duration::from_secs(1), "criterion 1");
    println!("ACCEPTANCE 1 (metric analytics vs reference row): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 2: BTI bounds, exact swap antisymmetry, diagonal zero.
// ---------------------------------------------------------------------------

fn random_tally(rng: &mut ChaCha8Rng) -> ConfusionTally {
    let mut tally = ConfusionTally::new();
    for g in GROUND_TRUTHS {
        for p in PREDICTIONS {
            for _ in 0..rng.random_range(0..12u32) {
                tally.add(g, p).unwrap();
            }
        }
    }
    tally
}

#[test]
fn acceptance_2_bti_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut defined = 0usize;
    for _ in 0..1500 {
        let tally = random_tally(&mut rng);
        let swapped = tally.swap_left_right();
        match (bti1(&tally), bti1(&swapped)) {
            (Ok(a), Ok(b)) => {
                assert!((-1.0..=1.0).contains(&a), "bti1 {a} out of bounds");
                assert!(a == -b, "bti1 swap: {a} vs {b}");
                defined += 1;
            }
            (Err(_), Err(_)) => {}
            other => panic!("bti1 definedness differs after swap: {other:?}"),
        }
        match (bti2(&tally), bti2(&swapped)) {
            (Ok(a), Ok(b)) => {
                assert!((-1.0..=1.0).contains(&a), "bti2 {a} out of bounds");
                assert!(a == -b, "bti2 swap: {a} vs {b}");
            }
            (Err(_), Err(_)) => {}
            other => panic!("bti2 definedness differs after swap: {other:?}"),
        }
    }
    assert!(defined > 1000, "only {defined} tallies had defined bti1");

    for n in [1u64, 7, 333] {
        let mut diagonal = ConfusionTally::new();
        for g in GROUND_TRUTHS {
            for _ in 0..n {
                diagonal.add(g, g).unwrap();
            }
        }
        assert_eq!(bti1(&diagonal).unwrap(), 0.0);
        assert_eq!(bti2(&diagonal).unwrap(), 0.0);
    }

    assert_runtime(start, Duration::from_secs(5), "criterion 2");
    println!("ACCEPTANCE 2 (BTI bounds, swap antisymmetry, diagonal zero): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 3: vocabulary construction equals a brute-force oracle.
// ---------------------------------------------------------------------------

const ORACLE_WORDS: &[&str] = &[
    "union", "market", "welfare", "liberty", "climate", "border", "justice", "tradition",
    "reform", "security", "fairness", "growth", "tax", "freedom", "community", "order",
    "the", "of", "and", "a", // stopwords mixed in
];

fn random_lexicon_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let mut articles = Vec::new();
    for (side, label) in [("l", BiasLabel::Left), ("r", BiasLabel::Right)] {
        for i in 0..rng.random_range(2..6usize) {
            let len = rng.random_range(20..120usize);
            let body: Vec<&str> = (0..len)
                .map(|_| ORACLE_WORDS[rng.random_range(0..ORACLE_WORDS.len())])
                .collect();
            articles.push(Article::new(format!("{side}{i}"), body.join(" "), label));
        }
    }
    Corpus::new("oracle", articles).unwrap()
}

/// Brute-force vocabulary oracle: independent recount (per-article maps
/// merged) and independent selection (full enumeration, explicit sort,
/// greedy scan). Shares only the tokenizer and the ratio formula with the
/// implementation.
fn vocabulary_oracle(
    corpus: &Corpus,
    stopwords: &StopwordList,
    ratio_factor: f64,
    top_k: usize,
) -> (BTreeMap<String, u64>, BTreeMap<String, u64>) {
    let mut left: BTreeMap<String, u64> = BTreeMap::new();
    let mut right: BTreeMap<String, u64> = BTreeMap::new();
    for article in corpus.iter() {
        let mut local: BTreeMap<String, u64> = BTreeMap::new();
        for token in tokenize(&article.body) {
            let token = token.to_lowercase();
            if token.chars().any(|c| c.is_alphanumeric()) && !stopwords.contains(&token) {
                *local.entry(token).or_insert(0) += 1;
            }
        }
        let target = match article.ground_truth {
            BiasLabel::Left => &mut left,
            BiasLabel::Right => &mut right,
            _ => continue,
        };
        for (token, count) in local {
            *target.entry(token).or_insert(0) += count;
        }
    }
    let left_total: u64 = left.values().sum();
    let right_total: u64 = right.values().sum();

    let mut left_candidates: Vec<(String, u64)> = left
        .iter()
        .filter(|(token, &freq)| {
            let lr = freq as f64 / left_total as f64;
            let rr = right.get(*token).copied().unwrap_or(0) as f64 / right_total as f64;
            lr > ratio_factor * rr
        })
        .map(|(t, &f)| (t.clone(), f))
        .collect();
    left_candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    left_candidates.truncate(top_k);
    let left_sum: u64 = left_candidates.iter().map(|(_, f)| f).sum();

    let mut right_candidates: Vec<(String, u64)> = right
        .iter()
        .filter(|(token, &freq)| {
            let rr = freq as f64 / right_total as f64;
            let lr = left.get(*token).copied().unwrap_or(0) as f64 / left_total as f64;
            rr > ratio_factor * lr
        })
        .map(|(t, &f)| (t.clone(), f))
        .collect();
    right_candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut right_selected: Vec<(String, u64)> = Vec::new();
    let mut sum = 0u64;
    for (token, freq) in right_candidates {
        if sum >= left_sum {
            break;
        }
        sum += freq;
        right_selected.push((token, freq));
    }
    (
        left_candidates.into_iter().collect(),
        right_selected.into_iter().collect(),
    )
}

#[test]
fn acceptance_3_lexicon_oracle_equivalence() {
    let start = Instant::now();
    let stopwords = StopwordList::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(333);
    for case in 0..50 {
        let corpus = random_lexicon_corpus(&mut rng);
        let top_k = rng.random_range(1..10usize);
        let freqs = count_side_frequencies(&corpus, &stopwords).unwrap();
        let vocabulary = build_vocabulary(
            &freqs,
            VocabularyConfig { ratio_factor: 2.0, left_top_k: top_k },
            VocabularyProvenance::default(),
        )
        .unwrap();
        let (oracle_left, oracle_right) =
            vocabulary_oracle(&corpus, &stopwords, 2.0, top_k);
        assert_eq!(vocabulary.left, oracle_left, "case {case}: left side diverges");
        assert_eq!(vocabulary.right, oracle_right, "case {case}: right side diverges");

        // invariants: disjointness and the frequency-sum window
        for token in vocabulary.left.keys() {
            assert!(!vocabulary.right.contains_key(token), "case {case}: {token} on both sides");
        }
        let left_sum = vocabulary.left_sum();
        let right_sum = vocabulary.right_sum();
        if vocabulary.flags.right_sum_shortfall {
            assert!(right_sum < left_sum, "case {case}");
        } else if left_sum > 0 {
            let max_right = vocabulary.right.values().copied().max().unwrap_or(0);
            assert!(right_sum >= left_sum, "case {case}");
            assert!(right_sum < left_sum + max_right.max(1), "case {case}");
        }
    }
    assert_runtime(start, Duration::from_secs(10), "criterion 3");
    println!("ACCEPTANCE 3 (vocabulary equals brute-force oracle, 50 corpora): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 4: embedding labeler equals a direct argmax recomputation.
// ---------------------------------------------------------------------------

fn random_words(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len)
        .map(|_| ORACLE_WORDS[rng.random_range(0..16)])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Cosine recomputed with an explicit loop, independent of the gateway's
/// implementation.
fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

#[test]
fn acceptance_4_embedding_labeler_oracle() {
    let start = Instant::now();
    const SEED: u64 = 77;
    const DIM: usize = 16;
    let chat = Arc::new(MockChatProvider::new(SEED, MockBehavior::Labels { refusal_rate: 0.0 }));
    let embedder = Arc::new(MockEmbeddingProvider::new(SEED, DIM));
    let gateway = Gateway::new(chat, GatewayConfig::default()).with_embedder(embedder);

    let mut rng = ChaCha8Rng::seed_from_u64(4040);
    for case in 0..100 {
        let n = rng.random_range(3..25usize);
        let bodies: Vec<String> = (0..3)
            .map(|_| {
                let len = rng.random_range(n + 5..n + 80);
                random_words(&mut rng, len)
            })
            .collect();
        let articles = vec![
            Article::new("l", bodies[0].clone(), BiasLabel::Left).with_event("e"),
            Article::new("c", bodies[1].clone(), BiasLabel::Center).with_event("e"),
            Article::new("r", bodies[2].clone(), BiasLabel::Right).with_event("e"),
        ];
        let corpus = Corpus::new("case", articles).unwrap();
        let triple = EventTriple {
            event_id: "e".into(),
            left_id: "l".into(),
            center_id: "c".into(),
            right_id: "r".into(),
        };
        let suffix_len = rng.random_range(10..60);
        let suffix = random_words(&mut rng, suffix_len);

        // implementation route
        let references = truncated_references(&corpus, &triple, n).unwrap();
        let matched = label_by_embedding(&gateway, &suffix, &references).unwrap();

        // oracle route: re-derive every embedding and recompute the argmax
        let suffix_vec = mock_embed(&suffix, DIM, SEED);
        let mut best_label = None;
        let mut best_score = f64::NEG_INFINITY;
        for (label, body) in [
            (BiasLabel::Left, &bodies[0]),
            (BiasLabel::Center, &bodies[1]),
            (BiasLabel::Right, &bodies[2]),
        ] {
            let reference = drop_prefix(body, n);
            assert!(!reference.is_empty());
            let reference_vec = mock_embed(&reference, DIM, SEED);
            let score = oracle_cosine(suffix_vec.values(), reference_vec.values());
            if score > best_score {
                best_score = score;
                best_label = Some(label);
            }
        }
        assert_eq!(matched.label, best_label.unwrap(), "case {case}");
        assert!(
            (matched.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - best_score).abs()
                < 1e-9,
            "case {case}: best scores diverge"
        );

        // scale invariance: x1000 on the reference vectors cannot change the argmax
        let scale = |v: &EmbeddingVector| -> Vec<f64> {
            v.values().iter().map(|x| x * 1000.0).collect()
        };
        let left_vec = mock_embed(&references.left, DIM, SEED);
        let center_vec = mock_embed(&references.center, DIM, SEED);
        let right_vec = mock_embed(&references.right, DIM, SEED);
        let scaled = embedding_argmax(
            suffix_vec.values(),
            [&scale(&left_vec)[..], &scale(&center_vec)[..], &scale(&right_vec)[..]],
        )
        .unwrap();
        assert_eq!(scaled.label, matched.label, "case {case}: scaling changed the label");
    }
    assert_runtime(start, Duration::from_secs(5), "criterion 4");
    println!("ACCEPTANCE 4 (embedding labeler equals direct argmax, 100 cases): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 5: clustering equals a brute-force agglomerative oracle.
// ---------------------------------------------------------------------------

/// Recomputes the ward linkage distance from raw members each step (no
/// Lance-Williams recurrence): sqrt(2ab/(a+b)) * ||mean_a - mean_b||.
fn oracle_ward_distance(points: &[Vec<f64>], a: &[usize], b: &[usize]) -> f64 {
    let dim = points[0].len();
    let mean = |cluster: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; dim];
        for &i in cluster {
            for d in 0..dim {
                m[d] += points[i][d];
            }
        }
        for v in &mut m {
            *v /= cluster.len() as f64;
        }
        m
    };
    let ma = mean(a);
    let mb = mean(b);
    let mut acc = 0.0;
    for d in 0..dim {
        let diff = ma[d] - mb[d];
        acc += diff * diff;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    (2.0 * na * nb / (na + nb)).sqrt() * acc.sqrt()
}

fn oracle_agglomerative(points: &[Vec<f64>], threshold: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    loop {
        if clusters.len() < 2 {
            break;
        }
        // clusters stay sorted by minimum member, so list order is identity order
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let d = oracle_ward_distance(points, &clusters[i], &clusters[j]);
                match best {
                    Some((bd, bi, bj)) if d > bd || (d == bd && (i, j) >= (bi, bj)) => {}
                    _ => best = Some((d, i, j)),
                }
            }
        }
        let (d, i, j) = best.unwrap();
        if d > threshold {
            break;
        }
        let merged_b = clusters.remove(j);
        clusters[i].extend(merged_b);
        clusters[i].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
    }
    clusters
}

#[test]
fn acceptance_5_clustering_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for case in 0..100 {
        let n = rng.random_range(2..=16usize);
        let dim = rng.random_range(2..=8usize);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect())
            .collect();
        let threshold = rng.random_range(0.5..5.0);

        let indicators: Vec<Indicator> = (0..n)
            .map(|i| Indicator {
                id: format!("i{i}"),
                article_id: format!("a{i}"),
                text: format!("indicator {i}"),
            })
            .collect();
        let embeddings: Vec<EmbeddingVector> = points
            .iter()
            .map(|p| EmbeddingVector::new(p.clone(), "oracle").unwrap())
            .collect();
        let config = ClusterConfig {
            linkage: Linkage::Ward,
            threshold,
            ..ClusterConfig::default()
        };
        let clusters = cluster_indicators(&indicators, &embeddings, &config).unwrap();
        let got: Vec<Vec<usize>> = clusters
            .iter()
            .map(|c| {
                c.indicator_ids
                    .iter()
                    .map(|id| id[1..].parse::<usize>().unwrap())
                    .collect()
            })
            .collect();
        let want = oracle_agglomerative(&points, threshold);
        assert_eq!(got, want, "case {case} (n={n}, dim={dim}, threshold={threshold:.3})");

        // threshold monotonicity across five thresholds
        let mut previous = usize::MAX;
        for factor in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let config = ClusterConfig {
                linkage: Linkage::Ward,
                threshold: threshold * factor,
                ..ClusterConfig::default()
            };
            let count = cluster_indicators(&indicators, &embeddings, &config).unwrap().len();
            assert!(count <= previous, "case {case}: monotonicity broke at {factor}");
            previous = count;
        }
    }
    assert_runtime(start, Duration::from_secs(30), "criterion 5");
    println!("ACCEPTANCE 5 (clustering equals brute-force oracle, 100 sets): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 6: end-to-end mock pipeline over the 30-article fixture.
// ---------------------------------------------------------------------------

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bias-audit")
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn fixture_corpus() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/corpus30.jsonl")
        .display()
        .to_string()
}

#[test]
fn acceptance_6_end_to_end_mock_pipeline() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let cache_dir = dir.path().join("cache");
    let corpus = fixture_corpus();
    let base = [
        "--mock",
        "--model",
        "mock-model",
        "--seed",
        "11",
        "--corpus",
        corpus.as_str(),
    ];

    // audit
    let out = run_cli(
        &[&base[..], &["--cache-dir", cache_dir.to_str().unwrap(), "audit", "--run-dir", run_dir.to_str().unwrap()]].concat(),
    );
    assert!(out.status.success(), "audit failed: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["manifest.json", "predictions.jsonl", "confusion.tsv", "metrics.tsv", "bti.tsv"] {
        assert!(run_dir.join(file).exists(), "missing report file {file}");
    }

    // confusion row sums equal 30
    let confusion = fs::read_to_string(run_dir.join("confusion.tsv")).unwrap();
    assert!(confusion.starts_with("# run: "), "report must name its manifest");
    let mut total = 0u64;
    for line in confusion.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cells: Vec<&str> = line.split('\t').collect();
        let row_total: u64 = cells[6].parse().unwrap();
        let row_sum: u64 = cells[1..6].iter().map(|c| c.parse::<u64>().unwrap()).sum();
        assert_eq!(row_total, row_sum);
        total += row_total;
    }
    assert_eq!(total, 30, "confusion rows must cover all 30 articles");

    // snapshot report bytes for the regenerability check
    let report_snapshot: Vec<(String, Vec<u8>)> =
        ["confusion.tsv", "confusion.json", "metrics.tsv", "bti.tsv", "metrics.json", "bti.json"]
            .iter()
            .map(|f| (f.to_string(), fs::read(run_dir.join(f)).unwrap()))
            .collect();

    // topics (latent, mock indicators + embeddings)
    let out = run_cli(
        &[&base[..], &["--cache-dir", cache_dir.to_str().unwrap(), "topics", "--run-dir", run_dir.to_str().unwrap()]].concat(),
    );
    assert!(out.status.success(), "topics failed: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["indicators.jsonl", "clusters.jsonl", "topic_assignment.json"] {
        assert!(run_dir.join(file).exists(), "missing topic file {file}");
    }

    // reports
    let out = run_cli(
        &[&base[..], &["report", "topics", "--run-dir", run_dir.to_str().unwrap()]].concat(),
    );
    assert!(out.status.success(), "report topics failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("per_topic_bti.tsv").exists());
    assert!(run_dir.join("topic_ranking.tsv").exists());

    // rerun the audit: zero provider calls (instrumented counter in stats)
    let out = run_cli(
        &[&base[..], &["--cache-dir", cache_dir.to_str().unwrap(), "audit", "--run-dir", run_dir.to_str().unwrap()]].concat(),
    );
    assert!(out.status.success(), "rerun failed: {}", String::from_utf8_lossy(&out.stderr));
    let stats: serde_json::Value =
        serde_json::from_slice(&fs::read(run_dir.join("last_run_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["provider_calls"], 0, "rerun must not reach the provider");
    assert_eq!(stats["newly_run"], 0);
    assert_eq!(stats["skipped_logged"], 30);

    // reports regenerate byte-identically from the logs
    for (name, bytes) in report_snapshot {
        assert_eq!(fs::read(run_dir.join(&name)).unwrap(), bytes, "{name} changed on rerun");
    }

    assert_runtime(start, Duration::from_secs(10), "criterion 6");
    println!("ACCEPTANCE 6 (end-to-end mock pipeline, rerun untouched): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 7: rendered prompts byte-match the golden files.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_prompt_fidelity_golden_files() {
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let article = Article::new(
        "golden",
        "The city council approved the new transit budget on Tuesday after a lengthy debate.",
        BiasLabel::Center,
    );
    let templates = PromptTemplates::builtin();
    let cases: [(&str, StrategyKind); 4] = [
        ("vanilla.txt", StrategyKind::Vanilla),
        ("ble.txt", StrategyKind::BiasLabelExplanation),
        ("ds.txt", StrategyKind::DebiasStatement),
        ("fewshot3.txt", StrategyKind::FewShot(3)),
    ];
    for (file, kind) in cases {
        let strategy = PromptStrategy::new(kind).with_seed(42);
        let rendered = render_prompt(&strategy, &article, &templates).unwrap();
        let golden = fs::read_to_string(golden_dir.join(file)).unwrap();
        assert_eq!(rendered.as_bytes(), golden.as_bytes(), "{file} diverges byte-wise");
    }
    println!("ACCEPTANCE 7 (prompt fidelity, byte-matched golden files): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 8: live-model numbers are declared not desk-reproducible; the
// replication harness compares against them without gating.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_8_replication_harness_declared() {
    use bias_audit_core::reference::{
        reference_metrics, REFERENCE_METRICS, REFERENCE_SCALE, REFERENCE_SPLITS,
    };
    // the published values ship with the artifact...
    assert!(REFERENCE_METRICS.len() >= 15);
    assert_eq!(REFERENCE_SPLITS.len(), 20);
    assert!(!REFERENCE_SCALE.is_empty());
    let vanilla = reference_metrics("strategies:vanilla").unwrap();
    assert_eq!(vanilla.bti1, 0.06);
    assert_eq!(vanilla.biased_f1, 26.2);

    // ...and the harness emits a side-by-side report, no pass/fail gating
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let cache_dir = dir.path().join("cache");
    let corpus = fixture_corpus();
    let out = run_cli(&[
        "--mock",
        "--corpus",
        corpus.as_str(),
        "--cache-dir",
        cache_dir.to_str().unwrap(),
        "audit",
        "--run-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_cli(&[
        "--corpus",
        corpus.as_str(),
        "report",
        "compare",
        "--run-dir",
        run_dir.to_str().unwrap(),
        "--reference",
        "strategies:vanilla",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let compare = fs::read_to_string(run_dir.join("compare_strategies_vanilla.tsv")).unwrap();
    assert!(compare.contains("# run: "), "comparison must name its manifest");
    assert!(compare.contains("metric\tcomputed\treference\tdelta"));
    assert!(compare.contains("bti1"));
    assert!(compare.contains("biased_f1"));
    let lower = compare.to_lowercase();
    assert!(!lower.contains("pass") && !lower.contains("fail"), "comparison must not gate");

    let out = run_cli(&["report", "compare", "--run-dir", ".", "--list"]);
    assert!(out.status.success());
    let listing = String::from_utf8_lossy(&out.stdout);
    assert!(listing.contains("strategies:vanilla"));
    assert!(listing.contains("continuation:embedding"));

    println!("ACCEPTANCE 8 (replication harness, side-by-side without gating): PASS");
}
