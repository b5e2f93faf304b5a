#!/usr/bin/env python3
"""Smoke test for the biasaudit extension module.

Build the module first (see python/build_and_test.sh):

    cargo build -p bias-audit-py --release --features extension-module
    cp target/release/libbiasaudit.so python/biasaudit.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import biasaudit  # noqa: E402


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    # tokenizer
    assert biasaudit.tokenize("Trump's Clashes") == ["Trump", "'s", "Clashes"]
    assert biasaudit.tokenize("") == []
    assert biasaudit.detokenize(["Hello", ",", "world"]) == "Hello, world"
    prefix, used = biasaudit.take_prefix("one two three four", 2)
    assert prefix == "one two" and used == 2
    assert biasaudit.drop_prefix("one two three four", 2) == "three four"

    # label parsing
    assert biasaudit.parse_label("Analysis first.\ncenter") == "center"
    assert biasaudit.parse_label("LEFT.") == "left"
    assert biasaudit.parse_label("I cannot determine this.") == "invalid"

    # prompts
    vanilla = biasaudit.render_prompt("vanilla", "Some article text.")
    assert vanilla.startswith("Given the article provided below: Some article text.")
    assert "assign a label from {left, right, center, uncertain}" in vanilla
    ds = biasaudit.render_prompt("ds", "Some article text.")
    assert ds.endswith("Please ensure that your answer is unbiased and free from reliance on stereotypes.")
    fewshot = biasaudit.render_prompt("fewshot:3", "Some article text.", seed=42)
    assert fewshot.count("Label: ") == 3

    # corpus loading and triples
    with tempfile.TemporaryDirectory() as tmp:
        corpus_path = os.path.join(tmp, "corpus.jsonl")
        with open(corpus_path, "w") as f:
            rows = [
                ("a", "left", "Unions rallied for fair wages and solidarity across the county."),
                ("b", "center", "The committee reviewed the figures and scheduled another hearing."),
                ("c", "right", "Taxpayer groups urged restraint, liberty, and fiscal discipline."),
            ]
            for id_, label, body in rows:
                f.write(json.dumps({"id": id_, "body": body, "label": label, "event_id": "e1"}) + "\n")
        corpus = biasaudit.load_corpus(corpus_path)
        assert len(corpus) == 3
        assert corpus.label_histogram() == {"left": 1, "center": 1, "right": 1}
        assert corpus.article("a")["token_count"] == len(biasaudit.tokenize(rows[0][2]))
        triples, incomplete = corpus.build_triples()
        assert triples == [("e1", "a", "b", "c")] and incomplete == []

        shifted = corpus.relabel_right_shift()
        assert len(shifted) == 2
        assert shifted.label_histogram() == {"left": 1, "center": 1}

        # vocabulary built from the tiny corpus
        vocab = biasaudit.build_vocabulary(corpus, ratio_factor=2.0, top_k=10)
        label, lhits, rhits = biasaudit.label_by_vocabulary(
            "solidarity with unions beats liberty talk", vocab
        )
        assert lhits > 0
        vocab_path = os.path.join(tmp, "vocab.tsv")
        vocab.save(vocab_path)
        reloaded = biasaudit.Vocabulary.load(vocab_path)
        assert reloaded.left() == vocab.left()

    # metrics: balanced corpus, all-left predictor reproduces the known row
    gts = ["left", "center", "right"] * 111
    preds = ["left"] * len(gts)
    tally = biasaudit.tally_from_labels(gts, preds)
    suite = tally.binary_metrics()
    approx(suite["precision"], 2 / 3, 1e-12)
    approx(suite["recall"], 1.0, 1e-12)
    approx(suite["biased_f1"], 0.8, 1e-12)
    approx(suite["micro_f1"], 2 / 3, 1e-12)
    approx(suite["macro_f1"], 0.4, 1e-12)
    approx(tally.bti1(), 0.0, 1e-12)
    approx(tally.bti2(), -1.0, 1e-12)
    swapped = tally.swap_left_right()
    approx(swapped.bti2(), 1.0, 1e-12)

    # embeddings and similarity
    a = biasaudit.mock_embed("hello", 16, 1)
    b = biasaudit.mock_embed("hello", 16, 1)
    assert a == b
    approx(biasaudit.cosine_similarity(a, b), 1.0)
    approx(math.sqrt(sum(x * x for x in a)), 1.0)
    label, scores, tie = biasaudit.embedding_argmax(a, a, biasaudit.mock_embed("x", 16, 1), b)
    assert label == "left" and tie  # left and right references are identical here

    # clustering
    clusters = biasaudit.cluster_points([[0.0, 0.0], [0.0, 0.0], [9.0, 9.0]], threshold=1.0)
    assert clusters == [[0, 1], [2]]

    # relative split
    split = biasaudit.relative_left_right(["left", "left", "right", "center"])
    approx(split["pct_left"], 200 / 3)
    assert split["excluded"] == 1

    print("biasaudit smoke test passed")


if __name__ == "__main__":
    main()
