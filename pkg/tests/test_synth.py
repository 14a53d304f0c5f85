import json
import math

import pytest

from altriage.records import Label, Pool, default_rules, pattern_match, preprocess
from altriage.synth import (
    CATEGORIES,
    CorpusSpec,
    OracleKey,
    SimulatedOracle,
    UnknownRecord,
    generate,
    write_corpus,
)


def test_generate_deterministic():
    spec = CorpusSpec(n_focused=150, n_deployment=150, seed=21)
    a_records, a_key, a_report = generate(spec)
    b_records, b_key, b_report = generate(spec)
    assert [r.to_json() for r in a_records] == [r.to_json() for r in b_records]
    assert a_key.to_json() == b_key.to_json()
    assert a_report.to_json() == b_report.to_json()


def test_write_corpus_byte_identical(tmp_path):
    spec = CorpusSpec(n_focused=80, n_deployment=120, seed=5)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    fa, da, ka, _ = write_corpus(spec, out_a)
    fb, db, kb, _ = write_corpus(spec, out_b)
    assert fa.read_bytes() == fb.read_bytes()
    assert da.read_bytes() == db.read_bytes()
    assert ka.read_bytes() == kb.read_bytes()


def test_prevalence_within_binomial_bound():
    n = 10_000
    p = 0.01
    spec = CorpusSpec(n_focused=10, n_deployment=n, prevalence_deployment=p, seed=3)
    records, key, _ = generate(spec)
    positives = sum(
        1
        for r in records
        if r.pool is Pool.DEPLOYMENT and key.labels[r.id] is Label.POSITIVE
    )
    sigma = math.sqrt(n * p * (1 - p))
    assert abs(positives - n * p) <= 3 * sigma


def test_category_tallies_match_record_recount():
    spec = CorpusSpec(n_focused=400, n_deployment=600, seed=13)
    records, key, report = generate(spec)
    assert sum(report.focused.values()) == 400
    assert sum(report.deployment.values()) == 600
    # confuser categories all represented at these sizes
    for cat in CATEGORIES:
        assert report.focused[cat] + report.deployment[cat] > 0, cat
    # positives in the report equal positives in the oracle key
    pos_report = sum(
        report.focused[c] + report.deployment[c] for c in CATEGORIES if c.startswith("positive")
    )
    assert pos_report == sum(1 for lab in key.labels.values() if lab is Label.POSITIVE)


def test_status_negatives_are_filter_rejected():
    rules = default_rules()
    spec = CorpusSpec(n_focused=300, n_deployment=300, seed=2)
    records, key, _ = generate(spec)
    for rec in records:
        prepared = preprocess(rec)
        if key.labels[rec.id] is Label.POSITIVE:
            continue
        # no negative may carry an exclusion phrase AND still pattern-match
        # unless another include mention exists in the body
        if any(p in prepared.clean_text for p in rules.exclude_phrases):
            stripped = prepared.clean_text
            for p in rules.exclude_phrases:
                stripped = stripped.replace(p, " ")
            if not any(t in stripped for t in rules.include_terms):
                assert not pattern_match(prepared, rules)


def test_flip_spans_present_in_positive_bodies():
    spec = CorpusSpec(n_focused=200, n_deployment=100, seed=7)
    records, key, _ = generate(spec)
    by_id = {r.id: r for r in records}
    assert key.flip_spans  # positives exist at these settings
    for rid, span in key.flip_spans.items():
        assert key.labels[rid] is Label.POSITIVE
        assert span.lower() in by_id[rid].raw_text.lower()


def test_spec_validation():
    with pytest.raises(ValueError):
        CorpusSpec(n_focused=0, n_deployment=10)
    with pytest.raises(ValueError):
        CorpusSpec(n_focused=10, n_deployment=10, prevalence_focused=1.5)
    with pytest.raises(ValueError):
        CorpusSpec(
            n_focused=10,
            n_deployment=10,
            status_share_of_keyword_negatives=0.7,
            recent_vax_share_of_keyword_negatives=0.4,
        )


def test_oracle_labels_and_memoized_noise():
    key = OracleKey(
        labels={"a": Label.POSITIVE, "b": Label.NEGATIVE},
        flip_spans={"a": "post flu vaccine"},
    )
    clean = SimulatedOracle(key, noise=0.0)
    assert clean.label("a") is Label.POSITIVE
    assert clean.label("b") is Label.NEGATIVE
    assert clean.flip_span("a") == "post flu vaccine"
    assert clean.flip_span("b") is None
    with pytest.raises(UnknownRecord):
        clean.label("missing")

    noisy = SimulatedOracle(key, noise=0.49, seed=1)
    first = [noisy.label("a") for _ in range(10)]
    assert len(set(first)) == 1  # a flipped answer stays flipped
    assert noisy.queries == 10


def test_oracle_noise_rate_bounds():
    with pytest.raises(ValueError):
        SimulatedOracle(OracleKey(labels={}, flip_spans={}), noise=0.5)


def test_oracle_key_file_round_trip(tmp_path):
    spec = CorpusSpec(n_focused=50, n_deployment=50, seed=4)
    _, _, key_path, _ = write_corpus(spec, tmp_path)
    oracle = SimulatedOracle.from_key_file(key_path)
    payload = json.loads(key_path.read_text())
    assert payload["seed"] == 4
    some_id = next(iter(payload["labels"]))
    assert oracle.label(some_id).value == payload["labels"][some_id]
