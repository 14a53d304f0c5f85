import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from altriage.records import (
    EmptyAfterStrip,
    FilterRuleSet,
    InvalidRecord,
    Label,
    LabelSource,
    Pool,
    RecordStore,
    Sex,
    TriageRecord,
    collapse_ws,
    default_rules,
    keyword_filter,
    pattern_match,
    preprocess,
    read_records,
    rejection_reason,
    write_records,
)
from altriage.synth import CorpusSpec, generate

from conftest import note


def test_preprocess_prefix_and_collapse():
    rec = TriageRecord(id="a", raw_text="Chest  pain", age=24, sex=Sex.MALE)
    assert preprocess(rec).clean_text == "24 male chest pain"


def test_preprocess_missing_fields():
    rec = TriageRecord(id="b", raw_text="rash")
    assert preprocess(rec).clean_text == "unk unk rash"


def test_preprocess_strip_to_nothing():
    rec = TriageRecord(id="c", raw_text="[triage note]")
    with pytest.raises(EmptyAfterStrip):
        preprocess(rec, strip_patterns=["[triage note]"])


def test_preprocess_idempotent_on_clean_body():
    rec = TriageRecord(id="d", raw_text="Dizzy  spells,   worse today", age=70, sex=Sex.FEMALE)
    once = preprocess(rec)
    again = preprocess(TriageRecord(id="d", raw_text=once.clean_text.split(" ", 2)[2], age=70, sex=Sex.FEMALE))
    assert once.clean_text == again.clean_text


@given(st.text(alphabet=" \t\nabc", min_size=1).filter(lambda s: s.strip()))
def test_collapse_ws_single_spaces(raw):
    out = collapse_ws(raw)
    assert "  " not in out and "\t" not in out and "\n" not in out
    assert out == out.strip()


def test_filter_retains_brand_mention(rules):
    rec = note("r1", "onset chest pain 20 mins ago, had 2nd dose of pfizer yesterday")
    assert pattern_match(rec, rules)


def test_filter_retains_unlisted_status_variant(rules):
    # "covid vax x2" is not on the exclusion list even though longer status
    # phrases are, so the mention still counts.
    assert "covid vax x2" not in rules.exclude_phrases
    rec = note("r2", "dizzy on standing, covid vax x2")
    assert pattern_match(rec, rules)


def test_filter_rejects_status_only_mention(rules):
    rec = note("r3", "pt fully vaxed, abdo pain")
    assert not pattern_match(rec, rules)
    assert rejection_reason(rec, rules) == "status_phrase_only"


def test_pattern_match_paper_insertion(rules):
    assert pattern_match(note("r4", "had flu vaccine 1/52. today pain when coughing"), rules)


def test_pattern_match_padding_is_not_a_term(rules):
    assert not pattern_match(note("r5", " " * rules.min_length), rules)
    assert rejection_reason(note("r5", " " * rules.min_length), rules) == "no_include_term"


def test_pattern_match_equals_filter_partition(rules):
    records, _, _ = generate(CorpusSpec(n_focused=120, n_deployment=80, seed=11))
    prepared = [preprocess(r) for r in records]
    retained, rejected = keyword_filter(prepared, rules)
    assert len(retained) + len(rejected) == len(prepared)
    by_match = {r.id for r in prepared if pattern_match(r, rules)}
    assert {r.id for r in retained} == by_match
    assert all(rejection_reason(r, rules) is None for r in retained)
    assert all(rejection_reason(r, rules) is not None for r in rejected)


def test_exclusion_excision_cannot_fuse_terms():
    # Excision replaces with a space; plain deletion would fuse "va"+"x"
    # into a fresh include-term hit that the raw text never contained.
    rules = FilterRuleSet(include_terms=("vax",), exclude_phrases=("fully",))
    rec = note("r6", "vafullyx etc")
    assert not pattern_match(rec, rules)


def test_record_invariants():
    with pytest.raises(InvalidRecord):
        TriageRecord(id="x", raw_text="a", age=-1)
    with pytest.raises(InvalidRecord):
        TriageRecord(id="x", raw_text="a", label=Label.POSITIVE)  # no source
    with pytest.raises(InvalidRecord):
        TriageRecord(id="x", raw_text="a", clean_text="tab\there")


def test_json_round_trip():
    rec = note("r7", "sore arm post flu vaccine", label=Label.POSITIVE)
    assert TriageRecord.from_json(json.loads(json.dumps(rec.to_json()))) == rec


def test_read_write_round_trip(tmp_path):
    recs = [note(f"r{i}", f"note body {i}") for i in range(5)]
    path = tmp_path / "recs.jsonl"
    write_records(path, recs)
    assert read_records(path) == recs


def test_store_operations():
    store = RecordStore()
    store.add_all(note(f"r{i}", f"text {i}", pool=Pool.DEPLOYMENT) for i in range(4))
    assert len(store) == 4 and "r2" in store
    store.set_label("r1", Label.POSITIVE, LabelSource.HUMAN)
    assert store.get("r1").label is Label.POSITIVE
    assert [r.id for r in store.labeled()] == ["r1"]
    assert store.unlabeled_ids(Pool.DEPLOYMENT) == ["r0", "r2", "r3"]
    assert store.unlabeled_ids(Pool.FOCUSED) == []
