import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altriage.datasets import (
    RatioUnreachable,
    UnlabeledAddition,
    build_dataset,
    expand_dataset,
)
from altriage.records import Label, RecordStore

from conftest import note


def seeded_store(n_pos: int, n_neg: int, extra_unlabeled: int = 0) -> RecordStore:
    store = RecordStore()
    for i in range(n_pos):
        store.add(note(f"p{i:04d}", f"rash post flu vaccine {i}", label=Label.POSITIVE))
    for i in range(n_neg):
        store.add(note(f"n{i:04d}", f"sport injury {i}", label=Label.NEGATIVE))
    for i in range(extra_unlabeled):
        store.add(note(f"u{i:04d}", f"pending triage {i}"))
    return store


def ids(prefix: str, n: int, start: int = 0) -> list[str]:
    return [f"{prefix}{i:04d}" for i in range(start, start + n)]


def test_build_dataset_counts_and_ratio():
    store = seeded_store(300, 500)
    ds = build_dataset(1, ids("p", 266) + ids("n", 296), ids("p", 30, 270) + ids("n", 40, 300), store)
    assert ds.train_counts.positives == 266
    assert ds.train_counts.negatives == 296
    assert ds.train_counts.size == 562
    assert ds.validation_counts.size == 70
    assert ds.ratio == pytest.approx(296 / 266)
    assert ds.all_ids() == frozenset(ds.train_ids) | frozenset(ds.validation_ids)


TABLE3_ROWS = (
    (266, 296),
    (456, 551),
    (604, 787),
    (630, 827),
)


@pytest.mark.parametrize("pos,neg", TABLE3_ROWS)
def test_published_training_shapes_satisfy_cap(pos, neg):
    store = seeded_store(pos, neg)
    ds = build_dataset(1, ids("p", pos) + ids("n", neg), [], store)
    assert ds.train_counts.positives == pos and ds.train_counts.negatives == neg
    assert ds.ratio <= 1.5


def test_expand_accepts_round2_shape():
    store = seeded_store(500, 600)
    base = build_dataset(1, ids("p", 266) + ids("n", 296), [], store)
    additions = ids("p", 190, 266) + ids("n", 255, 296)
    expanded, holdover = expand_dataset(base, additions, store, ratio_cap=1.5)
    assert expanded.train_counts.positives == 456
    assert expanded.train_counts.negatives == 551
    assert expanded.ratio == pytest.approx(551 / 456)
    assert holdover == []
    assert expanded.version == 2 and expanded.parent_version == 1


def test_expand_defers_excess_negatives():
    store = seeded_store(456, 800)
    base = build_dataset(1, ids("p", 456), [], store)
    additions = ids("n", 700)
    expanded, holdover = expand_dataset(base, additions, store, ratio_cap=1.5)
    assert expanded.train_counts.negatives <= 684  # 1.5 x 456
    assert expanded.train_counts.negatives + len(holdover) == 700
    assert expanded.ratio <= 1.5


def test_expand_defers_most_confident_negatives_first():
    store = seeded_store(2, 6)
    base = build_dataset(1, ids("p", 2), [], store)
    preds = {f"n{i:04d}": 0.1 * (i + 1) for i in range(6)}  # n0000 most confident
    expanded, holdover = expand_dataset(base, ids("n", 6), store, ratio_cap=1.5, predictions=preds)
    assert len(holdover) == 3
    assert holdover == ["n0000", "n0001", "n0002"]
    assert set(expanded.train_ids) == set(ids("p", 2) + ["n0003", "n0004", "n0005"])


def test_expand_zero_additions_bumps_version():
    store = seeded_store(4, 4)
    base = build_dataset(3, ids("p", 4) + ids("n", 4), [], store)
    expanded, holdover = expand_dataset(base, [], store)
    assert expanded.version == 4
    assert expanded.train_counts == base.train_counts
    assert holdover == []


def test_expand_rejects_unlabeled():
    store = seeded_store(2, 2, extra_unlabeled=1)
    base = build_dataset(1, ids("p", 2), [], store)
    with pytest.raises(UnlabeledAddition):
        expand_dataset(base, ["u0000"], store)


def test_expand_without_positives_unreachable():
    store = seeded_store(0, 5)
    base = build_dataset(1, [], [], store)
    with pytest.raises(RatioUnreachable):
        expand_dataset(base, ids("n", 5), store)


def test_expand_routes_validation_share_per_class():
    store = seeded_store(40, 40)
    base = build_dataset(1, ids("p", 10) + ids("n", 10), [], store)
    additions = ids("p", 20, 10) + ids("n", 20, 10)
    expanded, _ = expand_dataset(base, additions, store, validation_share=0.25)
    assert expanded.validation_counts.positives == 5
    assert expanded.validation_counts.negatives == 5
    assert expanded.train_counts.positives == 25
    assert expanded.train_counts.negatives == 25


def test_duplicate_additions_ignored():
    store = seeded_store(4, 4)
    base = build_dataset(1, ids("p", 2) + ids("n", 2), [], store)
    expanded, _ = expand_dataset(base, ids("p", 2) + ids("p", 2, 2), store)
    assert expanded.train_counts.positives == 4
    assert len(expanded.train_ids) == len(set(expanded.train_ids))


@given(
    pos=st.integers(1, 40),
    neg=st.integers(0, 120),
    cap=st.floats(1.0, 3.0),
)
@settings(max_examples=120)
def test_expand_never_exceeds_cap_property(pos, neg, cap):
    store = seeded_store(pos, neg)
    base = build_dataset(1, ids("p", pos), [], store)
    expanded, holdover = expand_dataset(base, ids("n", neg), store, ratio_cap=cap)
    if expanded.train_counts.positives:
        assert expanded.ratio <= cap + 1e-9
    assert expanded.train_counts.negatives + len(holdover) == neg


def test_dataset_json_round_trip():
    store = seeded_store(6, 6)
    ds = build_dataset(2, ids("p", 4) + ids("n", 4), ids("p", 2, 4), store, parent_version=1)
    from altriage.datasets import LabeledDataset

    clone = LabeledDataset.from_json(ds.to_json())
    assert clone == ds
