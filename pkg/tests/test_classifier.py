import math

import numpy as np
import pytest

from altriage.classifier import (
    Checkpoint,
    DimensionMismatch,
    SingleClassDataset,
    TrainConfig,
    loss_and_gradient,
    pattern_predictions,
    predict,
    predict_scores,
    resume_train,
    select_checkpoints,
    train,
)
from altriage.datasets import build_dataset
from altriage.embedding import EmbedderSpec
from altriage.records import Label, RecordStore

from conftest import note

SPEC = EmbedderSpec(dim=256, seed=0)


def toy_store(n_pos: int = 10, n_neg: int = 10) -> tuple[RecordStore, list[str], list[str]]:
    store = RecordStore()
    pos, neg = [], []
    for i in range(n_pos):
        rid = f"p{i:02d}"
        store.add(note(rid, f"fever and rash post flu vaccine day{i}", label=Label.POSITIVE))
        pos.append(rid)
    for i in range(n_neg):
        rid = f"n{i:02d}"
        store.add(note(rid, f"ankle injury playing sport day{i}", label=Label.NEGATIVE))
        neg.append(rid)
    return store, pos, neg


def toy_dataset(version: int = 1):
    store, pos, neg = toy_store()
    train_ids = pos[:8] + neg[:8]
    val_ids = pos[8:] + neg[8:]
    return build_dataset(version, train_ids, val_ids, store), store


CONFIG = TrainConfig(epochs=10, batch_size=4, checkpoint_every=4, learning_rate=0.5, seed=0)


def test_separable_training_reaches_accuracy_one():
    dataset, store = toy_dataset()
    checkpoints = train(dataset, store, SPEC, CONFIG)
    best = checkpoints[-1]
    preds = predict(best, (store.get(rid) for rid in dataset.train_ids), SPEC)
    hits = sum(
        (preds[rid] >= 0.5) == (store.get(rid).label is Label.POSITIVE)
        for rid in dataset.train_ids
    )
    assert hits == len(dataset.train_ids)


def test_training_bitwise_deterministic():
    dataset, store = toy_dataset()
    a = train(dataset, store, SPEC, CONFIG)
    b = train(dataset, store, SPEC, CONFIG)
    assert len(a) == len(b) > 0
    for ca, cb in zip(a, b):
        assert ca.id == cb.id and ca.step == cb.step
        assert ca.weights.tobytes() == cb.weights.tobytes()


def test_single_class_rejected():
    store = RecordStore()
    for i in range(6):
        store.add(note(f"n{i}", f"negative only {i}", label=Label.NEGATIVE))
    dataset = build_dataset(1, [f"n{i}" for i in range(4)], [f"n{i}" for i in range(4, 6)], store)
    with pytest.raises(SingleClassDataset):
        train(dataset, store, SPEC, CONFIG)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(41)
    x = rng.normal(size=(30, 8))
    y = (rng.random(30) < 0.4).astype(np.float64)
    l2 = 1e-3
    eps = 1e-6
    for trial in range(5):
        w = rng.normal(scale=0.8, size=8)
        b = float(rng.normal())
        _, grad_w, grad_b = loss_and_gradient(w, b, x, y, l2)
        for j in range(8):
            bump = np.zeros(8)
            bump[j] = eps
            hi, _, _ = loss_and_gradient(w + bump, b, x, y, l2)
            lo, _, _ = loss_and_gradient(w - bump, b, x, y, l2)
            numeric = (hi - lo) / (2 * eps)
            assert abs(numeric - grad_w[j]) <= 1e-5 * max(1.0, abs(numeric))
        hi, _, _ = loss_and_gradient(w, b + eps, x, y, l2)
        lo, _, _ = loss_and_gradient(w, b - eps, x, y, l2)
        numeric = (hi - lo) / (2 * eps)
        assert abs(numeric - grad_b) <= 1e-5 * max(1.0, abs(numeric))


def test_l2_penalty_excludes_bias():
    x = np.ones((4, 2))
    y = np.array([0.0, 1.0, 0.0, 1.0])
    loss_b0, _, _ = loss_and_gradient(np.zeros(2), 0.0, x, y, l2=10.0)
    loss_b5, _, _ = loss_and_gradient(np.zeros(2), 5.0, x, y, l2=10.0)
    # large l2 would dominate if the bias were penalized; only the data term moves
    assert loss_b5 != loss_b0
    loss_w, _, _ = loss_and_gradient(np.ones(2), 0.0, x, y, l2=10.0)
    assert loss_w > loss_b0 + 5.0


def test_zero_weights_predict_half():
    ckpt = Checkpoint(
        id="z", round=1, step=0, weights=np.zeros(SPEC.dim + 1), dataset_version=1,
        val_loss=0.0, val_auc=0.5, val_f1=0.0,
    )
    store, pos, neg = toy_store(3, 3)
    preds = predict(ckpt, store.labeled(), SPEC)
    assert all(p == 0.5 for p in preds.values())


def test_bias_bump_strictly_raises_probabilities():
    dataset, store = toy_dataset()
    ckpt = train(dataset, store, SPEC, CONFIG)[-1]
    bumped = Checkpoint(
        id="bump", round=1, step=ckpt.step,
        weights=np.concatenate([ckpt.weights[:-1], [ckpt.weights[-1] + 0.25]]),
        dataset_version=1, val_loss=0.0, val_auc=0.5, val_f1=0.0,
    )
    base = predict(ckpt, store.labeled(), SPEC)
    raised = predict(bumped, store.labeled(), SPEC)
    assert all(raised[rid] > base[rid] for rid in base)


def test_probabilities_match_handwritten_dot_product():
    dataset, store = toy_dataset()
    ckpt = train(dataset, store, SPEC, CONFIG)[-1]
    from altriage.embedding import embed_text

    records = store.labeled()[:100]
    preds = predict(ckpt, records, SPEC)
    for rec in records:
        vec = embed_text(rec.clean_text, SPEC).values
        z = sum(float(v) * float(wgt) for v, wgt in zip(vec, ckpt.weights[:-1]))
        z += float(ckpt.weights[-1])
        manual = 1.0 / (1.0 + math.exp(-z))
        assert abs(preds[rec.id] - manual) < 1e-9


def test_predict_scores_matches_predict():
    dataset, store = toy_dataset()
    ckpt = train(dataset, store, SPEC, CONFIG)[-1]
    from altriage.embedding import embed_matrix

    records = store.labeled()
    preds = predict(ckpt, records, SPEC)
    scores = predict_scores(ckpt, embed_matrix([r.clean_text for r in records], SPEC))
    for rec, score in zip(records, scores):
        assert preds[rec.id] == float(score)


def test_dimension_mismatch():
    ckpt = Checkpoint(
        id="d", round=1, step=0, weights=np.zeros(17), dataset_version=1,
        val_loss=0.0, val_auc=0.5, val_f1=0.0,
    )
    with pytest.raises(DimensionMismatch):
        predict(ckpt, [note("a", "text")], SPEC)


def test_resume_zero_epochs_is_identity():
    dataset, store = toy_dataset()
    parent = train(dataset, store, SPEC, CONFIG)[-1]
    rescored = resume_train(
        parent, dataset, store, SPEC, TrainConfig(epochs=0, learning_rate=0.5), round=2
    )
    assert len(rescored) == 1
    child = rescored[0]
    assert child.weights.tobytes() == parent.weights.tobytes()
    assert child.step == parent.step
    assert child.parent_id == parent.id


def test_resume_on_superset_reduces_training_loss():
    dataset, store = toy_dataset()
    parent = train(dataset, store, SPEC, TrainConfig(epochs=3, batch_size=4, checkpoint_every=4, learning_rate=0.3))[-1]
    extra_pos = [f"xp{i}" for i in range(4)]
    extra_neg = [f"xn{i}" for i in range(4)]
    for rid in extra_pos:
        store.add(note(rid, f"swelling since covid vaccine {rid}", label=Label.POSITIVE))
    for rid in extra_neg:
        store.add(note(rid, f"laceration from glass {rid}", label=Label.NEGATIVE))
    superset = build_dataset(
        2, list(dataset.train_ids) + extra_pos + extra_neg, dataset.validation_ids, store
    )
    children = resume_train(
        parent, superset, store, SPEC,
        TrainConfig(epochs=6, batch_size=4, checkpoint_every=4, learning_rate=0.3), round=2,
    )
    from altriage.embedding import embed_matrix

    x = embed_matrix([store.get(rid).clean_text for rid in superset.train_ids], SPEC)
    y = np.array(
        [1.0 if store.get(rid).label is Label.POSITIVE else 0.0 for rid in superset.train_ids]
    )
    before, _, _ = loss_and_gradient(parent.weights[:-1], float(parent.weights[-1]), x, y, 0.0)
    final = children[-1]
    after, _, _ = loss_and_gradient(final.weights[:-1], float(final.weights[-1]), x, y, 0.0)
    assert after <= before
    assert final.parent_id == parent.id
    assert final.step > parent.step


def test_select_checkpoints_single():
    dataset, store = toy_dataset()
    ckpt = train(dataset, store, SPEC, CONFIG)[-1]
    assert select_checkpoints([ckpt], top_k=2) == [ckpt]


def mk_ckpt(i: int, f1: float, auc: float = 0.9, loss: float = 0.3, step: int = 10) -> Checkpoint:
    return Checkpoint(
        id=f"c{i}", round=1, step=step, weights=np.zeros(3), dataset_version=1,
        val_loss=loss, val_auc=auc, val_f1=f1,
    )


def test_select_checkpoints_prefers_higher_f1():
    a, b = mk_ckpt(0, 0.94), mk_ckpt(1, 0.92)
    assert select_checkpoints([b, a], top_k=2)[0] is a


def test_select_checkpoints_matches_brute_force_sort():
    rng = np.random.default_rng(3)
    pool = [
        mk_ckpt(
            i,
            f1=float(rng.choice([0.90, 0.92, 0.94])),
            auc=float(rng.choice([0.95, 0.97])),
            loss=float(rng.choice([0.2, 0.3])),
            step=int(rng.integers(1, 5)) * 10,
        )
        for i in range(50)
    ]
    expected = sorted(pool, key=lambda c: (-c.val_f1, -c.val_auc, c.val_loss, c.step))
    assert select_checkpoints(pool, top_k=50) == expected


def test_pattern_predictions_adapter():
    assert pattern_predictions({"a": True, "b": False}) == {"a": 1.0, "b": 0.0}
