"""Logistic-regression classifier over hashed text embeddings.

Training is plain mini-batch gradient descent with L2 on the weights
(bias excluded), checkpointed every fixed number of steps. Runs are
deterministic: same data, config, and seed give bit-identical weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .datasets import LabeledDataset
from .embedding import EmbedderSpec, embed_matrix
from .evaluation import SingleClass, compute_auc, confusion, metrics
from .records import Label, RecordStore, TriageRecord


class SingleClassDataset(ValueError):
    pass


class NonFiniteLoss(RuntimeError):
    def __init__(self, step: int) -> None:
        super().__init__(f"loss became non-finite at step {step}")
        self.step = step


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 9
    batch_size: int = 16
    checkpoint_every: int = 10
    learning_rate: float = 0.1
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        # epochs=0 is allowed only to re-score an existing checkpoint
        # against a new validation split; it produces no update steps.
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")

    def to_json(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "checkpoint_every": self.checkpoint_every,
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(
            epochs=int(obj.get("epochs", 9)),
            batch_size=int(obj.get("batch_size", 16)),
            checkpoint_every=int(obj.get("checkpoint_every", 10)),
            learning_rate=float(obj.get("learning_rate", 0.1)),
            l2=float(obj.get("l2", 1e-4)),
            seed=int(obj.get("seed", 0)),
        )


@dataclass(frozen=True)
class Checkpoint:
    id: str
    round: int
    step: int
    weights: np.ndarray = field(repr=False)  # dim feature weights + trailing bias
    dataset_version: int
    val_loss: float
    val_auc: float
    val_f1: float
    parent_id: str | None = None

    def __post_init__(self) -> None:
        if self.step < 0:
            raise ValueError("step must be non-negative")
        if self.weights.ndim != 1:
            raise ValueError("weights must be a flat vector (features + bias)")

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0]) - 1

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "round": self.round,
            "step": self.step,
            "weights": [float(w) for w in self.weights],
            "dataset_version": self.dataset_version,
            "val_loss": self.val_loss,
            "val_auc": self.val_auc,
            "val_f1": self.val_f1,
            "parent_id": self.parent_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Checkpoint":
        return cls(
            id=obj["id"],
            round=int(obj["round"]),
            step=int(obj["step"]),
            weights=np.asarray(obj["weights"], dtype=np.float64),
            dataset_version=int(obj["dataset_version"]),
            val_loss=float(obj["val_loss"]),
            val_auc=float(obj["val_auc"]),
            val_f1=float(obj["val_f1"]),
            parent_id=obj.get("parent_id"),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(z: np.ndarray, y: np.ndarray) -> float:
    # mean(softplus(z) - y*z), with softplus computed stably
    softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return float(np.mean(softplus - y * z))


def loss_and_gradient(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, float]:
    """Penalized log loss and its exact gradient for one batch.

    The L2 penalty covers the feature weights only, never the bias.
    """
    z = x @ w + b
    p = _sigmoid(z)
    loss = _log_loss(z, y) + 0.5 * l2 * float(w @ w)
    grad_w = x.T @ (p - y) / len(y) + l2 * w
    grad_b = float(np.mean(p - y))
    return loss, grad_w, grad_b


MatrixFn = Callable[[Sequence[str]], np.ndarray]


def _split_xy(
    ids: Sequence[str], store: RecordStore, spec: EmbedderSpec, matrix_fn: MatrixFn | None
) -> tuple[np.ndarray, np.ndarray]:
    ordered = sorted(ids)
    y = np.array(
        [1.0 if store.get(rid).label is Label.POSITIVE else 0.0 for rid in ordered],
        dtype=np.float64,
    )
    if matrix_fn is not None:
        return matrix_fn(ordered), y
    return embed_matrix([store.get(rid).clean_text for rid in ordered], spec), y


def _validation_scores(
    w: np.ndarray, b: float, x_val: np.ndarray, y_val: np.ndarray
) -> tuple[float, float, float]:
    z = x_val @ w + b
    p = _sigmoid(z)
    loss = _log_loss(z, y_val)
    labels = {str(i): Label.POSITIVE if y_val[i] == 1.0 else Label.NEGATIVE for i in range(len(y_val))}
    preds = {str(i): float(p[i]) for i in range(len(p))}
    try:
        auc = compute_auc(labels, preds)
    except SingleClass:
        auc = 0.0
    report = metrics(confusion(labels, preds))
    return loss, auc, report.f1


def _fit(
    w: np.ndarray,
    b: float,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    config: TrainConfig,
    round: int,
    dataset_version: int,
    start_step: int,
    lineage: str,
    parent_id: str | None,
) -> list[Checkpoint]:
    n = len(y_train)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    if config.epochs > 0 and config.checkpoint_every > total_steps:
        raise ValueError(
            f"checkpoint_every={config.checkpoint_every} exceeds total steps {total_steps}"
        )

    def snapshot(step: int) -> Checkpoint:
        loss, auc, f1 = _validation_scores(w, b, x_val, y_val)
        return Checkpoint(
            id=f"ckpt-{lineage}-r{round}-s{step}",
            round=round,
            step=step,
            weights=np.concatenate([w, [b]]),
            dataset_version=dataset_version,
            val_loss=loss,
            val_auc=auc,
            val_f1=f1,
            parent_id=parent_id,
        )

    if config.epochs == 0:
        return [snapshot(start_step)]

    rng = np.random.default_rng(config.seed)
    checkpoints: list[Checkpoint] = []
    step = start_step
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            loss, grad_w, grad_b = loss_and_gradient(
                w, b, x_train[batch], y_train[batch], config.l2
            )
            if not math.isfinite(loss):
                raise NonFiniteLoss(step + 1)
            w -= config.learning_rate * grad_w
            b -= config.learning_rate * grad_b
            step += 1
            if (step - start_step) % config.checkpoint_every == 0:
                checkpoints.append(snapshot(step))
    return checkpoints


def train(
    dataset: LabeledDataset,
    store: RecordStore,
    spec: EmbedderSpec,
    config: TrainConfig,
    round: int = 1,
    lineage: str = "scratch",
    matrix_fn: MatrixFn | None = None,
) -> list[Checkpoint]:
    """Train from zero-initialized weights; returns checkpoints in step order."""
    if dataset.train_counts.positives == 0 or dataset.train_counts.negatives == 0:
        raise SingleClassDataset("training split must contain both classes")
    x_train, y_train = _split_xy(dataset.train_ids, store, spec, matrix_fn)
    x_val, y_val = _split_xy(dataset.validation_ids, store, spec, matrix_fn)
    w = np.zeros(spec.dim, dtype=np.float64)
    return _fit(
        w,
        0.0,
        x_train,
        y_train,
        x_val,
        y_val,
        config,
        round=round,
        dataset_version=dataset.version,
        start_step=0,
        lineage=lineage,
        parent_id=None,
    )


def resume_train(
    parent: Checkpoint,
    dataset: LabeledDataset,
    store: RecordStore,
    spec: EmbedderSpec,
    config: TrainConfig,
    round: int,
    lineage: str = "resume",
    matrix_fn: MatrixFn | None = None,
) -> list[Checkpoint]:
    """Continue from a prior checkpoint's weights on an expanded dataset.

    Step numbering continues from the parent; epochs=0 re-scores the parent
    weights unchanged (identity resume).
    """
    if parent.dim != spec.dim:
        raise DimensionMismatch(
            f"checkpoint carries {parent.dim} feature weights, embedder produces {spec.dim}"
        )
    if dataset.train_counts.positives == 0 or dataset.train_counts.negatives == 0:
        raise SingleClassDataset("training split must contain both classes")
    x_train, y_train = _split_xy(dataset.train_ids, store, spec, matrix_fn)
    x_val, y_val = _split_xy(dataset.validation_ids, store, spec, matrix_fn)
    w = parent.weights[:-1].copy()
    b = float(parent.weights[-1])
    return _fit(
        w,
        b,
        x_train,
        y_train,
        x_val,
        y_val,
        config,
        round=round,
        dataset_version=dataset.version,
        start_step=parent.step,
        lineage=lineage,
        parent_id=parent.id,
    )


def predict(
    checkpoint: Checkpoint, records: Iterable[TriageRecord], spec: EmbedderSpec
) -> dict[str, float]:
    if checkpoint.dim != spec.dim:
        raise DimensionMismatch(
            f"checkpoint carries {checkpoint.dim} feature weights, embedder produces {spec.dim}"
        )
    items = list(records)
    if not items:
        return {}
    x = embed_matrix([r.clean_text for r in items], spec)
    p = _sigmoid(x @ checkpoint.weights[:-1] + checkpoint.weights[-1])
    return {r.id: float(p[i]) for i, r in enumerate(items)}


def predict_store(
    checkpoint: Checkpoint, store: RecordStore, spec: EmbedderSpec, ids: Iterable[str]
) -> dict[str, float]:
    return predict(checkpoint, (store.get(rid) for rid in ids), spec)


def predict_scores(checkpoint: Checkpoint, x: np.ndarray) -> np.ndarray:
    """Probabilities from a precomputed embedding matrix (row order = caller's)."""
    if x.shape[1] != checkpoint.dim:
        raise DimensionMismatch(
            f"matrix has {x.shape[1]} columns, checkpoint carries {checkpoint.dim} weights"
        )
    return _sigmoid(x @ checkpoint.weights[:-1] + checkpoint.weights[-1])


def select_checkpoints(checkpoints: Sequence[Checkpoint], top_k: int = 2) -> list[Checkpoint]:
    """Best validation F1 first; ties fall to AUC, then loss, then earlier step."""
    if top_k < 1:
        raise ValueError("top_k must be positive")
    ranked = sorted(checkpoints, key=lambda c: (-c.val_f1, -c.val_auc, c.val_loss, c.step))
    return ranked[:top_k]


def pattern_predictions(flags: Mapping[str, bool]) -> dict[str, float]:
    """Adapt boolean keyword matches to the probability interface."""
    return {rid: 1.0 if hit else 0.0 for rid, hit in flags.items()}
