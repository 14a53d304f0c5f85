"""Confusion-matrix metrics, rank AUC, and the accumulated evaluation set.

The evaluation set is built actively: positive predictions and uncertain
negatives from the best checkpoints get labeled and accumulate round over
round, under a hard guarantee that no evaluation record ever appears in any
training or validation dataset version.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .records import FilterRuleSet, Label, TriageRecord, pattern_match

if TYPE_CHECKING:
    from .classifier import Checkpoint
    from .datasets import LabeledDataset
    from .embedding import EmbedderSpec


class DomainMismatch(ValueError):
    pass


class SingleClass(ValueError):
    pass


class LeakageDetected(RuntimeError):
    """An evaluation-set record appeared in a dataset version (or vice versa)."""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_json(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}

    @classmethod
    def from_json(cls, obj: dict) -> "ConfusionMatrix":
        return cls(tp=int(obj["tp"]), tn=int(obj["tn"]), fp=int(obj["fp"]), fn=int(obj["fn"]))


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f1: float
    fbeta: float
    beta: float
    auc: float | None = None
    undefined_precision: bool = False
    undefined_recall: bool = False

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fbeta": self.fbeta,
            "beta": self.beta,
            "auc": self.auc,
            "undefined_precision": self.undefined_precision,
            "undefined_recall": self.undefined_recall,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MetricReport":
        return cls(
            precision=float(obj["precision"]),
            recall=float(obj["recall"]),
            f1=float(obj["f1"]),
            fbeta=float(obj["fbeta"]),
            beta=float(obj["beta"]),
            auc=obj.get("auc"),
            undefined_precision=bool(obj.get("undefined_precision", False)),
            undefined_recall=bool(obj.get("undefined_recall", False)),
        )


def confusion(
    labels: Mapping[str, Label], predictions: Mapping[str, float], cutoff: float = 0.5
) -> ConfusionMatrix:
    if set(labels) != set(predictions):
        missing = set(labels) ^ set(predictions)
        raise DomainMismatch(f"label/prediction id domains differ on {len(missing)} ids")
    tp = tn = fp = fn = 0
    for rid, truth in labels.items():
        predicted_positive = predictions[rid] >= cutoff
        if truth is Label.POSITIVE:
            tp, fn = (tp + 1, fn) if predicted_positive else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if predicted_positive else (fp, tn + 1)
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


def metrics(cm: ConfusionMatrix, beta: float = 1.0, auc: float | None = None) -> MetricReport:
    """Precision/recall/F1/F-beta; zero denominators report 0 with a flag
    instead of raising, so round reports never abort."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    undefined_p = cm.tp + cm.fp == 0
    undefined_r = cm.tp + cm.fn == 0
    precision = 0.0 if undefined_p else cm.tp / (cm.tp + cm.fp)
    recall = 0.0 if undefined_r else cm.tp / (cm.tp + cm.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    b2 = beta * beta
    denom = b2 * precision + recall
    fbeta = 0.0 if denom == 0 else (1 + b2) * precision * recall / denom
    return MetricReport(
        precision=precision,
        recall=recall,
        f1=f1,
        fbeta=fbeta,
        beta=beta,
        auc=auc,
        undefined_precision=undefined_p,
        undefined_recall=undefined_r,
    )


def compute_auc(labels: Mapping[str, Label], predictions: Mapping[str, float]) -> float:
    """Probability a random positive outscores a random negative, ties half.

    Mann-Whitney rank statistic; equivalent to the ROC area.
    """
    if set(labels) != set(predictions):
        raise DomainMismatch("label/prediction id domains differ")
    scored = sorted((predictions[rid], labels[rid] is Label.POSITIVE) for rid in labels)
    n_pos = sum(1 for _, is_pos in scored if is_pos)
    n_neg = len(scored) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs at least one record of each class")
    rank_sum = 0.0
    i = 0
    while i < len(scored):
        j = i
        while j < len(scored) and scored[j][0] == scored[i][0]:
            j += 1
        avg_rank = (i + 1 + j) / 2  # average of ranks i+1 .. j
        rank_sum += avg_rank * sum(1 for k in range(i, j) if scored[k][1])
        i = j
    u = rank_sum - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


@dataclass
class EvaluationSet:
    labels: dict[str, Label] = field(default_factory=dict)
    source_pool: dict[str, str] = field(default_factory=dict)
    round_added: dict[str, int] = field(default_factory=dict)

    @property
    def positive_count(self) -> int:
        return sum(1 for label in self.labels.values() if label is Label.POSITIVE)

    @property
    def negative_count(self) -> int:
        return sum(1 for label in self.labels.values() if label is Label.NEGATIVE)

    def ids(self) -> frozenset[str]:
        return frozenset(self.labels)

    def to_json(self) -> dict:
        return {
            "labels": {rid: label.value for rid, label in sorted(self.labels.items())},
            "source_pool": dict(sorted(self.source_pool.items())),
            "round_added": dict(sorted(self.round_added.items())),
            "positive_count": self.positive_count,
            "negative_count": self.negative_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvaluationSet":
        return cls(
            labels={rid: Label(v) for rid, v in obj.get("labels", {}).items()},
            source_pool=dict(obj.get("source_pool", {})),
            round_added={rid: int(r) for rid, r in obj.get("round_added", {}).items()},
        )


def assert_disjoint(eval_set: EvaluationSet, datasets: Iterable["LabeledDataset"]) -> None:
    eval_ids = eval_set.ids()
    for ds in datasets:
        overlap = eval_ids & (set(ds.train_ids) | set(ds.validation_ids))
        if overlap:
            sample = sorted(overlap)[:5]
            raise LeakageDetected(
                f"evaluation set overlaps dataset v{ds.version} on {len(overlap)} ids "
                f"(e.g. {sample})"
            )


def extend_evaluation_set(
    eval_set: EvaluationSet,
    additions: Mapping[str, Label],
    datasets: Sequence["LabeledDataset"],
    source_pool: str,
    round: int,
) -> EvaluationSet:
    """Merge newly labeled records, then re-assert disjointness from every
    dataset version. Raises LeakageDetected before mutating on any overlap."""
    dataset_ids: set[str] = set()
    for ds in datasets:
        dataset_ids |= set(ds.train_ids) | set(ds.validation_ids)
    for rid, label in additions.items():
        if label is Label.UNLABELED:
            raise ValueError(f"evaluation addition {rid} is unlabeled")
        if rid in dataset_ids:
            raise LeakageDetected(f"record {rid} already belongs to a dataset version")
    for rid, label in additions.items():
        if rid not in eval_set.labels:
            eval_set.round_added[rid] = round
            eval_set.source_pool[rid] = source_pool
        eval_set.labels[rid] = label
    assert_disjoint(eval_set, datasets)
    return eval_set


@dataclass(frozen=True)
class AuditReport:
    n_records: int
    predicted_positive: int
    confirmed_positive: int
    false_positives: tuple[tuple[str, str], ...]  # (id, clean_text)
    fn_review_ids: tuple[str, ...]  # pattern-matched negative predictions

    def to_json(self) -> dict:
        return {
            "n_records": self.n_records,
            "predicted_positive": self.predicted_positive,
            "confirmed_positive": self.confirmed_positive,
            "false_positive_count": len(self.false_positives),
            "false_positives": [list(pair) for pair in self.false_positives],
            "fn_review_ids": list(self.fn_review_ids),
        }


def audit_month(
    checkpoint: "Checkpoint",
    records: Sequence[TriageRecord],
    rules: FilterRuleSet,
    spec: "EmbedderSpec",
) -> AuditReport:
    """Deployment error audit: score a slice, tally confirmed/false positives
    (slice is oracle-labeled on the positive predictions), and surface
    keyword-bearing negative predictions for false-negative review."""
    from .classifier import predict

    by_id = {r.id: r for r in records}
    preds = predict(checkpoint, records, spec)
    positive_ids = sorted((rid for rid, p in preds.items() if p >= 0.5), key=lambda r: (-preds[r], r))
    confirmed = sum(1 for rid in positive_ids if by_id[rid].label is Label.POSITIVE)
    false_pos = tuple(
        (rid, by_id[rid].clean_text) for rid in positive_ids if by_id[rid].label is Label.NEGATIVE
    )
    fn_review = tuple(
        rid
        for rid in sorted(preds)
        if preds[rid] < 0.5 and pattern_match(by_id[rid], rules)
    )
    return AuditReport(
        n_records=len(records),
        predicted_positive=len(positive_ids),
        confirmed_positive=confirmed,
        false_positives=false_pos,
        fn_review_ids=fn_review,
    )


SCORE_COLUMNS = ("TP", "TN", "FN", "FP", "Precision", "Recall", "F1", "F1Beta")


def score_table(rows: Sequence[tuple[str, ConfusionMatrix, MetricReport]]) -> str:
    """Plain-text table of model scores, one row per model plus the header."""
    header = ("Model",) + SCORE_COLUMNS
    body = [
        (
            name,
            str(cm.tp),
            str(cm.tn),
            str(cm.fn),
            str(cm.fp),
            f"{report.precision:.3f}",
            f"{report.recall:.3f}",
            f"{report.f1:.3f}",
            f"{report.fbeta:.3f}",
        )
        for name, cm, report in rows
    ]
    widths = [max(len(col[i]) for col in [header] + body) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in [header] + body]
    return "\n".join(lines)
