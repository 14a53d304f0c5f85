"""Versioned labeled datasets.

Each expansion produces a new immutable version; the negative:positive
ratio in training is capped, with excess negatives deferred (most
confident first) to a holdover list for later rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .records import Label, RecordStore
from .sampling import interval_sample


class RatioUnreachable(ValueError):
    """No positives available, so no negative count can satisfy the cap."""


class UnlabeledAddition(ValueError):
    pass


@dataclass(frozen=True)
class SplitCounts:
    positives: int
    negatives: int
    synthetic: int

    @property
    def size(self) -> int:
        return self.positives + self.negatives

    @property
    def synthetic_percent(self) -> int:
        # Whole-percent bookkeeping, rounded down: 100/1007 reports as 9.
        return 0 if self.size == 0 else (100 * self.synthetic) // self.size

    def to_json(self) -> dict:
        return {
            "positives": self.positives,
            "negatives": self.negatives,
            "size": self.size,
            "synthetic": self.synthetic,
            "synthetic_percent": self.synthetic_percent,
        }


def _count_split(ids: Iterable[str], store: RecordStore) -> SplitCounts:
    pos = neg = syn = 0
    for rid in ids:
        record = store.get(rid)
        if record.label is Label.POSITIVE:
            pos += 1
        elif record.label is Label.NEGATIVE:
            neg += 1
        else:
            raise UnlabeledAddition(f"record {rid} has no finalized label")
        if record.counterfactual_of is not None:
            syn += 1
    return SplitCounts(positives=pos, negatives=neg, synthetic=syn)


@dataclass(frozen=True)
class LabeledDataset:
    version: int
    train_ids: tuple[str, ...]
    validation_ids: tuple[str, ...]
    train_counts: SplitCounts
    validation_counts: SplitCounts
    parent_version: int | None = None

    def __post_init__(self) -> None:
        if self.version < 1:
            raise ValueError("dataset versions start at 1")
        train, val = set(self.train_ids), set(self.validation_ids)
        if len(train) != len(self.train_ids) or len(val) != len(self.validation_ids):
            raise ValueError("duplicate ids within a split")
        if train & val:
            raise ValueError("train and validation splits overlap")

    @property
    def ratio(self) -> float:
        if self.train_counts.positives == 0:
            raise RatioUnreachable("training split has no positives")
        return self.train_counts.negatives / self.train_counts.positives

    def all_ids(self) -> frozenset[str]:
        return frozenset(self.train_ids) | frozenset(self.validation_ids)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "train_ids": list(self.train_ids),
            "validation_ids": list(self.validation_ids),
            "train_counts": self.train_counts.to_json(),
            "validation_counts": self.validation_counts.to_json(),
            "parent_version": self.parent_version,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledDataset":
        def counts(sub: dict) -> SplitCounts:
            return SplitCounts(
                positives=int(sub["positives"]),
                negatives=int(sub["negatives"]),
                synthetic=int(sub["synthetic"]),
            )

        return cls(
            version=int(obj["version"]),
            train_ids=tuple(obj["train_ids"]),
            validation_ids=tuple(obj["validation_ids"]),
            train_counts=counts(obj["train_counts"]),
            validation_counts=counts(obj["validation_counts"]),
            parent_version=obj.get("parent_version"),
        )


def build_dataset(
    version: int,
    train_ids: Iterable[str],
    validation_ids: Iterable[str],
    store: RecordStore,
    parent_version: int | None = None,
) -> LabeledDataset:
    train = tuple(sorted(set(train_ids)))
    val = tuple(sorted(set(validation_ids)))
    return LabeledDataset(
        version=version,
        train_ids=train,
        validation_ids=val,
        train_counts=_count_split(train, store),
        validation_counts=_count_split(val, store),
        parent_version=parent_version,
    )


def expand_dataset(
    current: LabeledDataset,
    additions: Iterable[str],
    store: RecordStore,
    ratio_cap: float = 1.5,
    validation_share: float = 0.0,
    predictions: Mapping[str, float] | None = None,
) -> tuple[LabeledDataset, list[str]]:
    """Fold newly labeled records into a new dataset version.

    A validation_share slice of the additions (stride-sampled per class, so
    the split stays deterministic and class-balanced) goes to validation;
    the rest joins training. If training negatives would exceed
    ratio_cap * positives, the most confident negatives (lowest predicted
    probability; unscored ones are kept) are deferred and returned as the
    holdover list. Zero additions still produce a fresh version.
    """
    if not 0.0 <= validation_share < 1.0:
        raise ValueError("validation_share must be in [0, 1)")
    predictions = predictions or {}
    existing = current.all_ids()
    new_ids = sorted(set(additions) - existing)
    for rid in new_ids:
        if store.get(rid).label is Label.UNLABELED:
            raise UnlabeledAddition(f"record {rid} has no finalized label")

    new_pos = [rid for rid in new_ids if store.get(rid).label is Label.POSITIVE]
    new_neg = [rid for rid in new_ids if store.get(rid).label is Label.NEGATIVE]

    val_ids: set[str] = set()
    if validation_share > 0.0:
        for group in (new_pos, new_neg):
            quota = int(round(len(group) * validation_share))
            val_ids.update(interval_sample(group, quota))

    train_pos = [rid for rid in new_pos if rid not in val_ids]
    train_neg = [rid for rid in new_neg if rid not in val_ids]

    total_pos = current.train_counts.positives + len(train_pos)
    if total_pos == 0 and (current.train_counts.negatives + len(train_neg)) > 0:
        raise RatioUnreachable("no positives in training; ratio cap cannot be met")
    allowed_neg = int(ratio_cap * total_pos) - current.train_counts.negatives
    holdover: list[str] = []
    if len(train_neg) > allowed_neg:
        # Defer the most confidently negative first; they carry the least
        # new signal. Unscored negatives sort as least confident (kept).
        by_confidence = sorted(train_neg, key=lambda rid: (predictions.get(rid, 0.5), rid))
        excess = len(train_neg) - max(allowed_neg, 0)
        holdover = sorted(by_confidence[:excess])
        kept = set(by_confidence[excess:])
        train_neg = [rid for rid in train_neg if rid in kept]

    expanded = build_dataset(
        version=current.version + 1,
        train_ids=list(current.train_ids) + train_pos + train_neg,
        validation_ids=list(current.validation_ids) + sorted(val_ids),
        store=store,
        parent_version=current.version,
    )
    if expanded.train_counts.positives > 0 and expanded.ratio > ratio_cap + 1e-9:
        raise AssertionError("ratio cap violated after expansion")
    return expanded, holdover
