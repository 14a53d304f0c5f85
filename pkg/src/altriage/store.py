"""Event-sourced project persistence.

Every mutation is an appended line-delimited JSON event; project state is
a pure fold over the log. The live system mutates state only by applying
the event it just appended, so replaying the log from disk reconstructs
the exact same state (the acceptance suite diffs the two).

Heavy artifacts (topic models, checkpoint weights, prediction maps) live
as content-hashed files under artifacts/; events carry path + sha256.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator

from .augment import CounterfactualPair
from .datasets import LabeledDataset
from .embedding import EmbedderSpec
from .evaluation import EvaluationSet
from .records import FilterRuleSet, Label, TriageRecord
from .sampling import QueryBatch


class ConflictPending(RuntimeError):
    """Two oracles disagree on a record; an adjudication label is required."""


class CorruptLog(RuntimeError):
    pass


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    at: str
    payload: dict

    def to_json(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "at": self.at, "payload": self.payload}

    @classmethod
    def from_json(cls, obj: dict) -> "Event":
        return cls(seq=int(obj["seq"]), kind=obj["kind"], at=obj["at"], payload=obj["payload"])


class EventLog:
    """Append-only JSONL log. Appends are flushed line-at-a-time; sequence
    numbers are dense from 1."""

    def __init__(self, path: str | Path, clock: Callable[[], str] = _utc_now) -> None:
        self.path = Path(path)
        self.clock = clock
        self._next_seq = 1 + sum(1 for _ in self) if self.path.exists() else 1

    def append(self, kind: str, payload: dict) -> Event:
        event = Event(seq=self._next_seq, kind=kind, at=self.clock(), payload=payload)
        with open(self.path, "a") as handle:
            handle.write(json.dumps(event.to_json(), sort_keys=True) + "\n")
            handle.flush()
        self._next_seq += 1
        return event

    def __iter__(self) -> Iterator[Event]:
        if not self.path.exists():
            return
        with open(self.path) as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield Event.from_json(json.loads(line))
                except (json.JSONDecodeError, KeyError) as exc:
                    raise CorruptLog(f"{self.path}:{lineno}: {exc}") from exc


PHASES = (
    "training",
    "checkpoint_eval",
    "pool_predict",
    "queue_build",
    "labeling",
    "expand",
    "complete",
)


@dataclass
class RoundState:
    round: int
    mode: str
    phase: str = "training"
    dataset_version: int = 0
    train_config: dict | None = None
    checkpoint_ids: list[str] = field(default_factory=list)
    selected_checkpoint_ids: list[str] = field(default_factory=list)
    batches: list[QueryBatch] = field(default_factory=list)
    report: dict | None = None

    def advance_phase(self, to: str) -> None:
        order = PHASES.index(self.phase)
        target = PHASES.index(to)
        if target != order + 1:
            raise ValueError(f"round {self.round}: illegal phase jump {self.phase} -> {to}")
        self.phase = to

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "mode": self.mode,
            "phase": self.phase,
            "dataset_version": self.dataset_version,
            "train_config": self.train_config,
            "checkpoint_ids": list(self.checkpoint_ids),
            "selected_checkpoint_ids": list(self.selected_checkpoint_ids),
            "batches": [b.to_json() for b in self.batches],
            "report": self.report,
        }


@dataclass
class LabelRecord:
    submissions: dict[str, str] = field(default_factory=dict)  # oracle_id -> label
    submission_events: dict[str, int] = field(default_factory=dict)  # oracle_id -> event seq
    final: str | None = None
    source: str | None = None
    conflict: bool = False

    def to_json(self) -> dict:
        return {
            "submissions": dict(sorted(self.submissions.items())),
            "submission_events": dict(sorted(self.submission_events.items())),
            "final": self.final,
            "source": self.source,
            "conflict": self.conflict,
        }


@dataclass
class ProjectState:
    """Everything the API exposes, reconstructible from the log alone."""

    rules: FilterRuleSet | None = None
    strip_patterns: tuple[str, ...] = ()
    embedder: EmbedderSpec | None = None
    corpus_files: list[dict] = field(default_factory=list)
    pool_ids: dict[str, list[str]] = field(default_factory=dict)
    topics: dict | None = None
    labels: dict[str, LabelRecord] = field(default_factory=dict)
    synthetic_records: dict[str, TriageRecord] = field(default_factory=dict)
    pairs: list[CounterfactualPair] = field(default_factory=list)
    datasets: dict[int, LabeledDataset] = field(default_factory=dict)
    holdover: list[str] = field(default_factory=list)
    rounds: dict[int, RoundState] = field(default_factory=dict)
    checkpoints: dict[str, dict] = field(default_factory=dict)  # id -> metadata + artifact ref
    predictions: dict[str, dict] = field(default_factory=dict)  # "round/ckpt/pool" -> artifact ref
    eval_set: EvaluationSet = field(default_factory=EvaluationSet)
    reports: dict[int, dict] = field(default_factory=dict)
    final_table: dict | None = None
    applied_events: int = 0

    # ---- queries ----

    def latest_dataset(self) -> LabeledDataset | None:
        if not self.datasets:
            return None
        return self.datasets[max(self.datasets)]

    def final_label(self, record_id: str) -> Label:
        rec = self.labels.get(record_id)
        if rec is None or rec.final is None:
            return Label.UNLABELED
        return Label(rec.final)

    def labeled_ids(self) -> set[str]:
        return {rid for rid, rec in self.labels.items() if rec.final is not None}

    def current_round(self) -> RoundState | None:
        if not self.rounds:
            return None
        return self.rounds[max(self.rounds)]

    # ---- fold ----

    def apply(self, event: Event) -> None:
        handler = getattr(self, f"_on_{event.kind}", None)
        if handler is None:
            raise CorruptLog(f"unknown event kind {event.kind!r} at seq {event.seq}")
        handler(event.payload)
        self.applied_events += 1

    def _on_rules_set(self, p: dict) -> None:
        self.rules = FilterRuleSet.from_json(p["rules"])
        self.strip_patterns = tuple(p.get("strip_patterns", ()))

    def _on_embedder_set(self, p: dict) -> None:
        self.embedder = EmbedderSpec.from_json(p["spec"])

    def _on_corpus_attached(self, p: dict) -> None:
        self.corpus_files.append(
            {
                "pool": p["pool"],
                "path": p["path"],
                "sha256": p["sha256"],
                "count_total": p["count_total"],
            }
        )
        self.pool_ids.setdefault(p["pool"], []).extend(p["pool_ids"])

    def _on_topics_built(self, p: dict) -> None:
        self.topics = dict(p)

    def _on_batch_created(self, p: dict) -> None:
        batch = QueryBatch.from_json(p["batch"])
        round_state = self.rounds.get(batch.round)
        if round_state is not None:
            round_state.batches.append(batch)
        elif batch.round != 0:
            raise CorruptLog(f"batch for unknown round {batch.round}")
        else:
            self._seed_batches.append(batch)

    def _on_labels_submitted(self, p: dict) -> None:
        oracle_id = p["oracle_id"]
        source = p.get("source", "human")
        seq = self.applied_events + 1  # log seqs are dense; apply() increments after us
        for rid, value in p["labels"].items():
            rec = self.labels.setdefault(rid, LabelRecord())
            rec.submissions[oracle_id] = value
            rec.submission_events[oracle_id] = seq
            distinct = set(rec.submissions.values())
            if len(distinct) == 1:
                rec.final, rec.source, rec.conflict = value, source, False
            else:
                rec.final, rec.source, rec.conflict = None, None, True

    def _on_label_adjudicated(self, p: dict) -> None:
        rec = self.labels.setdefault(p["record_id"], LabelRecord())
        rec.final = p["label"]
        rec.source = p.get("source", "human")
        rec.conflict = False

    def _on_counterfactual_created(self, p: dict) -> None:
        record = TriageRecord.from_json(p["record"])
        self.pairs.append(CounterfactualPair.from_json(p["pair"]))
        self.synthetic_records[record.id] = record
        rec = self.labels.setdefault(record.id, LabelRecord())
        rec.submissions["counterfactual"] = record.label.value
        rec.submission_events["counterfactual"] = self.applied_events + 1
        rec.final, rec.source, rec.conflict = record.label.value, "counterfactual", False

    def _on_dataset_created(self, p: dict) -> None:
        dataset = LabeledDataset.from_json(p["dataset"])
        self.datasets[dataset.version] = dataset
        self.holdover = list(p.get("holdover", []))

    def _on_round_started(self, p: dict) -> None:
        state = RoundState(
            round=p["round"],
            mode=p["mode"],
            dataset_version=p["dataset_version"],
            train_config=p.get("config"),
        )
        self.rounds[p["round"]] = state

    def _on_phase_advanced(self, p: dict) -> None:
        self.rounds[p["round"]].advance_phase(p["phase"])

    def _on_checkpoints_recorded(self, p: dict) -> None:
        round_state = self.rounds[p["round"]]
        for meta in p["checkpoints"]:
            self.checkpoints[meta["id"]] = dict(meta)
            round_state.checkpoint_ids.append(meta["id"])

    def _on_checkpoints_selected(self, p: dict) -> None:
        self.rounds[p["round"]].selected_checkpoint_ids = list(p["checkpoint_ids"])

    def _on_predictions_recorded(self, p: dict) -> None:
        key = f"{p['round']}/{p['checkpoint_id']}/{p['pool']}"
        self.predictions[key] = {
            "path": p["path"],
            "sha256": p["sha256"],
            "count": p["count"],
        }

    def _on_eval_extended(self, p: dict) -> None:
        additions = {rid: Label(v) for rid, v in p["additions"].items()}
        for rid, label in additions.items():
            if rid not in self.eval_set.labels:
                self.eval_set.round_added[rid] = p["round"]
                self.eval_set.source_pool[rid] = p["source_pool"]
            self.eval_set.labels[rid] = label

    def _on_report_recorded(self, p: dict) -> None:
        self.reports[p["round"]] = p["report"]
        self.rounds[p["round"]].report = p["report"]

    def _on_final_table_recorded(self, p: dict) -> None:
        self.final_table = dict(p)

    def _on_round_completed(self, p: dict) -> None:
        # terminal marker; phase must already be complete
        if self.rounds[p["round"]].phase != "complete":
            raise CorruptLog(f"round {p['round']} marked completed while {self.rounds[p['round']].phase}")

    def __post_init__(self) -> None:
        self._seed_batches: list[QueryBatch] = []

    @property
    def seed_batches(self) -> list[QueryBatch]:
        return self._seed_batches

    def to_json(self) -> dict:
        return {
            "rules": self.rules.to_json() if self.rules else None,
            "strip_patterns": list(self.strip_patterns),
            "embedder": self.embedder.to_json() if self.embedder else None,
            "corpus_files": list(self.corpus_files),
            "pool_sizes": {pool: len(ids) for pool, ids in sorted(self.pool_ids.items())},
            "topics": self.topics,
            "labels": {rid: rec.to_json() for rid, rec in sorted(self.labels.items())},
            "synthetic_records": {
                rid: record.to_json() for rid, record in sorted(self.synthetic_records.items())
            },
            "pairs": [pair.to_json() for pair in self.pairs],
            "datasets": {str(v): ds.to_json() for v, ds in sorted(self.datasets.items())},
            "holdover": list(self.holdover),
            "rounds": {str(r): state.to_json() for r, state in sorted(self.rounds.items())},
            "seed_batches": [b.to_json() for b in self._seed_batches],
            "checkpoints": {cid: meta for cid, meta in sorted(self.checkpoints.items())},
            "predictions": dict(sorted(self.predictions.items())),
            "eval_set": self.eval_set.to_json(),
            "reports": {str(r): report for r, report in sorted(self.reports.items())},
            "final_table": self.final_table,
        }


def replay(log: EventLog) -> ProjectState:
    state = ProjectState()
    for event in log:
        state.apply(event)
    return state
