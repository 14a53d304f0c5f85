"""Round orchestration.

A Project owns the event log, the record store, and all derived caches.
Every mutation is validated, appended to the log, applied to the folded
state, and mirrored into the record store, in that order, so the on-disk
log is always sufficient to rebuild what the API can see.

Rounds are a strict state machine: training -> checkpoint_eval ->
pool_predict -> queue_build -> labeling -> expand -> complete. advance()
performs the work of the current phase and moves to the next; the final
advance crosses labeling -> expand -> complete in one call because
expansion needs no further input once the queue is fully labeled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .augment import Direction, flip_to_negative, flip_to_positive
from .classifier import (
    Checkpoint,
    TrainConfig,
    predict_scores,
    resume_train,
    select_checkpoints,
    train,
)
from .datasets import LabeledDataset, build_dataset, expand_dataset
from .embedding import EmbedderSpec, embed_matrix, embed_text
from .evaluation import (
    LeakageDetected,
    assert_disjoint,
    compute_auc,
    confusion,
    metrics,
    score_table,
)
from .records import (
    FilterRuleSet,
    Label,
    LabelSource,
    Pool,
    RecordStore,
    TriageRecord,
    keyword_filter,
    pattern_match,
    preprocess,
    read_records,
)
from .sampling import (
    QueryBatch,
    QuotaPlan,
    Strategy,
    diversity_seed,
    interval_sample,
    mine_false_negatives,
    positive_predictions,
    uncertain_negatives,
)
from .store import ConflictPending, EventLog, ProjectState, RoundState, replay, sha256_file
from .synth import SimulatedOracle
from .topics import TopicModel, cluster, flag_target_topics, reduce_topics, summarize


class NoDataset(RuntimeError):
    pass


class PreviousIncomplete(RuntimeError):
    pass


class NoActiveRound(RuntimeError):
    pass


class QueueIncomplete(RuntimeError):
    pass


class UnknownRecord(KeyError):
    pass


@dataclass(frozen=True)
class LoopConfig:
    ratio_cap: float = 1.5
    beta: float = 1.3
    uncertain_threshold: float = 0.90
    fn_threshold: float = 0.90
    top_k: int = 2
    eval_share: float = 0.5
    validation_share: float = 0.1
    validation_rounds: tuple[int, ...] = (2, 3)
    max_positive_labels: int = 500
    max_uncertain_labels: int = 300
    max_fn_labels: int = 150
    counterfactual_rounds: tuple[int, ...] = (2, 3)
    negative_flips_per_round: int = 80
    positive_flips_per_round: int = 20
    # Stopping signal only: reported per round, never enforced.
    stop_fp_threshold: int | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "LoopConfig":
        known = {f: obj[f] for f in obj if f in cls.__dataclass_fields__}
        for tup in ("validation_rounds", "counterfactual_rounds"):
            if tup in known:
                known[tup] = tuple(int(r) for r in known[tup])
        return cls(**known)


INSERT_SPANS = ("after flu vaccine", "post covid vaccine", "since flu vaccine yesterday")


def _stride_split(ids: Iterable[str], share: float) -> tuple[list[str], list[str]]:
    """Deterministic (selected, rest) split; selected gets ~share of ids."""
    ordered = sorted(ids)
    quota = int(round(len(ordered) * share))
    chosen = set(interval_sample(ordered, quota)) if quota > 0 else set()
    return [i for i in ordered if i in chosen], [i for i in ordered if i not in chosen]


class Project:
    def __init__(
        self,
        root: str | Path,
        log: EventLog,
        state: ProjectState,
        store: RecordStore,
        config: LoopConfig | None = None,
    ) -> None:
        self.root = Path(root)
        self.log = log
        self.state = state
        self.store = store
        self.config = config or LoopConfig()
        self._vectors: dict[str, np.ndarray] = {}
        self._checkpoint_cache: dict[str, Checkpoint] = {}
        self._prediction_cache: dict[str, dict[str, float]] = {}
        self._topic_model_cache: TopicModel | None = None

    # ---------- lifecycle ----------

    @classmethod
    def init(
        cls,
        root: str | Path,
        config: LoopConfig | None = None,
        clock: Callable[[], str] | None = None,
    ) -> "Project":
        rootp = Path(root)
        rootp.mkdir(parents=True, exist_ok=True)
        for sub in ("artifacts/checkpoints", "artifacts/predictions", "reports"):
            (rootp / sub).mkdir(parents=True, exist_ok=True)
        log_path = rootp / "events.jsonl"
        if log_path.exists():
            raise FileExistsError(f"{log_path} already exists; open() instead")
        log = EventLog(log_path, **({"clock": clock} if clock else {}))
        return cls(rootp, log, ProjectState(), RecordStore(), config)

    @classmethod
    def open(
        cls,
        root: str | Path,
        config: LoopConfig | None = None,
        clock: Callable[[], str] | None = None,
    ) -> "Project":
        rootp = Path(root)
        log = EventLog(rootp / "events.jsonl", **({"clock": clock} if clock else {}))
        state = replay(log)
        store = RecordStore()
        for entry in state.corpus_files:
            path = rootp / entry["path"]
            if sha256_file(path) != entry["sha256"]:
                raise RuntimeError(f"corpus file {path} changed since it was attached")
            for record in read_records(path):
                store.add(preprocess(record, state.strip_patterns))
        for record in state.synthetic_records.values():
            store.add(record)
        for rid, rec in state.labels.items():
            if rec.source == "counterfactual":
                continue  # synthetic records are labeled at construction
            if rec.final is None:
                continue
            store.set_label(rid, Label(rec.final), LabelSource(rec.source))
        return cls(rootp, log, state, store, config)

    def _commit(self, kind: str, payload: dict) -> None:
        event = self.log.append(kind, payload)
        self.state.apply(event)
        if kind in ("labels_submitted", "label_adjudicated"):
            ids = payload["labels"] if kind == "labels_submitted" else [payload["record_id"]]
            for rid in ids:
                rec = self.state.labels[rid]
                if rec.final is None:
                    self.store.set_label(rid, Label.UNLABELED, LabelSource.NONE)
                else:
                    self.store.set_label(rid, Label(rec.final), LabelSource(rec.source))
        elif kind == "counterfactual_created":
            self.store.add(self.state.synthetic_records[payload["record"]["id"]])

    # ---------- setup ----------

    def set_rules(self, rules: FilterRuleSet, strip_patterns: Sequence[str] = ()) -> None:
        self._commit(
            "rules_set", {"rules": rules.to_json(), "strip_patterns": list(strip_patterns)}
        )

    def set_embedder(self, spec: EmbedderSpec) -> None:
        self._commit("embedder_set", {"spec": spec.to_json()})

    def attach_corpus(self, path: str | Path, pool: Pool) -> dict:
        """Ingest a corpus file. Focused files pass through the keyword
        filter; deployment files join the pool unfiltered."""
        if self.state.rules is None:
            raise RuntimeError("set_rules before attaching corpora")
        path = Path(path)
        raw = read_records(path)
        prepared = [preprocess(r, self.state.strip_patterns) for r in raw]
        if pool is Pool.FOCUSED:
            retained, rejected = keyword_filter(prepared, self.state.rules)
            pool_ids = [r.id for r in retained]
        else:
            rejected = []
            pool_ids = [r.id for r in prepared]
        rel = path.relative_to(self.root) if path.is_relative_to(self.root) else path
        self._commit(
            "corpus_attached",
            {
                "pool": pool.value,
                "path": str(rel),
                "sha256": sha256_file(path),
                "count_total": len(prepared),
                "pool_ids": pool_ids,
            },
        )
        self.store.add_all(prepared)
        return {"total": len(prepared), "retained": len(pool_ids), "rejected": len(rejected)}

    def _require_embedder(self) -> EmbedderSpec:
        if self.state.embedder is None:
            raise RuntimeError("set_embedder first")
        return self.state.embedder

    def _matrix(self, ids: Sequence[str]) -> np.ndarray:
        spec = self._require_embedder()
        missing = [rid for rid in ids if rid not in self._vectors]
        if missing:
            rows = embed_matrix([self.store.get(rid).clean_text for rid in missing], spec)
            for i, rid in enumerate(missing):
                self._vectors[rid] = rows[i]
        return np.stack([self._vectors[rid] for rid in ids]) if ids else np.zeros((0, spec.dim))

    def build_topics(
        self,
        k: int,
        seed: int,
        reduce_to: int | None = None,
        flag_threshold: float = 0.5,
        probe: Callable[[str], bool] | Mapping[str, bool] | None = None,
        probe_sample: int = 5,
        explicit_flags: Mapping[int, bool] | None = None,
    ) -> TopicModel:
        """Cluster the focused pool, optionally merge down to reduce_to
        topics, extract keywords, and flag likely-target topics via a probe
        over a small per-topic sample (or take the flags verbatim)."""
        spec = self._require_embedder()
        focused = self.state.pool_ids.get(Pool.FOCUSED.value, [])
        if not focused:
            raise RuntimeError("no focused pool attached")
        vectors = {rid: embed_text(self.store.get(rid).clean_text, spec) for rid in focused}
        model = cluster(vectors, k=k, seed=seed)
        if reduce_to is not None and reduce_to < model.k:
            model = reduce_topics(model, reduce_to)
        return self._finalize_topics(model, flag_threshold, probe, probe_sample, explicit_flags)

    def _finalize_topics(
        self,
        model: TopicModel,
        flag_threshold: float,
        probe: Callable[[str], bool] | Mapping[str, bool] | None,
        probe_sample: int,
        explicit_flags: Mapping[int, bool] | None = None,
    ) -> TopicModel:
        texts = {rid: self.store.get(rid).clean_text for rid in model.assignment}
        model = summarize(model, texts)
        if explicit_flags is not None:
            model.target_flag = {t: bool(explicit_flags.get(t, False)) for t in range(model.k)}
        else:
            if probe is None:
                probe = lambda rid: pattern_match(self.store.get(rid), self.state.rules)  # noqa: E731
            if callable(probe):
                sampled: dict[str, bool] = {}
                for topic in range(model.k):
                    members = sorted(model.members(topic), key=lambda r: (model.distances[r], r))
                    for rid in interval_sample(members, min(probe_sample, len(members))):
                        sampled[rid] = bool(probe(rid))
                probe = sampled
            model = flag_target_topics(model, probe, threshold=flag_threshold)
        artifact = self.root / "artifacts" / f"topics-k{model.k}.json"
        model.save(artifact)
        self._topic_model_cache = model
        self._commit(
            "topics_built",
            {
                "k": model.k,
                "path": str(artifact.relative_to(self.root)),
                "sha256": sha256_file(artifact),
                "flagged": sorted(t for t, on in model.target_flag.items() if on),
                "keywords": {
                    str(t): [g for g, _ in model.keywords.get(t, ())] for t in range(model.k)
                },
                "member_counts": {str(t): c for t, c in model.member_counts().items()},
                "assignment": dict(sorted(model.assignment.items())),
            },
        )
        return model

    def _topic_model(self) -> TopicModel:
        if self._topic_model_cache is None:
            if self.state.topics is None:
                raise RuntimeError("no topic model built")
            self._topic_model_cache = TopicModel.load(self.root / self.state.topics["path"])
        return self._topic_model_cache

    def reduce_topic_model(
        self,
        target_k: int,
        flag_threshold: float = 0.5,
        probe: Callable[[str], bool] | Mapping[str, bool] | None = None,
        probe_sample: int = 5,
        explicit_flags: Mapping[int, bool] | None = None,
    ) -> TopicModel:
        """Merge the saved topic model down to target_k. Persisted models drop
        their member vectors, so the members are re-embedded first."""
        model = self._topic_model()
        spec = self._require_embedder()
        model.vectors = {
            rid: embed_text(self.store.get(rid).clean_text, spec).values
            for rid in model.assignment
        }
        reduced = reduce_topics(model, target_k)
        return self._finalize_topics(reduced, flag_threshold, probe, probe_sample, explicit_flags)

    def reflag_topics(
        self,
        flag_threshold: float,
        probe: Callable[[str], bool] | Mapping[str, bool] | None = None,
        probe_sample: int = 5,
        explicit_flags: Mapping[int, bool] | None = None,
    ) -> TopicModel:
        return self._finalize_topics(
            self._topic_model(), flag_threshold, probe, probe_sample, explicit_flags
        )

    # ---------- labels ----------

    def submit_labels(
        self,
        labels: Mapping[str, Label | str],
        oracle_id: str,
        source: str = "human",
    ) -> dict:
        """Record label submissions. Resubmitting the same label for the same
        record and oracle appends nothing; the ack carries the original event
        id, so retries are safe."""
        normalized = {rid: Label(v).value for rid, v in labels.items()}
        for rid, value in normalized.items():
            if rid not in self.store:
                raise UnknownRecord(rid)
            if Label(value) is Label.UNLABELED:
                raise ValueError(f"{rid}: cannot submit an unlabeled label")
        fresh = {}
        events: dict[str, int] = {}
        for rid, value in normalized.items():
            prior = self.state.labels.get(rid)
            if prior is not None and prior.submissions.get(oracle_id) == value:
                events[rid] = prior.submission_events[oracle_id]
            else:
                fresh[rid] = value
        if fresh:
            self._commit(
                "labels_submitted",
                {"oracle_id": oracle_id, "source": source, "labels": fresh},
            )
            for rid in fresh:
                events[rid] = self.state.labels[rid].submission_events[oracle_id]
        conflicts = [rid for rid in normalized if self.state.labels[rid].conflict]
        return {"accepted": len(fresh), "events": events, "conflicts": conflicts}

    def adjudicate(self, record_id: str, label: Label | str, oracle_id: str) -> None:
        if record_id not in self.store:
            raise UnknownRecord(record_id)
        self._commit(
            "label_adjudicated",
            {
                "record_id": record_id,
                "label": Label(label).value,
                "oracle_id": oracle_id,
                "source": "human",
            },
        )

    def create_counterfactual(
        self,
        source_id: str,
        direction: Direction | str,
        span: str,
        position: int | None = None,
    ) -> tuple[TriageRecord, dict]:
        if source_id not in self.store:
            raise UnknownRecord(source_id)
        direction = Direction(direction)
        source = self.store.get(source_id)
        if direction is Direction.TO_NEGATIVE:
            synthetic, pair = flip_to_negative(source, span, rules=self.state.rules)
        else:
            if position is None:
                raise ValueError("flip_to_positive requires a token position")
            synthetic, pair = flip_to_positive(source, span, position, rules=self.state.rules)
        self._commit(
            "counterfactual_created",
            {"pair": pair.to_json(), "record": synthetic.to_json()},
        )
        return synthetic, pair.to_json()

    # ---------- seed ----------

    def create_seed_batch(self, plan: QuotaPlan) -> QueryBatch:
        model = self._topic_model()
        labeled = frozenset(self.state.labeled_ids())
        base = diversity_seed(model, plan, round=0, exclude=labeled)
        batch = QueryBatch(
            strategy=Strategy.DIVERSITY_SEED,
            record_ids=base.record_ids,
            round=0,
            created_at="seed",
        )
        self._commit("batch_created", {"batch": batch.to_json()})
        return batch

    def build_seed_dataset(self, validation_share: float = 0.2) -> LabeledDataset:
        if self.state.datasets:
            raise RuntimeError("seed dataset already built")
        if not self.state.seed_batches:
            raise RuntimeError("no seed batch created")
        ids = [rid for batch in self.state.seed_batches for rid in batch.record_ids]
        self._require_all_labeled(ids)
        by_class: dict[Label, list[str]] = {Label.POSITIVE: [], Label.NEGATIVE: []}
        for rid in ids:
            by_class[self.state.final_label(rid)].append(rid)
        val_ids: list[str] = []
        train_ids: list[str] = []
        for group in by_class.values():
            chosen, rest = _stride_split(group, validation_share)
            val_ids.extend(chosen)
            train_ids.extend(rest)
        # Ratio cap applies to the seed version too; excess negatives are
        # deferred exactly like a later expansion would.
        train_pos = [r for r in train_ids if self.state.final_label(r) is Label.POSITIVE]
        train_neg = sorted(r for r in train_ids if self.state.final_label(r) is Label.NEGATIVE)
        allowed = int(self.config.ratio_cap * len(train_pos))
        holdover = train_neg[allowed:] if len(train_neg) > allowed else []
        kept_neg = train_neg[:allowed]
        dataset = build_dataset(1, train_pos + kept_neg, val_ids, self.store)
        self._commit(
            "dataset_created", {"dataset": dataset.to_json(), "holdover": sorted(holdover)}
        )
        return dataset

    def _require_all_labeled(self, ids: Iterable[str]) -> None:
        missing = [rid for rid in ids if self.state.final_label(rid) is Label.UNLABELED]
        conflicted = [rid for rid in missing if self.state.labels.get(rid) and self.state.labels[rid].conflict]
        if conflicted:
            raise ConflictPending(f"{len(conflicted)} records await adjudication, e.g. {conflicted[:3]}")
        if missing:
            raise QueueIncomplete(f"{len(missing)} queued records unlabeled, e.g. {missing[:3]}")

    # ---------- rounds ----------

    def start_round(self, mode: str, train_config: TrainConfig) -> RoundState:
        if mode not in ("from_scratch", "resume_best", "both"):
            raise ValueError(f"unknown mode {mode!r}")
        dataset = self.state.latest_dataset()
        if dataset is None:
            raise NoDataset("build the seed dataset before starting a round")
        current = self.state.current_round()
        if current is not None and current.phase != "complete":
            raise PreviousIncomplete(f"round {current.round} is at phase {current.phase}")
        number = (current.round if current else 0) + 1
        if mode in ("resume_best", "both") and current is None:
            raise PreviousIncomplete("resume_best needs a completed prior round")
        self._commit(
            "round_started",
            {
                "round": number,
                "mode": mode,
                "dataset_version": dataset.version,
                "config": train_config.to_json(),
            },
        )
        return self.state.rounds[number]

    def advance(self, oracle: SimulatedOracle | None = None) -> str:
        round_state = self.state.current_round()
        if round_state is None:
            raise NoActiveRound("no round started")
        if round_state.phase == "complete":
            raise NoActiveRound(f"round {round_state.round} already complete")
        phase = round_state.phase
        if phase == "training":
            self._do_training(round_state)
            self._commit("phase_advanced", {"round": round_state.round, "phase": "checkpoint_eval"})
        elif phase == "checkpoint_eval":
            self._do_checkpoint_eval(round_state)
            self._commit("phase_advanced", {"round": round_state.round, "phase": "pool_predict"})
        elif phase == "pool_predict":
            self._do_pool_predict(round_state)
            self._commit("phase_advanced", {"round": round_state.round, "phase": "queue_build"})
        elif phase == "queue_build":
            self._do_queue_build(round_state)
            self._commit("phase_advanced", {"round": round_state.round, "phase": "labeling"})
        elif phase == "labeling":
            self._do_labeling(round_state, oracle)
            self._commit("phase_advanced", {"round": round_state.round, "phase": "expand"})
            self._do_expand(round_state)
            self._commit("phase_advanced", {"round": round_state.round, "phase": "complete"})
            self._commit("round_completed", {"round": round_state.round})
            self._write_snapshot()
        return round_state.phase

    def run_round(
        self, mode: str, train_config: TrainConfig, oracle: SimulatedOracle | None = None
    ) -> RoundState:
        round_state = self.start_round(mode, train_config)
        while round_state.phase != "complete":
            self.advance(oracle)
        return round_state

    # ---------- phase work ----------

    def _record_checkpoints(self, round_state: RoundState, lineage: str, ckpts: list[Checkpoint]) -> None:
        metas = []
        for ckpt in ckpts:
            artifact = self.root / "artifacts" / "checkpoints" / f"{ckpt.id}.json"
            artifact.write_text(json.dumps(ckpt.to_json(), sort_keys=True))
            self._checkpoint_cache[ckpt.id] = ckpt
            metas.append(
                {
                    "id": ckpt.id,
                    "round": ckpt.round,
                    "step": ckpt.step,
                    "dataset_version": ckpt.dataset_version,
                    "val_loss": ckpt.val_loss,
                    "val_auc": ckpt.val_auc,
                    "val_f1": ckpt.val_f1,
                    "parent_id": ckpt.parent_id,
                    "lineage": lineage,
                    "path": str(artifact.relative_to(self.root)),
                    "sha256": sha256_file(artifact),
                }
            )
        self._commit(
            "checkpoints_recorded",
            {"round": round_state.round, "lineage": lineage, "checkpoints": metas},
        )

    def _do_training(self, round_state: RoundState) -> None:
        dataset = self.state.datasets[round_state.dataset_version]
        spec = self._require_embedder()
        config = TrainConfig.from_json(round_state.train_config)
        config = replace(config, seed=config.seed + round_state.round)
        if round_state.mode in ("from_scratch", "both"):
            ckpts = train(
                dataset, self.store, spec, config,
                round=round_state.round, lineage="scratch", matrix_fn=self._matrix,
            )
            self._record_checkpoints(round_state, "scratch", ckpts)
        if round_state.mode in ("resume_best", "both"):
            prev = self.state.rounds[round_state.round - 1]
            parent = self._checkpoint(prev.selected_checkpoint_ids[0])
            ckpts = resume_train(
                parent, dataset, self.store, spec, config,
                round=round_state.round, lineage=f"ft{prev.round}", matrix_fn=self._matrix,
            )
            self._record_checkpoints(round_state, f"ft{prev.round}", ckpts)

    def _checkpoint(self, checkpoint_id: str) -> Checkpoint:
        if checkpoint_id not in self._checkpoint_cache:
            meta = self.state.checkpoints[checkpoint_id]
            data = json.loads((self.root / meta["path"]).read_text())
            self._checkpoint_cache[checkpoint_id] = Checkpoint.from_json(data)
        return self._checkpoint_cache[checkpoint_id]

    def _do_checkpoint_eval(self, round_state: RoundState) -> None:
        ckpts = [self._checkpoint(cid) for cid in round_state.checkpoint_ids]
        best = select_checkpoints(ckpts, top_k=min(self.config.top_k, len(ckpts)))
        self._commit(
            "checkpoints_selected",
            {"round": round_state.round, "checkpoint_ids": [c.id for c in best]},
        )

    def _unlabeled_pool(self, pool: Pool) -> list[str]:
        labeled = self.state.labeled_ids()
        return [rid for rid in self.state.pool_ids.get(pool.value, []) if rid not in labeled]

    def _do_pool_predict(self, round_state: RoundState) -> None:
        for cid in round_state.selected_checkpoint_ids:
            ckpt = self._checkpoint(cid)
            for pool in (Pool.FOCUSED, Pool.DEPLOYMENT):
                ids = self._unlabeled_pool(pool)
                scores = predict_scores(ckpt, self._matrix(ids)) if ids else np.zeros(0)
                preds = {rid: float(scores[i]) for i, rid in enumerate(ids)}
                key = f"{round_state.round}/{cid}/{pool.value}"
                artifact = (
                    self.root
                    / "artifacts"
                    / "predictions"
                    / f"r{round_state.round}-{cid}-{pool.value}.json"
                )
                artifact.write_text(json.dumps(preds, sort_keys=True))
                self._prediction_cache[key] = preds
                self._commit(
                    "predictions_recorded",
                    {
                        "round": round_state.round,
                        "checkpoint_id": cid,
                        "pool": pool.value,
                        "path": str(artifact.relative_to(self.root)),
                        "sha256": sha256_file(artifact),
                        "count": len(preds),
                    },
                )

    def _predictions(self, round_number: int, checkpoint_id: str, pool: Pool) -> dict[str, float]:
        key = f"{round_number}/{checkpoint_id}/{pool.value}"
        if key not in self._prediction_cache:
            ref = self.state.predictions[key]
            self._prediction_cache[key] = json.loads((self.root / ref["path"]).read_text())
        return self._prediction_cache[key]

    def _do_queue_build(self, round_state: RoundState) -> None:
        best = round_state.selected_checkpoint_ids[0]
        preds_f = self._predictions(round_state.round, best, Pool.FOCUSED)
        preds_d = self._predictions(round_state.round, best, Pool.DEPLOYMENT)
        merged = {**preds_f, **preds_d}
        records = {rid: self.store.get(rid) for rid in merged}
        stamp = f"round-{round_state.round}"

        fn = mine_false_negatives(
            merged, records, self.state.rules, threshold=self.config.fn_threshold
        )
        pos = positive_predictions(merged)
        unc = uncertain_negatives(merged, threshold=self.config.uncertain_threshold)
        for base, cap in (
            (fn, self.config.max_fn_labels),
            (pos, self.config.max_positive_labels),
            (unc, self.config.max_uncertain_labels),
        ):
            ids = base.record_ids[:cap]
            if not ids:
                continue
            batch = QueryBatch(
                strategy=base.strategy,
                record_ids=ids,
                round=round_state.round,
                created_at=stamp,
            )
            self._commit("batch_created", {"batch": batch.to_json()})

    def _do_labeling(self, round_state: RoundState, oracle: SimulatedOracle | None) -> None:
        queued = [rid for batch in round_state.batches for rid in batch.record_ids]
        if oracle is not None:
            pending = [rid for rid in queued if self.state.final_label(rid) is Label.UNLABELED]
            for batch in round_state.batches:
                todo = {
                    rid: oracle.label(rid).value for rid in batch.record_ids if rid in set(pending)
                }
                if todo:
                    self.submit_labels(todo, oracle_id="sim-oracle", source="simulated")
            if round_state.round in self.config.counterfactual_rounds:
                self._scripted_counterfactuals(oracle)
        self._require_all_labeled(queued)

    def _scripted_counterfactuals(self, oracle: SimulatedOracle) -> None:
        flipped_sources = {pair.source_id for pair in self.state.pairs}
        positives = sorted(
            rid
            for rid, rec in self.state.labels.items()
            if rec.final == Label.POSITIVE.value
            and rec.source != "counterfactual"
            and rid not in flipped_sources
            and oracle.flip_span(rid) is not None
        )
        flippable: list[tuple[str, str]] = []
        for rid in positives:
            span = oracle.flip_span(rid)
            # skip spans a counterfactual author could not use: duplicated by
            # raw-text noise (not cleanly removable) or carrying no keyword
            if self.store.get(rid).clean_text.count(span) != 1:
                continue
            if not any(term in span for term in self.state.rules.include_terms):
                continue
            flippable.append((rid, span))
        for rid, span in flippable[: self.config.negative_flips_per_round]:
            self.create_counterfactual(rid, Direction.TO_NEGATIVE, span)
        negatives = sorted(
            rid
            for rid, rec in self.state.labels.items()
            if rec.final == Label.NEGATIVE.value
            and rec.source != "counterfactual"
            and rid not in flipped_sources
            and not pattern_match(self.store.get(rid), self.state.rules)
        )
        for i, rid in enumerate(negatives[: self.config.positive_flips_per_round]):
            span = INSERT_SPANS[i % len(INSERT_SPANS)]
            tokens = self.store.get(rid).clean_text.split(" ")
            self.create_counterfactual(
                rid, Direction.TO_POSITIVE, span, position=min(3, len(tokens))
            )

    def _do_expand(self, round_state: RoundState) -> None:
        current = self.state.datasets[round_state.dataset_version]
        best = round_state.selected_checkpoint_ids[0]
        queued = sorted({rid for batch in round_state.batches for rid in batch.record_ids})

        deployment_new = [
            rid for rid in queued if self.store.get(rid).pool is Pool.DEPLOYMENT
        ]
        eval_ids: list[str] = []
        train_candidates = [rid for rid in queued if rid not in set(deployment_new)]
        for label in (Label.POSITIVE, Label.NEGATIVE):
            group = [rid for rid in deployment_new if self.state.final_label(rid) is label]
            chosen, rest = _stride_split(group, self.config.eval_share)
            eval_ids.extend(chosen)
            train_candidates.extend(rest)

        if eval_ids:
            additions = {rid: self.state.final_label(rid).value for rid in sorted(eval_ids)}
            datasets = list(self.state.datasets.values())
            for rid in additions:
                if any(rid in ds.all_ids() for ds in datasets):
                    raise LeakageDetected(f"record {rid} already in a dataset version")
            self._commit(
                "eval_extended",
                {"round": round_state.round, "source_pool": "deployment", "additions": additions},
            )

        in_datasets = set().union(*(ds.all_ids() for ds in self.state.datasets.values()))
        synth_new = [
            rid for rid in sorted(self.state.synthetic_records) if rid not in in_datasets
        ]
        additions_train = sorted(set(train_candidates) | set(synth_new) | set(self.state.holdover))
        merged_preds = {
            **self._predictions(round_state.round, best, Pool.FOCUSED),
            **self._predictions(round_state.round, best, Pool.DEPLOYMENT),
        }
        expanded, holdover = expand_dataset(
            current,
            additions_train,
            self.store,
            ratio_cap=self.config.ratio_cap,
            validation_share=(
                self.config.validation_share
                if round_state.round in self.config.validation_rounds
                else 0.0
            ),
            predictions=merged_preds,
        )
        self._commit(
            "dataset_created", {"dataset": expanded.to_json(), "holdover": sorted(holdover)}
        )
        assert_disjoint(self.state.eval_set, self.state.datasets.values())
        report = self._round_report(round_state)
        self._commit("report_recorded", {"round": round_state.round, "report": report})
        self._write_report_files(round_state.round, report)

    # ---------- reports ----------

    def _score_on_eval(self, checkpoint: Checkpoint) -> tuple[dict, dict]:
        eval_ids = sorted(self.state.eval_set.labels)
        labels = {rid: self.state.eval_set.labels[rid] for rid in eval_ids}
        scores = predict_scores(checkpoint, self._matrix(eval_ids))
        preds = {rid: float(scores[i]) for i, rid in enumerate(eval_ids)}
        cm = confusion(labels, preds)
        auc = compute_auc(labels, preds) if 0 < sum(
            1 for v in labels.values() if v is Label.POSITIVE
        ) < len(labels) else None
        report = metrics(cm, beta=self.config.beta, auc=auc)
        return cm.to_json(), report.to_json()

    def _pattern_on_eval(self) -> tuple[dict, dict]:
        labels = dict(self.state.eval_set.labels)
        preds = {
            rid: 1.0 if pattern_match(self.store.get(rid), self.state.rules) else 0.0
            for rid in labels
        }
        cm = confusion(labels, preds)
        return cm.to_json(), metrics(cm, beta=self.config.beta).to_json()

    def _round_report(self, round_state: RoundState) -> dict:
        best = self._checkpoint(round_state.selected_checkpoint_ids[0])
        model_cm, model_metrics = self._score_on_eval(best)
        pattern_cm, pattern_metrics = self._pattern_on_eval()
        trained = self.state.datasets[round_state.dataset_version]
        new_fp = 0
        for batch in round_state.batches:
            if batch.strategy is Strategy.POSITIVE_PREDICTION:
                new_fp += sum(
                    1
                    for rid in batch.record_ids
                    if self.state.final_label(rid) is Label.NEGATIVE
                )
        threshold = self.config.stop_fp_threshold
        return {
            "round": round_state.round,
            "checkpoint_id": best.id,
            "beta": self.config.beta,
            "eval_size": len(self.state.eval_set.labels),
            "eval_positives": self.state.eval_set.positive_count,
            "eval_negatives": self.state.eval_set.negative_count,
            "model": {"confusion": model_cm, "metrics": model_metrics},
            "pattern": {"confusion": pattern_cm, "metrics": pattern_metrics},
            "dataset_version": trained.version,
            "train_counts": trained.train_counts.to_json(),
            "validation_counts": trained.validation_counts.to_json(),
            "new_false_positives": new_fp,
            "stopping_criterion_met": threshold is not None and new_fp <= threshold,
        }

    def _write_report_files(self, round_number: int, report: dict) -> None:
        path = self.root / "reports" / f"round-{round_number}.json"
        path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")

    def _write_snapshot(self) -> None:
        # Crash-recovery convenience only; replaying the event log is
        # authoritative and open() never reads this file.
        payload = {"applied_events": self.state.applied_events, "state": self.state.to_json()}
        (self.root / "reports" / "state-snapshot.json").write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n"
        )

    def final_table(self) -> dict:
        """Score every round's best checkpoint, plus the keyword baseline,
        on the final evaluation set."""
        if not self.state.rounds:
            raise NoActiveRound("no rounds have run")
        eval_ids = sorted(self.state.eval_set.labels)
        if not eval_ids:
            raise RuntimeError("evaluation set is empty")
        labels = {rid: self.state.eval_set.labels[rid] for rid in eval_ids}
        rows = []
        table_rows = []
        for number in sorted(self.state.rounds):
            round_state = self.state.rounds[number]
            if not round_state.selected_checkpoint_ids:
                continue
            ckpt = self._checkpoint(round_state.selected_checkpoint_ids[0])
            scores = predict_scores(ckpt, self._matrix(eval_ids))
            preds = {rid: float(scores[i]) for i, rid in enumerate(eval_ids)}
            cm = confusion(labels, preds)
            report = metrics(cm, beta=self.config.beta)
            rows.append(
                {
                    "name": f"Round {number}",
                    "checkpoint_id": ckpt.id,
                    "confusion": cm.to_json(),
                    "metrics": report.to_json(),
                }
            )
            table_rows.append((f"Round {number}", cm, report))
        pattern_cm_json, pattern_metrics_json = self._pattern_on_eval()
        from .evaluation import ConfusionMatrix, MetricReport

        table_rows.append(
            (
                "Pattern Matching",
                ConfusionMatrix.from_json(pattern_cm_json),
                MetricReport.from_json(pattern_metrics_json),
            )
        )
        rows.append(
            {
                "name": "Pattern Matching",
                "checkpoint_id": None,
                "confusion": pattern_cm_json,
                "metrics": pattern_metrics_json,
            }
        )
        text = score_table(table_rows)
        precisions = [r["metrics"]["precision"] for r in rows if r["name"].startswith("Round")]
        train_sizes = [
            self.state.datasets[self.state.rounds[n].dataset_version].train_counts.size
            for n in sorted(self.state.rounds)
        ]
        baseline = rows[-1]["metrics"]
        final_model = rows[-2]["metrics"] if len(rows) >= 2 else None
        checks = {
            "round1_recall_ge_0.9": bool(rows and rows[0]["metrics"]["recall"] >= 0.9),
            "round1_precision_below_pattern": bool(
                rows and rows[0]["metrics"]["precision"] < baseline["precision"]
            ),
            "precision_strictly_increasing": all(
                b > a for a, b in zip(precisions, precisions[1:])
            ),
            "final_f1_beats_pattern": bool(
                final_model and final_model["f1"] > baseline["f1"]
            ),
            "train_sizes_strictly_increasing": all(
                b > a for a, b in zip(train_sizes, train_sizes[1:])
            ),
        }
        payload = {
            "rows": rows,
            "text": text,
            "beta": self.config.beta,
            "eval_size": len(eval_ids),
            "train_sizes": train_sizes,
            "checks": checks,
        }
        self._commit("final_table_recorded", payload)
        (self.root / "reports" / "final_table.json").write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n"
        )
        (self.root / "reports" / "final_table.txt").write_text(text + "\n")
        return payload

    # ---------- scripted driver ----------

    def run_scripted(
        self,
        oracle: SimulatedOracle,
        rounds: int,
        train_config: TrainConfig,
        seed_plan: QuotaPlan,
        topics_k: int,
        topics_seed: int,
        reduce_to: int | None = None,
        seed_validation_share: float = 0.2,
        final_round_mode: str = "both",
    ) -> dict:
        """Full pipeline with the simulated oracle: topics, seed labeling,
        N rounds, final comparison table."""
        self.build_topics(
            topics_k,
            seed=topics_seed,
            reduce_to=reduce_to,
            probe=lambda rid: oracle.label(rid) is Label.POSITIVE,
        )
        batch = self.create_seed_batch(seed_plan)
        self.submit_labels(
            {rid: oracle.label(rid) for rid in batch.record_ids},
            oracle_id="sim-oracle",
            source="simulated",
        )
        self.build_seed_dataset(validation_share=seed_validation_share)
        for number in range(1, rounds + 1):
            mode = final_round_mode if number == rounds and number > 1 else "from_scratch"
            self.run_round(mode, train_config, oracle)
        return self.final_table()

    # ---------- queue / views ----------

    def queue_next(self, strategy: Strategy | str | None = None) -> dict | None:
        round_state = self.state.current_round()
        if round_state is None:
            return None
        wanted = Strategy(strategy) if strategy else None
        best = (
            round_state.selected_checkpoint_ids[0]
            if round_state.selected_checkpoint_ids
            else None
        )
        for batch in round_state.batches:
            if wanted and batch.strategy is not wanted:
                continue
            for rid in batch.record_ids:
                rec = self.state.labels.get(rid)
                if rec is not None and (rec.final is not None or rec.conflict):
                    continue
                return self.record_view(rid, round_number=round_state.round, best=best, batch=batch)
        return None

    def queue_summary(self) -> dict:
        """Backlog counts per strategy for the active round; zeros when idle."""
        round_state = self.state.current_round()
        if round_state is None:
            return {"round": None, "phase": None, "strategies": [], "remaining_total": 0}
        strategies = []
        remaining_total = 0
        for batch in round_state.batches:
            labeled = conflicts = 0
            for rid in batch.record_ids:
                rec = self.state.labels.get(rid)
                if rec is not None and rec.conflict:
                    conflicts += 1
                elif rec is not None and rec.final is not None:
                    labeled += 1
            remaining = len(batch.record_ids) - labeled - conflicts
            remaining_total += remaining
            strategies.append(
                {
                    "strategy": batch.strategy.value,
                    "total": len(batch.record_ids),
                    "labeled": labeled,
                    "conflicts": conflicts,
                    "remaining": remaining,
                }
            )
        return {
            "round": round_state.round,
            "phase": round_state.phase,
            "strategies": strategies,
            "remaining_total": remaining_total,
        }

    def conflicts(self) -> list[dict]:
        """Records whose submissions disagree and await adjudication."""
        out = []
        for rid in sorted(self.state.labels):
            rec = self.state.labels[rid]
            if rec.conflict:
                out.append(
                    {"record_id": rid, "submissions": dict(sorted(rec.submissions.items()))}
                )
        return out

    def record_view(
        self,
        rid: str,
        round_number: int | None = None,
        best: str | None = None,
        batch: QueryBatch | None = None,
    ) -> dict:
        if rid not in self.store:
            raise UnknownRecord(rid)
        record = self.store.get(rid)
        probability = None
        if best is not None and round_number is not None:
            for pool in (Pool.FOCUSED, Pool.DEPLOYMENT):
                key = f"{round_number}/{best}/{pool.value}"
                if key in self.state.predictions:
                    probability = self._predictions(round_number, best, pool).get(rid, probability)
        keywords: list[str] = []
        if self.state.topics is not None:
            topic = self.state.topics.get("assignment", {}).get(rid)
            if topic is not None:
                keywords = self.state.topics["keywords"].get(str(topic), [])
        view = {
            "record": record.to_json(),
            "probability": probability,
            "pattern_match": (
                pattern_match(record, self.state.rules) if self.state.rules else None
            ),
            "topic_keywords": keywords,
        }
        if batch is not None:
            view["strategy"] = batch.strategy.value
        label_rec = self.state.labels.get(rid)
        view["conflict"] = bool(label_rec.conflict) if label_rec else False
        return view

    def metrics_report(self, round_number: int, beta: float | None = None) -> dict:
        if round_number not in self.state.reports:
            raise KeyError(f"no report for round {round_number}")
        report = dict(self.state.reports[round_number])
        if beta is not None and abs(beta - report["beta"]) > 1e-12:
            from .evaluation import ConfusionMatrix

            for side in ("model", "pattern"):
                cm = ConfusionMatrix.from_json(report[side]["confusion"])
                auc = report[side]["metrics"].get("auc")
                report[side] = {
                    "confusion": cm.to_json(),
                    "metrics": metrics(cm, beta=beta, auc=auc).to_json(),
                }
            report["beta"] = beta
        return report
