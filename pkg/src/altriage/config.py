"""TOML-backed run configuration.

One file describes a complete scripted experiment: corpus generation,
embedder, training hyperparameters, loop policy, seed sampling plan, topic
model settings and round count. Unknown keys raise rather than pass
silently; a config typo should never change an experiment quietly.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .classifier import TrainConfig
from .embedding import EmbedderKind, EmbedderSpec
from .loop import LoopConfig
from .sampling import QuotaPlan
from .synth import CorpusSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TopicsSpec:
    k: int = 12
    seed: int = 0
    reduce_to: int | None = None
    flag_threshold: float = 0.5
    probe_sample: int = 5


@dataclass(frozen=True)
class RunSpec:
    corpus: CorpusSpec
    embedder: EmbedderSpec
    train: TrainConfig
    loop: LoopConfig
    seed_plan: QuotaPlan
    topics: TopicsSpec
    rounds: int = 4
    out_dir: str = "runs/out"
    oracle_noise: float = 0.0
    oracle_seed: int = 0
    final_round_mode: str = "both"
    seed_validation_share: float = 0.2


def _build(cls, section: dict, name: str, tuple_fields: tuple[str, ...] = ()):
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"[{name}] has unknown keys: {sorted(unknown)}")
    kwargs = dict(section)
    for key in tuple_fields:
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def load_run_spec(path: str | Path) -> RunSpec:
    path = Path(path)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    known_sections = {"corpus", "embedder", "train", "loop", "seed_plan", "topics", "run"}
    unknown = set(doc) - known_sections
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if "corpus" not in doc:
        raise ConfigError("missing required [corpus] section")

    corpus = _build(CorpusSpec, doc["corpus"], "corpus")

    emb = dict(doc.get("embedder", {}))
    if "kind" in emb:
        emb["kind"] = EmbedderKind(emb["kind"])
    embedder = _build(EmbedderSpec, emb, "embedder", tuple_fields=("ngram_range",))

    train = _build(TrainConfig, doc.get("train", {}), "train")
    loop = _build(
        LoopConfig,
        doc.get("loop", {}),
        "loop",
        tuple_fields=("validation_rounds", "counterfactual_rounds"),
    )
    seed_plan = _build(QuotaPlan, doc.get("seed_plan", {"total": 400}), "seed_plan")
    topics = _build(TopicsSpec, doc.get("topics", {}), "topics")

    run = dict(doc.get("run", {}))
    run_fields = {
        "rounds",
        "out_dir",
        "oracle_noise",
        "oracle_seed",
        "final_round_mode",
        "seed_validation_share",
    }
    unknown = set(run) - run_fields
    if unknown:
        raise ConfigError(f"[run] has unknown keys: {sorted(unknown)}")
    return RunSpec(
        corpus=corpus,
        embedder=embedder,
        train=train,
        loop=loop,
        seed_plan=seed_plan,
        topics=topics,
        **run,
    )
