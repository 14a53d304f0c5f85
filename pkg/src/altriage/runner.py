"""Execute a RunSpec end to end: corpus, project, rounds, final table."""

from __future__ import annotations

from pathlib import Path
from typing import Callable

from .config import RunSpec
from .loop import Project
from .records import Pool, default_rules
from .store import replay
from .synth import SimulatedOracle, write_corpus


def logical_clock() -> Callable[[], str]:
    """Monotone counter timestamps so replays and reruns are byte-identical."""
    counter = [0]

    def tick() -> str:
        counter[0] += 1
        return f"t{counter[0]:08d}"

    return tick


def execute(spec: RunSpec, root: str | Path, wall_clock: bool = False) -> tuple[dict, Project]:
    """Run the whole scripted experiment under `root`.

    Layout: root/project holds the event log and artifacts, with the
    generated pools and sealed oracle key under root/project/corpus so the
    log's corpus references stay relative and the whole tree is relocatable.
    Returns the final comparison table payload and the live project.
    """
    root = Path(root)
    corpus_dir = root / "project" / "corpus"
    focused, deployment, key_path, _report = write_corpus(spec.corpus, corpus_dir)
    oracle = SimulatedOracle.from_key_file(
        key_path, noise=spec.oracle_noise, seed=spec.oracle_seed
    )
    clock = None if wall_clock else logical_clock()
    project = Project.init(root / "project", spec.loop, clock=clock)
    project.set_rules(default_rules())
    project.set_embedder(spec.embedder)
    project.attach_corpus(focused, Pool.FOCUSED)
    project.attach_corpus(deployment, Pool.DEPLOYMENT)
    table = project.run_scripted(
        oracle,
        rounds=spec.rounds,
        train_config=spec.train,
        seed_plan=spec.seed_plan,
        topics_k=spec.topics.k,
        topics_seed=spec.topics.seed,
        reduce_to=spec.topics.reduce_to,
        seed_validation_share=spec.seed_validation_share,
        final_round_mode=spec.final_round_mode,
    )
    return table, project


def verify_replay(project: Project) -> bool:
    """True when folding the event log reproduces the project state that the
    live run accumulated event by event."""
    import json

    replayed = replay(project.log)
    return json.dumps(project.state.to_json(), sort_keys=True) == json.dumps(
        replayed.to_json(), sort_keys=True
    )
