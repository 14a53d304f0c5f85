import time
from pathlib import Path

import pytest

from altriage.classifier import TrainConfig
from altriage.config import RunSpec, TopicsSpec, load_run_spec
from altriage.embedding import EmbedderSpec
from altriage.loop import LoopConfig
from altriage.records import Label, LabelSource, Pool, Sex, TriageRecord, default_rules
from altriage.runner import execute
from altriage.sampling import QuotaPlan
from altriage.synth import CorpusSpec

ROOT = Path(__file__).resolve().parent.parent

# One line per acceptance criterion, filled in by the acceptance tests and
# echoed after the run so they survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    failed = [
        r.nodeid.rsplit("::", 1)[-1]
        for r in terminalreporter.stats.get("failed", [])
        if "test_acceptance" in r.nodeid
    ]
    if not ACCEPTANCE_LINES and not failed:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    for name in failed:
        terminalreporter.write_line(f"[FAIL] {name}")


def note(
    rid: str,
    clean: str,
    label: Label = Label.UNLABELED,
    pool: Pool = Pool.FOCUSED,
    raw: str | None = None,
) -> TriageRecord:
    source = LabelSource.NONE if label is Label.UNLABELED else LabelSource.SIMULATED
    return TriageRecord(
        id=rid,
        raw_text=raw if raw is not None else clean,
        clean_text=clean,
        age=30,
        sex=Sex.FEMALE,
        pool=pool,
        label=label,
        label_source=source,
    )


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture(scope="session")
def embedder():
    return EmbedderSpec(dim=256, seed=0)


def mini_spec(out_dir: str = "runs/mini") -> RunSpec:
    """Two-round run on a small corpus; exercises every phase in ~2s."""
    return RunSpec(
        corpus=CorpusSpec(
            n_focused=600,
            n_deployment=1200,
            prevalence_focused=0.15,
            prevalence_deployment=0.06,
            seed=6,
        ),
        embedder=EmbedderSpec(dim=256, seed=0),
        train=TrainConfig(
            epochs=6, batch_size=16, checkpoint_every=10, learning_rate=0.8, l2=1e-4, seed=0
        ),
        loop=LoopConfig(),
        seed_plan=QuotaPlan(total=120, target_share=0.6),
        topics=TopicsSpec(k=6, seed=3),
        rounds=2,
        out_dir=out_dir,
    )


@pytest.fixture(scope="session")
def mini_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("mini")
    table, project = execute(mini_spec(), root)
    return table, project, root


@pytest.fixture(scope="session")
def synth_run(tmp_path_factory):
    """The pinned 4-round reference run; wall time recorded for the budget check."""
    spec = load_run_spec(ROOT / "synth4.toml")
    root = tmp_path_factory.mktemp("synth4")
    started = time.monotonic()
    table, project = execute(spec, root)
    elapsed = time.monotonic() - started
    return table, project, root, elapsed
