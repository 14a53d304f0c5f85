"""Command-line driver.

Exit codes: 0 success, 2 when a domain invariant is violated (wrong phase,
pending adjudication, leakage, bad spans, unknown records), 3 for filesystem,
lock, or config problems. Mutating commands take a file lock on the project
directory so two shells cannot interleave writes to the same event log.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click
from filelock import FileLock, Timeout

from .augment import (
    AmbiguousSpan,
    DirectionConflict,
    EmptyResidual,
    PositionOutOfBounds,
    SpanLacksSignal,
    SpanNotFound,
)
from .classifier import Checkpoint, TrainConfig
from .config import ConfigError, load_run_spec
from .datasets import RatioUnreachable, UnlabeledAddition
from .embedding import EmbedderKind, EmbedderSpec
from .evaluation import LeakageDetected, audit_month
from .loop import (
    NoActiveRound,
    NoDataset,
    PreviousIncomplete,
    Project,
    QueueIncomplete,
    UnknownRecord,
)
from .records import (
    Pool,
    default_rules,
    keyword_filter,
    read_records,
    write_records,
)
from .sampling import QuotaPlan, Strategy
from .store import ConflictPending, CorruptLog
from .synth import CorpusSpec, SimulatedOracle, write_corpus

INVARIANT_ERRORS = (
    NoDataset,
    PreviousIncomplete,
    NoActiveRound,
    QueueIncomplete,
    ConflictPending,
    LeakageDetected,
    RatioUnreachable,
    UnlabeledAddition,
    CorruptLog,
    UnknownRecord,
    SpanNotFound,
    AmbiguousSpan,
    SpanLacksSignal,
    PositionOutOfBounds,
    DirectionConflict,
    EmptyResidual,
    ValueError,
    KeyError,
    RuntimeError,
)
IO_CONFIG_ERRORS = (
    ConfigError,
    FileNotFoundError,
    FileExistsError,
    OSError,
    Timeout,
)


def _fail(exc: Exception) -> None:
    code = 3 if isinstance(exc, IO_CONFIG_ERRORS) else 2
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _locked(project_dir: Path) -> FileLock:
    project_dir.mkdir(parents=True, exist_ok=True)
    return FileLock(project_dir / ".lock", timeout=10)


def _open(project_dir: Path) -> Project:
    if not (project_dir / "events.jsonl").exists():
        raise FileNotFoundError(f"no project at {project_dir}; run `al ingest` first")
    return Project.open(project_dir)


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


@click.group()
@click.option(
    "--project",
    "-p",
    "project_dir",
    type=click.Path(path_type=Path),
    default=Path("project"),
    show_default=True,
    help="Project directory holding the event log and artifacts.",
)
@click.pass_context
def main(ctx: click.Context, project_dir: Path) -> None:
    ctx.obj = project_dir


# ---------- corpus and setup ----------


@main.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--pool", type=click.Choice(["focused", "deployment"]), required=True)
@click.option("--dry-run", is_flag=True, help="Report counts without writing any event.")
@click.pass_obj
def ingest(project_dir: Path, path: Path, pool: str, dry_run: bool) -> None:
    """Attach a records file to a pool, creating the project if needed."""
    try:
        with _locked(project_dir):
            if not (project_dir / "events.jsonl").exists():
                if dry_run:
                    click.echo(f"would create project at {project_dir}")
                    project = None
                else:
                    project = Project.init(project_dir)
                    project.set_rules(default_rules())
                    project.set_embedder(EmbedderSpec())
            else:
                project = _open(project_dir)
            if dry_run:
                records = read_records(path)
                if pool == "focused":
                    rules = project.state.rules if project else default_rules()
                    retained, rejected = keyword_filter(records, rules)
                    click.echo(
                        f"would ingest {len(records)} records: "
                        f"{len(retained)} retained, {len(rejected)} rejected"
                    )
                else:
                    click.echo(f"would ingest {len(records)} records unfiltered")
                return
            summary = project.attach_corpus(path, Pool(pool))
            _echo_json(summary)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command("filter")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Write retained records here.")
@click.option("--rejected-out", type=click.Path(path_type=Path))
def filter_cmd(path: Path, out: Path | None, rejected_out: Path | None) -> None:
    """Apply the keyword filter to a records file."""
    try:
        from .records import preprocess

        rules = default_rules()
        records = [preprocess(r) for r in read_records(path)]
        retained, rejected = keyword_filter(records, rules)
        if out:
            write_records(out, retained)
        if rejected_out:
            write_records(rejected_out, rejected)
        click.echo(f"retained {len(retained)} / {len(records)} ({len(rejected)} rejected)")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.option("--kind", type=click.Choice([k.value for k in EmbedderKind]), default="hashed_ngram")
@click.option("--dim", type=int, default=768, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--endpoint", type=str, default=None, help="External embedding service URL.")
@click.pass_obj
def embed(project_dir: Path, kind: str, dim: int, seed: int, endpoint: str | None) -> None:
    """Configure the project's embedder."""
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            spec = EmbedderSpec(
                kind=EmbedderKind(kind), dim=dim, seed=seed, endpoint=endpoint
            )
            project.set_embedder(spec)
            _echo_json(spec.to_json())
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- topics ----------


@main.group()
def topics() -> None:
    """Topic model over the focused pool."""


def _topic_probe(project: Project, oracle_key: Path | None, flag_topics: tuple[int, ...]):
    """Returns (probe, explicit_flags) for the flagging step.

    With neither option the probe falls back to keyword pattern matching,
    which flags everything on a keyword-filtered focused pool; live use
    should pass --flag-topic after inspecting the keywords."""
    if oracle_key is not None and flag_topics:
        raise ValueError("--oracle-key and --flag-topic are mutually exclusive")
    if flag_topics:
        return None, {t: True for t in flag_topics}
    if oracle_key is not None:
        from .records import Label

        oracle = SimulatedOracle.from_key_file(oracle_key)
        return (lambda rid: oracle.label(rid) is Label.POSITIVE), None
    return None, None


_FLAG_OPTIONS = (
    click.option(
        "--oracle-key",
        type=click.Path(exists=True, path_type=Path),
        default=None,
        help="Probe sampled topic members against a sealed corpus key.",
    ),
    click.option(
        "--flag-topic",
        "flag_topics",
        type=int,
        multiple=True,
        help="Flag these topic indices verbatim (repeatable); skips probing.",
    ),
)


def _with_flag_options(fn):
    for opt in reversed(_FLAG_OPTIONS):
        fn = opt(fn)
    return fn


@topics.command("build")
@click.option("--k", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--reduce-to", type=int, default=None)
@click.option("--flag-threshold", type=float, default=0.5, show_default=True)
@_with_flag_options
@click.pass_obj
def topics_build(
    project_dir: Path,
    k: int,
    seed: int,
    reduce_to: int | None,
    flag_threshold: float,
    oracle_key: Path | None,
    flag_topics: tuple[int, ...],
) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            probe, explicit = _topic_probe(project, oracle_key, flag_topics)
            model = project.build_topics(
                k,
                seed=seed,
                reduce_to=reduce_to,
                flag_threshold=flag_threshold,
                probe=probe,
                explicit_flags=explicit,
            )
            _echo_json(
                {
                    "k": model.k,
                    "member_counts": model.member_counts(),
                    "keywords": {
                        t: [g for g, _ in model.keywords.get(t, ())] for t in range(model.k)
                    },
                    "flagged": model.flagged_topics(),
                }
            )
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@topics.command("reduce")
@click.option("--to", "target_k", type=int, required=True)
@click.pass_obj
def topics_reduce(project_dir: Path, target_k: int) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            model = project.reduce_topic_model(target_k)
            _echo_json({"k": model.k, "member_counts": model.member_counts()})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@topics.command("flag")
@click.option("--threshold", type=float, default=0.5, show_default=True)
@_with_flag_options
@click.pass_obj
def topics_flag(
    project_dir: Path,
    threshold: float,
    oracle_key: Path | None,
    flag_topics: tuple[int, ...],
) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            probe, explicit = _topic_probe(project, oracle_key, flag_topics)
            model = project.reflag_topics(threshold, probe=probe, explicit_flags=explicit)
            _echo_json({"k": model.k, "flagged": model.flagged_topics()})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- sampling ----------


@main.group()
def sample() -> None:
    """Query-batch construction and inspection."""


@sample.command("seed")
@click.option("--total", type=int, required=True)
@click.option("--target-share", type=float, default=0.6, show_default=True)
@click.option("--floor", "per_nontarget_floor", type=int, default=3, show_default=True)
@click.option("--dry-run", is_flag=True)
@click.pass_obj
def sample_seed(
    project_dir: Path, total: int, target_share: float, per_nontarget_floor: int, dry_run: bool
) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            plan = QuotaPlan(
                total=total, target_share=target_share, per_nontarget_floor=per_nontarget_floor
            )
            if dry_run:
                from .sampling import diversity_seed

                batch = diversity_seed(
                    project._topic_model(), plan, round=0,
                    exclude=frozenset(project.state.labeled_ids()),
                )
                click.echo(f"would queue {len(batch.record_ids)} records")
                return
            batch = project.create_seed_batch(plan)
            _echo_json({"strategy": batch.strategy.value, "count": len(batch.record_ids)})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


def _latest_predictions(project: Project) -> dict[str, float]:
    round_state = project.state.current_round()
    if round_state is None or not round_state.selected_checkpoint_ids:
        raise NoActiveRound("no round with selected checkpoints")
    best = round_state.selected_checkpoint_ids[0]
    merged: dict[str, float] = {}
    for pool in (Pool.FOCUSED, Pool.DEPLOYMENT):
        key = f"{round_state.round}/{best}/{pool.value}"
        if key in project.state.predictions:
            merged.update(project._predictions(round_state.round, best, pool))
    if not merged:
        raise NoActiveRound("no pool predictions recorded for the current round")
    return merged


@sample.command("uncertain")
@click.option("--threshold", type=float, default=0.90, show_default=True)
@click.option("--limit", type=int, default=20, show_default=True)
@click.pass_obj
def sample_uncertain(project_dir: Path, threshold: float, limit: int) -> None:
    """Preview predicted negatives below the confidence threshold."""
    try:
        project = _open(project_dir)
        preds = _latest_predictions(project)
        from .sampling import uncertain_negatives

        batch = uncertain_negatives(preds, threshold=threshold)
        for rid in batch.record_ids[:limit]:
            click.echo(f"{rid}\t{preds[rid]:.4f}")
        click.echo(f"({len(batch.record_ids)} candidates)")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@sample.command("positives")
@click.option("--limit", type=int, default=20, show_default=True)
@click.pass_obj
def sample_positives(project_dir: Path, limit: int) -> None:
    """Preview predicted positives, most confident first."""
    try:
        project = _open(project_dir)
        preds = _latest_predictions(project)
        from .sampling import positive_predictions

        batch = positive_predictions(preds)
        for rid in batch.record_ids[:limit]:
            click.echo(f"{rid}\t{preds[rid]:.4f}")
        click.echo(f"({len(batch.record_ids)} candidates)")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@sample.command("fn")
@click.option("--threshold", type=float, default=0.90, show_default=True)
@click.option("--limit", type=int, default=20, show_default=True)
@click.pass_obj
def sample_fn(project_dir: Path, threshold: float, limit: int) -> None:
    """Preview keyword-bearing records the model confidently rejects."""
    try:
        project = _open(project_dir)
        preds = _latest_predictions(project)
        from .sampling import mine_false_negatives

        records = {rid: project.store.get(rid) for rid in preds}
        batch = mine_false_negatives(
            preds, records, project.state.rules, threshold=threshold
        )
        for rid in batch.record_ids[:limit]:
            click.echo(f"{rid}\t{preds[rid]:.4f}")
        click.echo(f"({len(batch.record_ids)} candidates)")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- rounds and training ----------


def _train_config(epochs, batch_size, checkpoint_every, learning_rate, l2, seed) -> TrainConfig:
    return TrainConfig(
        epochs=epochs,
        batch_size=batch_size,
        checkpoint_every=checkpoint_every,
        learning_rate=learning_rate,
        l2=l2,
        seed=seed,
    )


_TRAIN_OPTIONS = (
    click.option("--epochs", type=int, default=9, show_default=True),
    click.option("--batch-size", type=int, default=16, show_default=True),
    click.option("--checkpoint-every", type=int, default=10, show_default=True),
    click.option("--learning-rate", type=float, default=0.1, show_default=True),
    click.option("--l2", type=float, default=1e-4, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
)


def _with_train_options(fn):
    for opt in reversed(_TRAIN_OPTIONS):
        fn = opt(fn)
    return fn


@main.group("round")
def round_group() -> None:
    """Round lifecycle."""


@round_group.command("start")
@click.option("--mode", type=click.Choice(["from_scratch", "resume_best", "both"]), required=True)
@_with_train_options
@click.option("--dry-run", is_flag=True)
@click.pass_obj
def round_start(project_dir: Path, mode: str, dry_run: bool, **train_kwargs) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            config = _train_config(**train_kwargs)
            if dry_run:
                current = project.state.current_round()
                nxt = (current.round if current else 0) + 1
                click.echo(f"would start round {nxt} mode={mode}")
                return
            state = project.start_round(mode, config)
            _echo_json({"round": state.round, "phase": state.phase, "mode": state.mode})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@round_group.command("advance")
@click.option(
    "--oracle-key",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="Label the queue from a sealed corpus key instead of waiting for humans.",
)
@click.pass_obj
def round_advance(project_dir: Path, oracle_key: Path | None) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            oracle = SimulatedOracle.from_key_file(oracle_key) if oracle_key else None
            phase = project.advance(oracle)
            state = project.state.current_round()
            _echo_json({"round": state.round, "completed_phase": phase, "phase": state.phase})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@round_group.command("status")
@click.pass_obj
def round_status(project_dir: Path) -> None:
    try:
        project = _open(project_dir)
        state = project.state.current_round()
        if state is None:
            click.echo("no rounds started")
            return
        _echo_json(
            {
                "round": state.round,
                "phase": state.phase,
                "mode": state.mode,
                "dataset_version": state.dataset_version,
                "selected_checkpoints": list(state.selected_checkpoint_ids),
                "batches": [
                    {"strategy": b.strategy.value, "size": len(b.record_ids)}
                    for b in state.batches
                ],
            }
        )
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.option("--mode", type=click.Choice(["from_scratch", "resume_best", "both"]), required=True)
@_with_train_options
@click.pass_obj
def train(project_dir: Path, mode: str, **train_kwargs) -> None:
    """Start a round and run it through checkpoint selection."""
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            state = project.start_round(mode, _train_config(**train_kwargs))
            project.advance()  # training
            project.advance()  # checkpoint selection
            _echo_json(
                {
                    "round": state.round,
                    "phase": state.phase,
                    "selected_checkpoints": list(state.selected_checkpoint_ids),
                }
            )
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.option("--pool", type=click.Choice(["focused", "deployment"]), default=None)
@click.option("--limit", type=int, default=10, show_default=True)
@click.pass_obj
def predict(project_dir: Path, pool: str | None, limit: int) -> None:
    """Show the current round's pool predictions, highest scores first.

    Runs the prediction phase if the round is waiting on it."""
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            state = project.state.current_round()
            if state is not None and state.phase == "pool_predict":
                project.advance()
            preds = _latest_predictions(project)
            if pool:
                preds = {
                    rid: p
                    for rid, p in preds.items()
                    if project.store.get(rid).pool is Pool(pool)
                }
            top = sorted(preds, key=lambda rid: (-preds[rid], rid))[:limit]
            for rid in top:
                click.echo(f"{rid}\t{preds[rid]:.4f}")
            click.echo(f"({len(preds)} scored)")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- augmentation ----------


@main.group()
def augment() -> None:
    """Label-flip counterfactual authoring."""


@augment.command("flip-neg")
@click.option("--source", "source_id", required=True)
@click.option("--span", required=True)
@click.option("--dry-run", is_flag=True)
@click.pass_obj
def augment_flip_neg(project_dir: Path, source_id: str, span: str, dry_run: bool) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            if dry_run:
                from .augment import flip_to_negative

                synthetic, pair = flip_to_negative(project.store.get(source_id), span)
                _echo_json({"would_create": synthetic.to_json(), "pair": pair.to_json()})
                return
            synthetic, pair = project.create_counterfactual(source_id, "flip_to_negative", span)
            _echo_json({"record": synthetic.to_json(), "pair": pair})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@augment.command("flip-pos")
@click.option("--source", "source_id", required=True)
@click.option("--span", required=True)
@click.option("--position", type=int, required=True)
@click.option("--dry-run", is_flag=True)
@click.pass_obj
def augment_flip_pos(
    project_dir: Path, source_id: str, span: str, position: int, dry_run: bool
) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            if dry_run:
                from .augment import flip_to_positive

                synthetic, pair = flip_to_positive(
                    project.store.get(source_id), span, position
                )
                _echo_json({"would_create": synthetic.to_json(), "pair": pair.to_json()})
                return
            synthetic, pair = project.create_counterfactual(
                source_id, "flip_to_positive", span, position
            )
            _echo_json({"record": synthetic.to_json(), "pair": pair})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- labels and datasets ----------


@main.group()
def labels() -> None:
    """Label submission."""


@labels.command("submit")
@click.option(
    "--file",
    "labels_path",
    type=click.Path(exists=True, path_type=Path),
    required=True,
    help='Line-delimited JSON, one {"record_id": ..., "label": ...} per line.',
)
@click.option("--oracle-id", required=True)
@click.option(
    "--batch",
    "batch_strategy",
    type=click.Choice([s.value for s in Strategy]),
    default=None,
    help="Require every submitted id to sit in this strategy's current-round batch.",
)
@click.pass_obj
def labels_submit(
    project_dir: Path, labels_path: Path, oracle_id: str, batch_strategy: str | None
) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            submissions: dict[str, str] = {}
            with open(labels_path) as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    submissions[obj["record_id"]] = obj["label"]
            if batch_strategy is not None:
                current = project.state.current_round()
                if current is None:
                    raise NoActiveRound("no round to match the batch against")
                allowed = {
                    rid
                    for b in current.batches
                    if b.strategy is Strategy(batch_strategy)
                    for rid in b.record_ids
                }
                stray = sorted(set(submissions) - allowed)
                if stray:
                    raise ValueError(
                        f"{len(stray)} ids not in the {batch_strategy} batch, e.g. {stray[:3]}"
                    )
            ack = project.submit_labels(submissions, oracle_id=oracle_id)
            _echo_json(ack)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@labels.command("adjudicate")
@click.option("--record", "record_id", required=True)
@click.option("--label", required=True)
@click.option("--oracle-id", required=True)
@click.pass_obj
def labels_adjudicate(project_dir: Path, record_id: str, label: str, oracle_id: str) -> None:
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            project.adjudicate(record_id, label, oracle_id)
            _echo_json({"record_id": record_id, "label": label})
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.group()
def dataset() -> None:
    """Labeled dataset versions."""


@dataset.command("seed")
@click.option("--validation-share", type=float, default=0.2, show_default=True)
@click.pass_obj
def dataset_seed(project_dir: Path, validation_share: float) -> None:
    """Build dataset v1 from the labeled seed batch."""
    try:
        with _locked(project_dir):
            project = _open(project_dir)
            ds = project.build_seed_dataset(validation_share=validation_share)
            _echo_json(
                {
                    "version": ds.version,
                    "train": ds.train_counts.to_json(),
                    "validation": ds.validation_counts.to_json(),
                }
            )
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@dataset.command("show")
@click.option("--version", type=int, default=None, help="Defaults to the latest version.")
@click.pass_obj
def dataset_show(project_dir: Path, version: int | None) -> None:
    try:
        project = _open(project_dir)
        ds = (
            project.state.datasets[version]
            if version is not None
            else project.state.latest_dataset()
        )
        if ds is None:
            raise NoDataset("no dataset versions yet")
        _echo_json(ds.to_json())
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- evaluation ----------


@main.group("eval")
def eval_group() -> None:
    """Evaluation reports and deployment audits."""


@eval_group.command("report")
@click.option("--round", "round_number", type=int, required=True)
@click.option("--beta", type=float, default=None)
@click.pass_obj
def eval_report(project_dir: Path, round_number: int, beta: float | None) -> None:
    try:
        project = _open(project_dir)
        _echo_json(project.metrics_report(round_number, beta=beta))
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@eval_group.command("audit")
@click.option("--checkpoint", "checkpoint_id", required=True)
@click.option("--records", "records_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.pass_obj
def eval_audit(project_dir: Path, checkpoint_id: str, records_path: Path) -> None:
    """Audit a labeled records slice against a stored checkpoint."""
    try:
        project = _open(project_dir)
        meta = project.state.checkpoints.get(checkpoint_id)
        if meta is None:
            raise UnknownRecord(f"checkpoint {checkpoint_id}")
        checkpoint = Checkpoint.from_json(
            json.loads((project.root / meta["path"]).read_text())
        )
        from .records import preprocess

        records = [preprocess(r) for r in read_records(records_path)]
        report = audit_month(
            checkpoint, records, project.state.rules, project.state.embedder
        )
        _echo_json(report.to_json())
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- synthetic corpus ----------


@main.group()
def synth() -> None:
    """Synthetic corpus generation."""


@synth.command("generate")
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--n-focused", type=int, default=None)
@click.option("--n-deployment", type=int, default=None)
@click.option("--seed", type=int, default=None)
def synth_generate(
    config_path: Path | None,
    out: Path,
    n_focused: int | None,
    n_deployment: int | None,
    seed: int | None,
) -> None:
    """Write focused/deployment pools plus the sealed oracle key."""
    try:
        if config_path:
            spec = load_run_spec(config_path).corpus
            overrides = {}
            if n_focused is not None:
                overrides["n_focused"] = n_focused
            if n_deployment is not None:
                overrides["n_deployment"] = n_deployment
            if seed is not None:
                overrides["seed"] = seed
            if overrides:
                from dataclasses import replace

                spec = replace(spec, **overrides)
        else:
            if n_focused is None or n_deployment is None:
                raise ConfigError("either --config or both --n-focused and --n-deployment")
            spec = CorpusSpec(
                n_focused=n_focused, n_deployment=n_deployment, seed=seed or 0
            )
        focused, deployment, key, report = write_corpus(spec, out)
        _echo_json(
            {
                "focused": str(focused),
                "deployment": str(deployment),
                "oracle_key": str(key),
                "categories": report.to_json(),
            }
        )
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


# ---------- scripted run and service ----------


@main.command()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, path_type=Path),
    required=True,
)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Override run.out_dir.")
@click.option("--force", is_flag=True, help="Delete the output directory first.")
@click.option("--dry-run", is_flag=True, help="Validate the config and show the plan.")
def run(config_path: Path, out: Path | None, force: bool, dry_run: bool) -> None:
    """Run a full scripted experiment from a TOML config."""
    try:
        spec = load_run_spec(config_path)
        out_dir = out or Path(spec.out_dir)
        if dry_run:
            _echo_json(
                {
                    "out_dir": str(out_dir),
                    "rounds": spec.rounds,
                    "corpus": spec.corpus.to_json(),
                    "embedder": spec.embedder.to_json(),
                    "train": spec.train.to_json(),
                }
            )
            return
        if out_dir.exists():
            if not force:
                raise FileExistsError(f"{out_dir} exists; pass --force to replace it")
            shutil.rmtree(out_dir)
        from .runner import execute, verify_replay

        table, project = execute(spec, out_dir)
        click.echo(table["text"])
        if not verify_replay(project):
            raise CorruptLog("replayed state differs from live state")
        checks = table["checks"]
        _echo_json({"checks": checks})
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise RuntimeError(f"trajectory check failed: {failed[0]}")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8411, show_default=True)
@click.option("--token", default=None, help="Static bearer token; unset disables auth.")
@click.pass_obj
def serve(project_dir: Path, host: str, port: int, token: str | None) -> None:
    """Serve the project over HTTP."""
    try:
        project = _open(project_dir)
        from .service import serve as _serve

        _serve(project, host=host, port=port, token=token)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


if __name__ == "__main__":
    main()
