"""CLI: exit codes, the pure-CLI round workflow, and the scripted runner."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from altriage.cli import main
from altriage.records import preprocess, read_records
from altriage.synth import SimulatedOracle

RUN_TOML = """
[corpus]
n_focused = 600
n_deployment = 1200
prevalence_focused = 0.15
prevalence_deployment = 0.06
seed = 6

[embedder]
dim = 256
seed = 0

[train]
epochs = 6
batch_size = 16
checkpoint_every = 10
learning_rate = 0.8
l2 = 1e-4
seed = 0

[seed_plan]
total = 120
target_share = 0.6

[topics]
k = 6
seed = 3

[run]
rounds = 2
out_dir = "out"
"""


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args, expect: int = 0):
    result = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert result.exit_code == expect, result.output
    return result


def test_synth_generate_and_filter(runner, tmp_path):
    result = invoke(
        runner, "synth", "generate", "--n-focused", 50, "--n-deployment", 50,
        "--seed", 1, "--out", tmp_path / "corpus",
    )
    body = json.loads(result.output)
    assert Path(body["focused"]).exists()
    assert Path(body["oracle_key"]).exists()
    tallies = body["categories"]
    assert sum(tallies["focused"].values()) == 50
    assert sum(tallies["deployment"].values()) == 50

    result = invoke(runner, "filter", body["focused"], "--out", tmp_path / "retained.jsonl")
    assert "retained" in result.output
    assert (tmp_path / "retained.jsonl").exists()


def test_synth_generate_needs_sizes(runner, tmp_path):
    result = invoke(
        runner, "synth", "generate", "--n-focused", 10, "--out", tmp_path / "c", expect=3
    )
    assert "error:" in result.output


def test_missing_project_exits_3(runner, tmp_path):
    result = invoke(runner, "-p", tmp_path / "nope", "round", "status", expect=3)
    assert "no project" in result.output


def test_state_conflicts_exit_2(runner, tmp_path):
    corpus = json.loads(
        invoke(
            runner, "synth", "generate", "--n-focused", 60, "--n-deployment", 60,
            "--seed", 2, "--out", tmp_path / "corpus",
        ).output
    )
    project = tmp_path / "proj"
    invoke(runner, "-p", project, "ingest", corpus["focused"], "--pool", "focused")
    # no seed dataset yet
    result = invoke(
        runner, "-p", project, "round", "start", "--mode", "from_scratch", expect=2
    )
    assert "seed dataset" in result.output
    # advancing with no round is a state conflict too
    result = invoke(runner, "-p", project, "round", "advance", expect=2)
    assert "no round" in result.output


def test_ingest_dry_run_writes_nothing(runner, tmp_path):
    corpus = json.loads(
        invoke(
            runner, "synth", "generate", "--n-focused", 40, "--n-deployment", 40,
            "--seed", 3, "--out", tmp_path / "corpus",
        ).output
    )
    project = tmp_path / "proj"
    result = invoke(
        runner, "-p", project, "ingest", corpus["focused"], "--pool", "focused", "--dry-run"
    )
    assert "would" in result.output
    assert not (project / "events.jsonl").exists()


def test_full_round_driven_by_subcommands(runner, tmp_path):
    """ingest -> topics -> seed -> labels submit -> dataset seed -> round."""
    corpus = json.loads(
        invoke(
            runner, "synth", "generate", "--n-focused", 600, "--n-deployment", 1200,
            "--seed", 6, "--out", tmp_path / "corpus",
        ).output
    )
    oracle = SimulatedOracle.from_key_file(corpus["oracle_key"])
    project = tmp_path / "proj"
    p = ("-p", project)

    invoke(runner, *p, "ingest", corpus["focused"], "--pool", "focused")
    invoke(runner, *p, "ingest", corpus["deployment"], "--pool", "deployment")
    invoke(runner, *p, "embed", "--dim", 256, "--seed", 0)
    built = json.loads(
        invoke(
            runner, *p, "topics", "build", "--k", 6, "--seed", 3,
            "--oracle-key", corpus["oracle_key"],
        ).output
    )
    assert built["k"] == 6
    assert built["flagged"] and len(built["flagged"]) < 6

    # a human can override the probe with explicit flags, then restore
    reflagged = json.loads(
        invoke(runner, *p, "topics", "flag", "--flag-topic", 0, "--flag-topic", 2).output
    )
    assert reflagged["flagged"] == [0, 2]
    restored = json.loads(
        invoke(runner, *p, "topics", "flag", "--oracle-key", corpus["oracle_key"]).output
    )
    assert restored["flagged"] == built["flagged"]

    seeded = json.loads(
        invoke(runner, *p, "sample", "seed", "--total", 120, "--target-share", 0.6).output
    )
    assert seeded["count"] == 120

    # label the whole seed batch from the sealed key
    log_lines = [
        json.loads(line) for line in (project / "events.jsonl").read_text().splitlines()
    ]
    batch = next(e for e in log_lines if e["kind"] == "batch_created")["payload"]["batch"]
    labels_file = tmp_path / "seed_labels.jsonl"
    labels_file.write_text(
        "".join(
            json.dumps({"record_id": rid, "label": oracle.label(rid).value}) + "\n"
            for rid in batch["record_ids"]
        )
    )
    ack = json.loads(
        invoke(
            runner, *p, "labels", "submit", "--file", labels_file, "--oracle-id", "cli-oracle"
        ).output
    )
    assert ack["accepted"] == 120 and ack["conflicts"] == []

    ds = json.loads(invoke(runner, *p, "dataset", "seed").output)
    assert ds["version"] == 1

    invoke(
        runner, *p, "round", "start", "--mode", "from_scratch",
        "--epochs", 6, "--checkpoint-every", 10, "--learning-rate", 0.8,
    )
    for _ in range(4):
        invoke(runner, *p, "round", "advance")
    status = json.loads(invoke(runner, *p, "round", "status").output)
    assert status["phase"] == "labeling"
    assert status["batches"]

    # queue previews work mid-round
    result = invoke(runner, *p, "sample", "positives", "--limit", 3)
    assert "candidates" in result.output

    # batch-scoped submission rejects ids outside the named batch
    stray = tmp_path / "stray.jsonl"
    stray.write_text(json.dumps({"record_id": batch["record_ids"][0], "label": "negative"}) + "\n")
    result = invoke(
        runner, *p, "labels", "submit", "--file", stray, "--oracle-id", "x",
        "--batch", "positive_prediction", expect=2,
    )
    assert "not in the positive_prediction batch" in result.output

    invoke(runner, *p, "round", "advance", "--oracle-key", corpus["oracle_key"])
    status = json.loads(invoke(runner, *p, "round", "status").output)
    assert status["phase"] == "complete"

    report = json.loads(invoke(runner, *p, "eval", "report", "--round", 1).output)
    assert report["round"] == 1
    assert {"precision", "recall", "f1", "fbeta"} <= report["model"]["metrics"].keys()
    assert (project / "reports" / "state-snapshot.json").exists()

    latest = json.loads(invoke(runner, *p, "dataset", "show").output)
    assert latest["version"] == 2


def test_run_command_end_to_end(runner, tmp_path):
    config = tmp_path / "run.toml"
    config.write_text(RUN_TOML)
    out = tmp_path / "out"

    plan = json.loads(invoke(runner, "run", "--config", config, "--dry-run").output)
    assert plan["rounds"] == 2
    assert not out.exists()

    result = invoke(runner, "run", "--config", config, "--out", out)
    assert "Pattern Matching" in result.output
    assert (out / "project" / "reports" / "round-2.json").exists()

    # refuses to clobber, replaces with --force
    invoke(runner, "run", "--config", config, "--out", out, expect=3)
    invoke(runner, "run", "--config", config, "--out", out, "--force")


def test_augment_flip_via_cli(runner, tmp_path):
    corpus = json.loads(
        invoke(
            runner, "synth", "generate", "--n-focused", 300, "--n-deployment", 100,
            "--seed", 6, "--out", tmp_path / "corpus",
        ).output
    )
    oracle = SimulatedOracle.from_key_file(corpus["oracle_key"])
    project = tmp_path / "proj"
    invoke(runner, "-p", project, "ingest", corpus["focused"], "--pool", "focused")

    texts = {r.id: preprocess(r).clean_text for r in read_records(corpus["focused"])}
    rules_terms = ("vaccine", "vaccination", "vax", "vacc", "immunisation", "immunization")
    source = next(
        rid
        for rid in sorted(texts)
        if oracle.flip_span(rid)
        and texts[rid].count(oracle.flip_span(rid)) == 1
        and any(t in oracle.flip_span(rid) for t in rules_terms)
    )
    span = oracle.flip_span(source)

    # flips need a labeled positive source, exactly as a human would have one
    labels_file = tmp_path / "one.jsonl"
    labels_file.write_text(json.dumps({"record_id": source, "label": "positive"}) + "\n")
    invoke(
        runner, "-p", project, "labels", "submit",
        "--file", labels_file, "--oracle-id", "annotator",
    )

    preview = json.loads(
        invoke(
            runner, "-p", project, "augment", "flip-neg",
            "--source", source, "--span", span, "--dry-run",
        ).output
    )
    assert span not in preview["would_create"]["clean_text"]

    created = json.loads(
        invoke(
            runner, "-p", project, "augment", "flip-neg", "--source", source, "--span", span
        ).output
    )
    assert created["pair"]["direction"] == "flip_to_negative"

    result = invoke(
        runner, "-p", project, "augment", "flip-neg",
        "--source", source, "--span", "vaccine teleport", expect=2,
    )
    assert "error:" in result.output
