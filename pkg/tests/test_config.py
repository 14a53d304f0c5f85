from pathlib import Path

import pytest

from altriage.config import ConfigError, TopicsSpec, load_run_spec
from altriage.embedding import EmbedderKind

ROOT = Path(__file__).resolve().parent.parent


def write(tmp_path, body: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(body)
    return path


MINIMAL = """
[corpus]
n_focused = 100
n_deployment = 100
"""


def test_pinned_benchmark_config_loads():
    spec = load_run_spec(ROOT / "synth4.toml")
    assert spec.rounds == 4
    assert spec.corpus.n_focused == 2000
    assert spec.corpus.seed == 6
    assert spec.embedder.kind is EmbedderKind.HASHED_NGRAM
    assert spec.embedder.dim == 768
    assert spec.train.epochs == 16
    assert spec.loop.beta == pytest.approx(1.3)
    assert spec.loop.uncertain_threshold == pytest.approx(0.90)
    assert spec.seed_plan.total == 400
    assert spec.topics.reduce_to == 8
    assert spec.final_round_mode == "both"


def test_minimal_config_uses_defaults(tmp_path):
    spec = load_run_spec(write(tmp_path, MINIMAL))
    assert spec.rounds == 4
    assert spec.embedder.dim == 512
    assert spec.loop.ratio_cap == 1.5
    assert spec.seed_plan.total == 400
    assert spec.topics == TopicsSpec()
    assert spec.oracle_noise == 0.0


def test_corpus_section_required(tmp_path):
    with pytest.raises(ConfigError, match="corpus"):
        load_run_spec(write(tmp_path, "[train]\nepochs = 2\n"))


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown sections"):
        load_run_spec(write(tmp_path, MINIMAL + "\n[postprocessing]\nx = 1\n"))


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="epochz"):
        load_run_spec(write(tmp_path, MINIMAL + "\n[train]\nepochz = 2\n"))


def test_unknown_run_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="run"):
        load_run_spec(write(tmp_path, MINIMAL + "\n[run]\nroundz = 2\n"))


def test_bad_value_wrapped_as_config_error(tmp_path):
    # CorpusSpec validates prevalence bounds; the loader keeps the section name
    with pytest.raises(ConfigError, match=r"\[corpus\]"):
        load_run_spec(
            write(
                tmp_path,
                "[corpus]\nn_focused = 10\nn_deployment = 10\nprevalence_focused = 1.5\n",
            )
        )


def test_tuple_fields_coerced(tmp_path):
    spec = load_run_spec(
        write(tmp_path, MINIMAL + "\n[loop]\nvalidation_rounds = [2, 3, 4]\n")
    )
    assert spec.loop.validation_rounds == (2, 3, 4)
    assert isinstance(spec.loop.validation_rounds, tuple)
