"""Stage a project and serve it for the browser-client test suite.

Round 1 runs to completion with the simulated oracle (so per-round metrics
and the final table exist), then round 2 is advanced to the labeling phase
and left open, giving the scripted session a live queue. One extra record
with a known counterfactual span is spliced into the focused corpus so the
editor test has a deterministic target.

Prints one "READY {json}" line once staging is done, then serves until
killed.
"""

import argparse
import json
import sys
from pathlib import Path

from altriage.classifier import TrainConfig
from altriage.embedding import EmbedderSpec
from altriage.loop import LoopConfig, Project
from altriage.records import Label, Pool, default_rules
from altriage.sampling import QuotaPlan
from altriage.service import serve
from altriage.synth import CorpusSpec, SimulatedOracle, write_corpus

ABDO_ID = "abdo-0001"
ABDO_TEXT = (
    "abdominal pain for 1/52 - onset 30 minutes post flu vaccine. "
    "1 x vomit and 2 x loose stools"
)
ABDO_SPAN = "post flu vaccine"

CORPUS = CorpusSpec(
    n_focused=600,
    n_deployment=1200,
    prevalence_focused=0.15,
    prevalence_deployment=0.06,
    seed=6,
)
TRAIN = TrainConfig(epochs=6, batch_size=16, checkpoint_every=10, learning_rate=0.8, seed=0)


def splice_known_record(focused: Path, key_path: Path) -> None:
    record = {
        "id": ABDO_ID,
        "raw_text": ABDO_TEXT,
        "clean_text": "",
        "age": 30,
        "sex": "female",
        "site": None,
        "timestamp": None,
        "pool": "focused",
        "label": "unlabeled",
        "label_source": "none",
        "counterfactual_of": None,
    }
    with open(focused, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record) + "\n")
    key = json.loads(key_path.read_text())
    key["labels"][ABDO_ID] = "positive"
    key["flip_spans"][ABDO_ID] = ABDO_SPAN
    key_path.write_text(json.dumps(key) + "\n")


def stage(root: Path) -> tuple[Project, dict]:
    focused, deployment, key_path, _ = write_corpus(CORPUS, root / "corpus")
    splice_known_record(focused, key_path)
    oracle = SimulatedOracle.from_key_file(key_path)

    project = Project.init(root / "project", LoopConfig())
    project.set_rules(default_rules())
    project.set_embedder(EmbedderSpec(dim=256, seed=0))
    project.attach_corpus(focused, Pool.FOCUSED)
    project.attach_corpus(deployment, Pool.DEPLOYMENT)
    project.build_topics(6, seed=3, probe=lambda rid: oracle.label(rid) is Label.POSITIVE)
    batch = project.create_seed_batch(QuotaPlan(total=120, target_share=0.6))
    project.submit_labels(
        {rid: oracle.label(rid) for rid in batch.record_ids},
        oracle_id="sim-oracle",
        source="simulated",
    )
    project.build_seed_dataset()

    project.run_round("from_scratch", TRAIN, oracle)
    project.final_table()

    # the editor test needs a labeled positive source; round 1 may or may
    # not have pulled the spliced record through its queue
    if project.state.final_label(ABDO_ID) is not Label.POSITIVE:
        project.submit_labels({ABDO_ID: "positive"}, oracle_id="stager", source="simulated")

    project.start_round("from_scratch", TRAIN)
    for _ in range(4):
        project.advance()

    summary = project.queue_summary()
    info = {
        "abdo_id": ABDO_ID,
        "abdo_span": ABDO_SPAN,
        "round": summary["round"],
        "queue_total": summary["remaining_total"],
    }
    return project, info


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", type=Path, required=True)
    ap.add_argument("--port", type=int, required=True)
    ap.add_argument("--token", required=True)
    args = ap.parse_args()

    project, info = stage(args.root)
    if info["queue_total"] < 21:
        print(f"staging failed: queue too small ({info['queue_total']})", file=sys.stderr)
        return 1
    print("READY " + json.dumps(info), flush=True)
    serve(project, host="127.0.0.1", port=args.port, token=args.token)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
