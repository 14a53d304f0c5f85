#!/usr/bin/env python3
"""Run the pinned 4-round benchmark and print the round-by-round table.

Equivalent to `al run --config synth4.toml` plus wall-time reporting.
Every draw is seeded, so two invocations produce byte-identical output
trees; pass --out to keep several copies around for diffing.
"""

import argparse
import json
import shutil
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from altriage.config import load_run_spec
from altriage.runner import execute, verify_replay


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=REPO / "synth4.toml")
    ap.add_argument("--out", type=Path, default=None, help="output dir (default: run.out_dir)")
    ap.add_argument("--force", action="store_true", help="replace an existing output dir")
    args = ap.parse_args()

    spec = load_run_spec(args.config)
    out_dir = args.out or REPO / spec.out_dir
    if out_dir.exists():
        if not args.force:
            ap.error(f"{out_dir} exists; pass --force to replace it")
        shutil.rmtree(out_dir)

    started = time.monotonic()
    table, project = execute(spec, out_dir)
    elapsed = time.monotonic() - started

    print(table["text"])
    print(f"eval set: {table['eval_size']} records, beta={table['beta']}")
    print(f"train sizes: {table['train_sizes']}")
    print(f"wall time: {elapsed:.1f}s")
    if not verify_replay(project):
        print("REPLAY MISMATCH: event log does not reproduce live state", file=sys.stderr)
        return 1
    failed = [name for name, ok in table["checks"].items() if not ok]
    for name, ok in table["checks"].items():
        print(f"  {'ok' if ok else 'FAIL'}  {name}")
    print(json.dumps({"out_dir": str(out_dir), "failed_checks": failed}))
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
