#!/usr/bin/env python3
"""Rescore a finished run's final table under different beta values.

Reads reports/final_table.json from a run directory; no model or corpus
work happens here, only metric arithmetic on the stored confusion counts.
Useful for checking how much the positive-class weighting moves the
model-vs-baseline comparison.
"""

import argparse
import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from altriage.evaluation import ConfusionMatrix, metrics


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir", type=Path, help="run output dir, e.g. runs/synth4")
    ap.add_argument("--betas", type=float, nargs="+", default=[1.0, 1.3, 2.0])
    args = ap.parse_args()

    table_path = args.run_dir / "project" / "reports" / "final_table.json"
    rows = json.loads(table_path.read_text())["rows"]

    header = f"{'row':<18}" + "".join(f"  Fb={b:<5g}" for b in args.betas)
    print(header)
    print("-" * len(header))
    for row in rows:
        cm = ConfusionMatrix.from_json(row["confusion"])
        scores = [metrics(cm, beta=b).fbeta for b in args.betas]
        print(f"{row['name']:<18}" + "".join(f"  {s:8.3f}" for s in scores))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
