"""Paired baseline vs recursive runs over several seeds; prints the unseen-mIoU margin per seed.

    python3 scripts/seed_sweep.py configs/desk.ini --seeds 0 1 2 3 4 --out sweep.csv
"""
import argparse
import csv
import dataclasses
import statistics
import sys
import time

from zsmmd.cli import build_cell_benchmark
from zsmmd.config import load_config
from zsmmd.trainer import run_training


def sweep(cfg, seeds, k, recursive_mode="confidence-weighted", **overrides):
    rows = []
    for seed in seeds:
        c = dataclasses.replace(cfg, seed=seed)
        bench = build_cell_benchmark(c, k)
        row = {"seed": seed}
        for mode, key in (("no-recursive", "baseline"), (recursive_mode, "recursive")):
            tc = dataclasses.replace(c.train_config(k, mode), **overrides)
            t0 = time.perf_counter()
            res = run_training(bench, tc)
            row[f"{key}_unseen_mIoU"] = res.metrics["unseen"]["mIoU"]
            row[f"{key}_seen_mIoU"] = res.metrics["seen"]["mIoU"]
            row[f"{key}_seconds"] = time.perf_counter() - t0
        row["margin"] = row["recursive_unseen_mIoU"] - row["baseline_unseen_mIoU"]
        rows.append(row)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--mode", default="confidence-weighted", choices=["equal-weight", "confidence-weighted"])
    p.add_argument("--out", default=None, help="optional CSV path")
    args = p.parse_args(argv)
    cfg = load_config(args.config)
    rows = sweep(cfg, args.seeds, args.k if args.k is not None else cfg.k[0], args.mode)
    for r in rows:
        print(f"seed {r['seed']}: baseline {r['baseline_unseen_mIoU']:.4f}  recursive {r['recursive_unseen_mIoU']:.4f}"
              f"  margin {r['margin']:+.4f}")
    print(f"median margin {statistics.median(r['margin'] for r in rows):+.4f}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
