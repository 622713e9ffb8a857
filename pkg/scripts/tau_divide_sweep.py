"""Median unseen-mIoU margin over seeds for a grid of (tau, divide coefficient) pairs.

    python3 scripts/tau_divide_sweep.py configs/desk.ini --pairs 0.7:80 0.85:40 0.7:10
"""
import argparse
import statistics
import sys

from seed_sweep import sweep
from zsmmd.config import load_config


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--pairs", nargs="+", default=["0.7:80", "0.85:40", "0.7:10"], help="tau:divide")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = p.parse_args(argv)
    cfg = load_config(args.config)
    for pair in args.pairs:
        tau, divide = (float(v) for v in pair.split(":"))
        rows = sweep(cfg, args.seeds, cfg.k[0], tau=tau, divide_coefficient=divide)
        margins = [r["margin"] for r in rows]
        print(f"tau {tau:g} divide {divide:g}: margins {[round(m, 4) for m in margins]}"
              f" median {statistics.median(margins):+.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
