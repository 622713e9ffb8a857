"""Command line experiment runner.

    zsmmd run CONFIG [--seed N] [--out-dir DIR] [--mode MODE ...]
    zsmmd ablation CONFIG [--seed N] [--out-dir DIR]
    zsmmd eval MODEL CONFIG [--k K] [--seed N]

Exit codes: 0 success, 2 invalid configuration or inputs, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, dump_config, load_config
from .errors import ConfigError, EmbeddingFileError, ModelFileError, NumericError
from .metrics import hiou
from .modelio import load_model, save_model
from .synthbench import default_class_names, load_embeddings, make_task, split_seen_unseen
from .trainer import build_benchmark, evaluate, run_training

log = logging.getLogger("zsmmd")

MODE_LABELS = {"no-recursive": "Baseline", "equal-weight": "Equal Weight", "confidence-weighted": "Final"}
RESULT_COLUMNS = ["K", "Model",
                  "Seen PA", "Seen MA", "Seen mIoU",
                  "Unseen PA", "Unseen MA", "Unseen mIoU",
                  "Overall PA", "Overall MA", "Overall mIoU", "Overall hIoU"]
HISTORY_COLUMNS = ["K", "mode", "epoch", "seen_mmd", "recursive_loss", "recursive_steps", "skipped_selections",
                   "selected", "clf_loss", "seen_mIoU", "unseen_mIoU", "overall_mIoU", "overall_hIoU"]


def build_task(cfg: ExperimentConfig):
    t = cfg.task
    if t.embeddings:
        names = default_class_names(t.classes)
        vecs = [e.vector for e in load_embeddings(t.embeddings, names)]
        return make_task(t.classes, len(vecs[0]), t.feature_dim, t.noise, cfg.seed, names, vecs)
    return make_task(t.classes, t.embed_dim, t.feature_dim, t.noise, cfg.seed)


def build_cell_benchmark(cfg: ExperimentConfig, k: int):
    task = build_task(cfg)
    _, unseen = split_seen_unseen(task.class_names, k)
    ids = [task.class_names.index(u) for u in unseen]
    t = cfg.task
    return build_benchmark(task, ids, t.train_images, t.eval_images, t.image_size, cfg.seed, t.regions_per_image)


def result_row(k: int, mode: str, metrics: dict) -> dict:
    """Percent-scale values at full precision; hIoU recomputed from the row's own mIoU pair."""
    row = {"K": k, "Model": MODE_LABELS[mode]}
    for block in ("seen", "unseen", "overall"):
        for name in ("PA", "MA", "mIoU"):
            v = metrics[block].get(name)
            row[f"{block.capitalize()} {name}"] = None if v is None else 100.0 * v
    s, u = row["Seen mIoU"], row["Unseen mIoU"]
    row["Overall hIoU"] = hiou(s, u) if (u is not None and s + u > 0) else None
    return row


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]))
                    for k in columns})
    return buf.getvalue()


def _history_rows(k, mode, history):
    for rec in history:
        m = rec.metrics
        yield {
            "K": k, "mode": mode, "epoch": rec.epoch, "seen_mmd": rec.seen_mmd,
            "recursive_loss": rec.recursive_loss, "recursive_steps": rec.recursive_steps,
            "skipped_selections": rec.skipped_selections,
            "selected": ";".join(f"{c}:{q!r}" for c, q in sorted(rec.selected.items())),
            "clf_loss": rec.clf_loss, "seen_mIoU": m["seen"]["mIoU"], "unseen_mIoU": m["unseen"].get("mIoU"),
            "overall_mIoU": m["overall"]["mIoU"], "overall_hIoU": m["overall"].get("hIoU"),
        }


def run_experiment(cfg: ExperimentConfig, modes=None, out_dir=None) -> list[dict]:
    """Train every (K, mode) cell and write results.csv/json, history.csv, models and config snapshot."""
    modes = list(modes or cfg.modes)
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    results, history = [], []
    for k in cfg.k:
        bench = build_cell_benchmark(cfg, k)
        for mode in modes:
            tc = cfg.train_config(k, mode)
            log.info("training K=%d mode=%s tau=%g divide=%g", k, mode, tc.tau, tc.divide_coefficient)
            res = run_training(bench, tc)
            results.append(result_row(k, mode, res.metrics))
            history.extend(_history_rows(k, mode, res.history))
            save_model(out / "models" / f"K{k}_{mode}.zsmd", res.generator, res.classifier)

    snapshot = dataclasses.replace(cfg, modes=modes, out_dir=str(out))
    (out / "results.csv").write_text(_csv_text(results, RESULT_COLUMNS), encoding="utf-8", newline="")
    (out / "history.csv").write_text(_csv_text(history, HISTORY_COLUMNS), encoding="utf-8", newline="")
    (out / "results.json").write_text(json.dumps({"results": results, "seed": cfg.seed}, indent=2) + "\n",
                                      encoding="utf-8")
    (out / "config.resolved.ini").write_text(dump_config(snapshot), encoding="utf-8")
    return results


def format_table(rows) -> str:
    lines = ["  ".join(f"{c:>12}" for c in RESULT_COLUMNS)]
    for r in rows:
        cells = [f"{r[c]:12.1f}" if isinstance(r[c], float) else f"{'' if r[c] is None else r[c]!s:>12}"
                 for c in RESULT_COLUMNS]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out_dir", None):
        cfg.out_dir = args.out_dir
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if args.mode:
        cfg.modes = args.mode
        cfg.validate()
    print(format_table(run_experiment(cfg)))
    return 0


def cmd_ablation(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    print(format_table(run_experiment(cfg, modes=["equal-weight", "confidence-weighted"])))
    return 0


def cmd_eval(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    k = args.k if args.k is not None else cfg.k[0]
    bench = build_cell_benchmark(cfg, k)
    _, clf = load_model(args.model, expect_d_f=bench.task.d_f, expect_classes=bench.task.num_classes)
    metrics = evaluate(clf, bench)
    print(json.dumps({"K": k, "metrics": metrics}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zsmmd", description="Recursive ZS-MMD zero-shot experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train and evaluate every (K, mode) cell")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out-dir")
    r.add_argument("--mode", action="append", help="repeatable; overrides the config's modes")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("ablation", help="equal-weight vs confidence-weighted at identical seeds")
    a.add_argument("config")
    a.add_argument("--seed", type=int)
    a.add_argument("--out-dir")
    a.set_defaults(func=cmd_ablation)

    e = sub.add_parser("eval", help="evaluate a saved model on the config's held-out images")
    e.add_argument("model")
    e.add_argument("config")
    e.add_argument("--k", type=int)
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, EmbeddingFileError, ModelFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
