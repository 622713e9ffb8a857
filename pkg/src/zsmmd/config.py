"""Experiment configuration: INI-style ``key = value`` text with three sections.

Example::

    [task]
    classes = 8
    embed_dim = 16
    feature_dim = 32

    [train]
    tau = 0.7
    divide_coefficient = 80

    [experiment]
    k = 2
    modes = no-recursive, confidence-weighted
    seed = 0

Unknown sections or keys are rejected. Lists are comma separated.
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .trainer import MODES, TrainConfig

# (tau, divide_coefficient) per number of unseen classes, as reported for the two benchmarks
PUBLISHED_SCHEDULES = {
    "voc": {2: (0.85, 40.0), 4: (0.7, 80.0), 6: (0.7, 80.0), 8: (0.7, 80.0), 10: (0.85, 40.0)},
    "context": {2: (0.85, 160.0), 4: (0.7, 160.0), 6: (0.85, 80.0), 8: (0.85, 80.0), 10: (0.7, 160.0)},
}


@dataclass
class TaskParams:
    classes: int = 8
    embed_dim: int = 16
    feature_dim: int = 32
    noise: float = 0.15
    image_size: int = 16
    train_images: int = 32
    eval_images: int = 16
    regions_per_image: int = 3
    embeddings: str = ""  # optional word-embedding file; synthetic embeddings otherwise


_TRAIN_KEYS = [f.name for f in dataclasses.fields(TrainConfig) if f.name not in ("ablation_mode", "seed")]


@dataclass
class ExperimentConfig:
    task: TaskParams = field(default_factory=TaskParams)
    train: dict = field(default_factory=dict)  # TrainConfig overrides
    schedule: str = "none"
    k: list[int] = field(default_factory=lambda: [2])
    modes: list[str] = field(default_factory=lambda: ["no-recursive", "confidence-weighted"])
    seed: int = 0
    out_dir: str = "results"

    def train_config(self, k: int, mode: str) -> TrainConfig:
        kw = dict(self.train)
        if self.schedule != "none":
            table = PUBLISHED_SCHEDULES[self.schedule]
            if k in table:
                kw["tau"], kw["divide_coefficient"] = table[k]
        return TrainConfig(**kw, ablation_mode=mode, seed=self.seed)

    def validate(self, lines: dict | None = None):
        lines = lines or {}

        def fail(msg, section, key):
            raise ConfigError(msg, key=f"{section}.{key}", line=lines.get((section, key)))

        t = self.task
        for key, ok in [("classes", t.classes >= 2), ("embed_dim", t.embed_dim >= 1),
                        ("feature_dim", t.feature_dim >= 1), ("noise", t.noise >= 0),
                        ("image_size", t.image_size >= 2), ("train_images", t.train_images >= 1),
                        ("eval_images", t.eval_images >= 1), ("regions_per_image", t.regions_per_image >= 1)]:
            if not ok:
                fail(f"invalid value {getattr(t, key)!r}", "task", key)
        if t.regions_per_image + 1 > t.image_size:
            fail("image too small for the requested regions", "task", "regions_per_image")
        if self.schedule not in ("none", *PUBLISHED_SCHEDULES):
            fail(f"unknown schedule {self.schedule!r}", "train", "schedule")
        if not self.k:
            fail("need at least one K", "experiment", "k")
        for k in self.k:
            if not 0 <= k <= min(10, t.classes - 2):
                fail(f"K={k} must lie in [0, {min(10, t.classes - 2)}]", "experiment", "k")
        for m in self.modes:
            if m not in MODES:
                fail(f"unknown mode {m!r}", "experiment", "modes")
        if not self.modes:
            fail("need at least one mode", "experiment", "modes")
        try:
            self.train_config(self.k[0], self.modes[0])
        except (TypeError, ValueError) as exc:
            key = str(exc).split()[0]
            fail(str(exc), "train", key)
        return self


def _split_list(value):
    return [v.strip() for v in value.split(",") if v.strip()]


_TRAIN_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _convert(value: str, kind: str):
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if kind.startswith("tuple[float"):
        return tuple(float(v) for v in _split_list(value))
    if kind.startswith("tuple[int"):
        return tuple(int(v) for v in _split_list(value)) or None
    return value


def _line_numbers(text: str) -> dict:
    out, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if m := re.match(r"^\[([^\]]+)\]$", s):
            section = m.group(1).strip()
        elif (m := re.match(r"^([^=:#;]+?)\s*[=:]", s)) and section:
            out[(section, m.group(1).strip().lower())] = n
    return out


def parse_config(text: str) -> ExperimentConfig:
    lines = _line_numbers(text)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None
    cfg = ExperimentConfig()
    task_fields = {f.name: f.type for f in dataclasses.fields(TaskParams)}
    for section in parser.sections():
        if section not in ("task", "train", "experiment"):
            raise ConfigError(f"unknown section [{section}]", key=section)
        for key, raw in parser.items(section):
            where = dict(key=f"{section}.{key}", line=lines.get((section, key)))
            try:
                if section == "task":
                    if key not in task_fields:
                        raise ConfigError("unknown key", **where)
                    setattr(cfg.task, key, _convert(raw, task_fields[key]))
                elif section == "train":
                    if key == "schedule":
                        cfg.schedule = raw.strip()
                    elif key in _TRAIN_KEYS:
                        cfg.train[key] = _convert(raw, str(_TRAIN_TYPES[key]))
                    else:
                        raise ConfigError("unknown key", **where)
                else:
                    if key == "k":
                        cfg.k = [int(v) for v in _split_list(raw)]
                    elif key == "modes":
                        cfg.modes = _split_list(raw)
                    elif key == "seed":
                        cfg.seed = int(raw)
                    elif key == "out_dir":
                        cfg.out_dir = raw.strip()
                    else:
                        raise ConfigError("unknown key", **where)
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value {raw!r}: {exc}", **where) from None
    return cfg.validate(lines)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    """Fully resolved config text; parsing it back yields an equivalent config."""
    def fmt(v):
        if isinstance(v, (tuple, list)):
            return ", ".join(fmt(x) for x in v)
        if v is None:
            return ""
        return repr(v) if isinstance(v, float) else str(v)

    resolved = dataclasses.asdict(TrainConfig(**cfg.train))
    out = ["[task]"]
    out += [f"{k} = {fmt(v)}" for k, v in dataclasses.asdict(cfg.task).items()]
    out += ["", "[train]", f"schedule = {cfg.schedule}"]
    out += [f"{k} = {fmt(resolved[k])}" for k in _TRAIN_KEYS]
    out += ["", "[experiment]", f"k = {fmt(cfg.k)}", f"modes = {fmt(cfg.modes)}",
            f"seed = {cfg.seed}", f"out_dir = {cfg.out_dir}", ""]
    return "\n".join(out)
