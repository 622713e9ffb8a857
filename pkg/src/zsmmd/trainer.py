"""Joint generator/classifier training with recursive confidence-weighted feedback.

Per training image, in order:

1. one MMD step per seen class present, generated vs. backbone features;
2. after warm-up, one ZS-MMD step per unseen class present, against the
   generator's own samples that the classifier labels correctly with
   confidence above ``tau`` (weighted by that confidence);
3. classifier data: backbone features for seen pixels, fresh pseudo features
   for unseen pixels. An SGD step is taken every ``clf_batch_images`` images.

Real features of unseen classes are never read during training.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifier import PixelClassifier, classify, train_classifier_step
from .errors import NumericError, SelectionTooSmall
from .generator import ClassEmbedding, GeneratorModel, generate, train_generator_recursive, train_generator_seen
from .losses import KernelSpec, WeightedFeatureSet
from .metrics import IGNORE_LABEL, ConfusionMatrix, accumulate, compute_metrics, hiou
from .synthbench import LabeledFeatureImage, SyntheticTask, sample_image
from .tensor import Adam, Sgd, spawn_rngs

log = logging.getLogger(__name__)

MODES = ("confidence-weighted", "equal-weight", "no-recursive")
RNG_STREAMS = ["init", "order", "seen_noise", "recursive_noise", "clf_noise", "subsample"]


@dataclass
class TrainConfig:
    tau: float = 0.7
    divide_coefficient: float = 80.0
    warmup_epochs: int = 3
    epochs: int = 20
    gen_batch: int = 128
    clf_batch_images: int = 8
    q_min: int = 2
    ablation_mode: str = "confidence-weighted"
    seed: int = 0
    gen_lr: float = 2e-4
    clf_lr: float = 1e-7
    clf_momentum: float = 0.9
    clf_weight_decay: float = 5e-4
    bandwidths: tuple[float, ...] = (2.0, 5.0, 10.0, 20.0, 40.0, 80.0)
    gen_hidden: tuple[int, ...] | None = None

    def __post_init__(self):
        self.bandwidths = tuple(float(b) for b in self.bandwidths)
        if self.gen_hidden is not None:
            self.gen_hidden = tuple(int(h) for h in self.gen_hidden)
        self.validate()

    def validate(self):
        checks = [
            ("tau", 0.0 < self.tau < 1.0, "must lie in (0, 1)"),
            ("divide_coefficient", self.divide_coefficient >= 1.0, "must be >= 1"),
            ("warmup_epochs", self.warmup_epochs >= 0, "must be >= 0"),
            ("epochs", self.epochs >= 1, "must be >= 1"),
            ("gen_batch", self.gen_batch >= 1, "must be >= 1"),
            ("clf_batch_images", self.clf_batch_images >= 1, "must be >= 1"),
            ("q_min", self.q_min >= 2, "must be >= 2"),
            ("ablation_mode", self.ablation_mode in MODES, f"must be one of {MODES}"),
            ("gen_lr", self.gen_lr >= 0, "must be >= 0"),
            ("clf_lr", self.clf_lr >= 0, "must be >= 0"),
            ("bandwidths", len(self.bandwidths) > 0 and min(self.bandwidths) > 0, "must be positive"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ValueError(f"{key} {msg} (got {getattr(self, key)!r})")


@dataclass
class EpochRecord:
    epoch: int
    seen_mmd: float
    recursive_loss: float | None
    recursive_steps: int
    skipped_selections: int
    selected: dict[int, float]  # unseen class -> mean Q per selection
    clf_loss: float
    metrics: dict

    def flat(self) -> dict:
        row = {k: v for k, v in asdict(self).items() if k not in ("selected", "metrics")}
        for c, q in sorted(self.selected.items()):
            row[f"Q_{c}"] = q
        row.update(_flatten_metrics(self.metrics))
        return row


@dataclass
class Benchmark:
    task: SyntheticTask
    seen: list[int]
    unseen: list[int]
    train_images: list[LabeledFeatureImage]
    eval_images: list[LabeledFeatureImage]


def build_benchmark(task: SyntheticTask, unseen: list[int], n_train: int, n_eval: int,
                    image_size: int, seed: int, regions_per_image: int = 3) -> Benchmark:
    """Fixed train/eval image sets; every image holds background plus random object classes."""
    seen = [c for c in range(task.num_classes) if c not in set(unseen)]
    streams = spawn_rngs(seed, ["train", "eval"])

    def draw(rng, n):
        objects = np.arange(1, task.num_classes)
        k = min(regions_per_image, objects.size)
        out = []
        for _ in range(n):
            present = [0, *sorted(rng.choice(objects, size=k, replace=False).tolist())]
            out.append(sample_image(task, image_size, image_size, present, rng))
        return out

    return Benchmark(task, seen, sorted(unseen), draw(streams["train"], n_train), draw(streams["eval"], n_eval))


@dataclass
class TrainState:
    generator: GeneratorModel
    classifier: PixelClassifier
    gen_opt: Adam
    clf_opt: Sgd
    rngs: dict
    kernel: KernelSpec


def init_state(task: SyntheticTask, config: TrainConfig) -> TrainState:
    rngs = spawn_rngs(config.seed, RNG_STREAMS)
    gen = GeneratorModel.init(task.d_e, task.d_f, rngs["init"], config.gen_hidden)
    clf = PixelClassifier.init(task.d_f, task.num_classes, rngs["init"])
    return TrainState(
        gen, clf,
        Adam(config.gen_lr),
        Sgd(config.clf_lr, config.clf_momentum, config.clf_weight_decay),
        rngs, KernelSpec(config.bandwidths),
    )


def select_high_confidence(gen: GeneratorModel, clf: PixelClassifier, emb: ClassEmbedding, rng,
                           n: int, tau: float) -> WeightedFeatureSet:
    """Generated features of ``emb``'s class that ``clf`` assigns to that class with confidence > tau."""
    if not 0 <= emb.class_id < clf.num_classes:
        raise ValueError(f"class {emb.class_id} not in the classifier's label space")
    feats = generate(gen, emb, rng, n).features
    pred = classify(clf, feats)
    keep = (pred.labels == emb.class_id) & (pred.confidence > tau)
    return WeightedFeatureSet(feats[keep], pred.confidence[keep], emb.class_id)


def _subsample(x, n, rng):
    if x.shape[0] <= n:
        return x
    return x[np.sort(rng.choice(x.shape[0], size=n, replace=False))]


def train_epoch(state: TrainState, bench: Benchmark, config: TrainConfig, epoch: int) -> EpochRecord:
    task = bench.task
    unseen = set(bench.unseen)
    recursive_on = (config.ablation_mode != "no-recursive" and epoch >= config.warmup_epochs and bool(unseen))
    seen_losses, rec_losses, clf_losses = [], [], []
    q_counts: dict[int, list[int]] = {c: [] for c in bench.unseen}
    skipped = 0
    pending_x, pending_y = [], []

    order = state.rngs["order"].permutation(len(bench.train_images))
    for pos, idx in enumerate(order):
        feats, labels = bench.train_images[idx].flat()
        present = sorted(int(c) for c in np.unique(labels) if c != IGNORE_LABEL)

        for c in present:
            if c in unseen:
                continue
            real = _subsample(feats[labels == c], config.gen_batch, state.rngs["subsample"])
            loss = train_generator_seen(state.generator, task.class_embedding(c), real, state.gen_opt,
                                        state.rngs["seen_noise"], config.gen_batch, state.kernel)
            seen_losses.append(loss)

        if recursive_on:
            for c in present:
                if c not in unseen:
                    continue
                pseudo = select_high_confidence(state.generator, state.classifier, task.class_embedding(c),
                                                state.rngs["recursive_noise"], config.gen_batch, config.tau)
                q_counts[c].append(len(pseudo))
                if config.ablation_mode == "equal-weight":
                    pseudo.weights = np.ones_like(pseudo.weights)
                try:
                    loss = train_generator_recursive(
                        state.generator, task.class_embedding(c), pseudo, state.gen_opt,
                        state.rngs["recursive_noise"],
                        config.gen_batch, config.divide_coefficient, state.kernel, config.q_min)
                except SelectionTooSmall as exc:
                    skipped += 1
                    log.debug("epoch %d image %d class %d: recursive step skipped (%s)", epoch, idx, c, exc)
                    continue
                rec_losses.append(loss)

        x = feats.copy()
        for c in present:
            if c in unseen:
                mask = labels == c
                x[mask] = generate(state.generator, task.class_embedding(c), state.rngs["clf_noise"],
                                   int(mask.sum())).features
        keep = labels != IGNORE_LABEL
        pending_x.append(x[keep])
        pending_y.append(labels[keep])
        if len(pending_x) == config.clf_batch_images or pos == len(order) - 1:
            clf_losses.append(train_classifier_step(state.classifier, np.vstack(pending_x),
                                                    np.concatenate(pending_y), state.clf_opt))
            pending_x, pending_y = [], []

    for name, vals in (("seen MMD", seen_losses), ("recursive", rec_losses), ("classifier", clf_losses)):
        if not np.all(np.isfinite(vals)):
            raise NumericError(f"epoch {epoch}: non-finite {name} loss")

    return EpochRecord(
        epoch=epoch,
        seen_mmd=float(np.mean(seen_losses)) if seen_losses else 0.0,
        recursive_loss=float(np.mean(rec_losses)) if rec_losses else None,
        recursive_steps=len(rec_losses),
        skipped_selections=skipped,
        selected={c: float(np.mean(v)) for c, v in q_counts.items() if v},
        clf_loss=float(np.mean(clf_losses)),
        metrics=evaluate(state.classifier, bench),
    )


def evaluate(clf: PixelClassifier, bench: Benchmark) -> dict:
    """Seen / unseen / overall metric blocks over the held-out images (fractions, not percent)."""
    cm = ConfusionMatrix(bench.task.num_classes)
    for img in bench.eval_images:
        feats, labels = img.flat()
        cm = accumulate(cm, classify(clf, feats).labels, labels)
    return metrics_from_confusion(cm, bench.seen, bench.unseen)


def metrics_from_confusion(cm: ConfusionMatrix, seen, unseen) -> dict:
    out = {"seen": compute_metrics(cm, seen), "unseen": {}, "overall": compute_metrics(cm, [*seen, *unseen])}
    if unseen and cm.counts[list(unseen)].sum() > 0:
        out["unseen"] = compute_metrics(cm, unseen)
        a, b = out["seen"]["mIoU"], out["unseen"]["mIoU"]
        out["overall"]["hIoU"] = hiou(a, b) if a + b > 0 else 0.0
    return out


def _flatten_metrics(m: dict) -> dict:
    return {f"{block}_{k}": v for block, vals in m.items() for k, v in vals.items()}


@dataclass
class TrainResult:
    generator: GeneratorModel
    classifier: PixelClassifier
    history: list[EpochRecord] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)


def run_training(bench: Benchmark, config: TrainConfig) -> TrainResult:
    state = init_state(bench.task, config)
    history = []
    for epoch in range(config.epochs):
        rec = train_epoch(state, bench, config, epoch)
        log.info("epoch %d seen_mmd=%.4g rec=%s clf=%.4g unseen_mIoU=%s", epoch, rec.seen_mmd,
                 rec.recursive_loss, rec.clf_loss, rec.metrics["unseen"].get("mIoU"))
        history.append(rec)
    return TrainResult(state.generator, state.classifier, history, evaluate(state.classifier, bench))
