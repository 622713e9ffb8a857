"""Synthetic stand-in for a frozen segmentation backbone plus dataset.

Each class ``c`` has an embedding ``e_c`` and backbone features distributed as
``N(W e_c, noise_c^2 I)`` for a fixed matrix ``W`` with orthonormal columns, so
features of a class never seen in training are still predictable from its
embedding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmbeddingFileError, ShapeError
from .generator import ClassEmbedding
from .metrics import IGNORE_LABEL
from .tensor import make_rng

# order in which classes are held out as unseen (first K)
UNSEEN_ORDER = ("cow", "motorbike", "airplane", "sofa", "cat", "tv", "train", "bottle", "chair", "potted-plant")
BACKGROUND = "background"


def default_class_names(num_classes: int) -> list[str]:
    names = [BACKGROUND, *UNSEEN_ORDER]
    names += [f"class{i}" for i in range(len(names), num_classes)]
    return names[:num_classes]


@dataclass
class SyntheticTask:
    class_names: list[str]
    embeddings: np.ndarray  # (C, d_e)
    projection: np.ndarray  # (d_f, d_e), orthonormal columns
    noise: np.ndarray  # (C,) per-class std
    seed: int

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def d_e(self) -> int:
        return self.embeddings.shape[1]

    @property
    def d_f(self) -> int:
        return self.projection.shape[0]

    @property
    def means(self) -> np.ndarray:
        return self.embeddings @ self.projection.T

    def class_embedding(self, c: int) -> ClassEmbedding:
        return ClassEmbedding(c, self.embeddings[c])

    def sample_features(self, c: int, n: int, rng) -> np.ndarray:
        return self.means[c] + self.noise[c] * rng.standard_normal((n, self.d_f))


def make_task(num_classes: int, d_e: int, d_f: int, noise_scale: float, seed: int,
              class_names: list[str] | None = None, embeddings=None) -> SyntheticTask:
    """Random unit-sphere embeddings (unless given) and a random isometric lift to features."""
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if noise_scale < 0:
        raise ValueError("noise_scale must be non-negative")
    rng = make_rng(seed)
    if embeddings is None:
        emb = rng.standard_normal((num_classes, d_e))
        emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    else:
        emb = np.asarray(embeddings, dtype=np.float64)
        if emb.shape[0] != num_classes:
            raise ShapeError(f"{emb.shape[0]} embeddings for {num_classes} classes")
        d_e = emb.shape[1]
    if d_f < d_e:
        raise ShapeError(f"feature dim {d_f} must be >= embedding dim {d_e} for an injective lift")
    q, r = np.linalg.qr(rng.standard_normal((d_f, d_e)))
    q = q * np.sign(np.diag(r))  # canonical sign so the draw fixes q uniquely
    names = list(class_names) if class_names is not None else default_class_names(num_classes)
    return SyntheticTask(names, emb, q, np.full(num_classes, float(noise_scale)), seed)


@dataclass
class LabeledFeatureImage:
    labels: np.ndarray  # (H, W) int, IGNORE_LABEL for void
    features: np.ndarray  # (H, W, d_f)
    regions: list[tuple[int, int, int, int, int]] = field(default_factory=list)  # (class, r0, r1, c0, c1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        return self.features.reshape(-1, self.features.shape[-1]), self.labels.reshape(-1)


def _partition(r0, r1, c0, c1, classes, rng, out):
    k = len(classes)
    if k == 1:
        out.append((classes[0], r0, r1, c0, c1))
        return
    k1 = k // 2
    h, w = r1 - r0, c1 - c0
    # each side must keep at least as many rows/cols as classes it still has to host
    dims = [d for d, length in (("r", h), ("c", w)) if length >= k]
    dim = max(dims, key=lambda d: h if d == "r" else w)
    lo, hi = (r0, r1) if dim == "r" else (c0, c1)
    cut = int(rng.integers(lo + k1, hi - (k - k1) + 1))
    if dim == "r":
        _partition(r0, cut, c0, c1, classes[:k1], rng, out)
        _partition(cut, r1, c0, c1, classes[k1:], rng, out)
    else:
        _partition(r0, r1, c0, cut, classes[:k1], rng, out)
        _partition(r0, r1, cut, c1, classes[k1:], rng, out)


def sample_image(task: SyntheticTask, height: int, width: int, classes_present, rng,
                 boundary_ignore: bool = False) -> LabeledFeatureImage:
    """Tile the image with one random rectangle per listed class and draw per-pixel features.

    With ``boundary_ignore`` the last row/column of every interior region edge is
    labelled ignore (its feature still comes from the region's class).
    """
    classes = [int(c) for c in classes_present]
    if not classes:
        raise ValueError("classes_present is empty")
    if any(c < 0 or c >= task.num_classes for c in classes):
        raise ValueError(f"classes {classes} not all in [0, {task.num_classes})")
    if max(height, width) < len(classes):
        raise ShapeError(f"{height}x{width} image too small for {len(classes)} regions")
    order = [classes[i] for i in rng.permutation(len(classes))]
    regions: list = []
    _partition(0, height, 0, width, order, rng, regions)
    labels = np.empty((height, width), dtype=np.int64)
    for c, r0, r1, c0, c1 in regions:
        labels[r0:r1, c0:c1] = c
    noise = rng.standard_normal((height, width, task.d_f))
    feats = task.means[labels] + task.noise[labels][..., None] * noise
    if boundary_ignore:
        edge = np.zeros_like(labels, dtype=bool)
        edge[:-1, :] |= labels[:-1, :] != labels[1:, :]
        edge[:, :-1] |= labels[:, :-1] != labels[:, 1:]
        labels = np.where(edge, IGNORE_LABEL, labels)
    return LabeledFeatureImage(labels, feats, regions)


def split_seen_unseen(class_names, k: int, candidates=UNSEEN_ORDER) -> tuple[list[str], list[str]]:
    """Unseen = first ``k`` candidates; seen = every other class, in ``class_names`` order."""
    if k < 0 or k > len(candidates):
        raise ValueError(f"K={k} out of range [0, {len(candidates)}]")
    unseen = list(candidates[:k])
    missing = [u for u in unseen if u not in class_names]
    if missing:
        raise ValueError(f"unseen classes {missing} are not in the class list")
    seen = [c for c in class_names if c not in unseen]
    return seen, unseen


def load_embeddings(path, class_names) -> list[ClassEmbedding]:
    """Read ``token v1 ... vd`` lines and return embeddings for ``class_names`` in order."""
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if not values:
                raise EmbeddingFileError(f"line {lineno}: token {token!r} has no vector")
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise EmbeddingFileError(f"line {lineno}: non-numeric value in vector for {token!r}") from None
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise EmbeddingFileError(f"line {lineno}: inconsistent dimension {vec.size}, expected {dim}")
            table.setdefault(token, vec)
    missing = [c for c in class_names if c not in table]
    if missing:
        raise EmbeddingFileError(f"missing embeddings for tokens: {', '.join(missing)}")
    return [ClassEmbedding(i, table[c]) for i, c in enumerate(class_names)]
