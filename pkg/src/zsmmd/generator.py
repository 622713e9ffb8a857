"""Moment-matching pseudo-feature generator conditioned on class embeddings."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SelectionTooSmall, ShapeError
from .losses import FeatureSet, KernelSpec, WeightedFeatureSet, mmd2, mmd2_grad, zs_mmd2, zs_mmd2_grad
from .tensor import MlpModel, gaussian_sample, mlp_backward, mlp_forward


@dataclass
class ClassEmbedding:
    class_id: int
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.vector)):
            raise ValueError(f"embedding for class {self.class_id} is not finite")


def default_hidden(d_f: int) -> list[int]:
    width = max(2 * d_f, 64)
    return [width, width]


class GeneratorModel:
    """MLP over ``[embedding, noise]`` (embedding first), noise has the embedding's size."""

    def __init__(self, mlp: MlpModel, d_e: int):
        if mlp.input_dim != 2 * d_e:
            raise ShapeError(f"generator input must be 2*d_e={2 * d_e}, got {mlp.input_dim}")
        self.mlp = mlp
        self.d_e = d_e

    @property
    def d_f(self) -> int:
        return self.mlp.output_dim

    @classmethod
    def init(cls, d_e: int, d_f: int, rng: np.random.Generator, hidden: list[int] | None = None):
        hidden = default_hidden(d_f) if hidden is None else list(hidden)
        dims = [2 * d_e, *hidden, d_f]
        acts = ["leaky-relu"] * len(hidden) + ["identity"]
        return cls(MlpModel.init(dims, acts, rng), d_e)

    def _inputs(self, emb: ClassEmbedding, rng, n):
        if emb.vector.shape[0] != self.d_e:
            raise ShapeError(f"embedding has dim {emb.vector.shape[0]}, generator expects {self.d_e}")
        if n < 1:
            raise ShapeError("need at least one sample")
        noise = gaussian_sample(rng, n, self.d_e)
        return np.hstack([np.broadcast_to(emb.vector, (n, self.d_e)), noise])


def generate(gen: GeneratorModel, emb: ClassEmbedding, rng, count: int) -> FeatureSet:
    out, _ = mlp_forward(gen.mlp, gen._inputs(emb, rng, count))
    return FeatureSet(out, emb.class_id, "generated")


def _generate_with_cache(gen, emb, rng, n):
    return mlp_forward(gen.mlp, gen._inputs(emb, rng, n))


def train_generator_seen(gen: GeneratorModel, emb: ClassEmbedding, real, opt, rng, batch: int,
                         spec: KernelSpec) -> float:
    """One MMD step pulling generated features of ``emb`` towards ``real``; returns the pre-step loss."""
    fake, cache = _generate_with_cache(gen, emb, rng, batch)
    loss = mmd2(real, fake, spec)
    grads, _ = mlp_backward(gen.mlp, cache, mmd2_grad(real, fake, spec))
    opt.step(gen.mlp, grads)
    return loss


def train_generator_recursive(gen: GeneratorModel, emb: ClassEmbedding, pseudo: WeightedFeatureSet,
                              opt, rng, batch: int, divide_coefficient: float, spec: KernelSpec,
                              q_min: int = 2) -> float:
    """One ZS-MMD step against confidence-weighted pseudo labels, scaled by 1/divide_coefficient."""
    if len(pseudo) < q_min:
        raise SelectionTooSmall(len(pseudo), q_min)
    if divide_coefficient <= 0:
        raise ValueError("divide_coefficient must be positive")
    fake, cache = _generate_with_cache(gen, emb, rng, batch)
    loss = zs_mmd2(pseudo, fake, spec) / divide_coefficient
    grads, _ = mlp_backward(gen.mlp, cache, zs_mmd2_grad(pseudo, fake, spec) / divide_coefficient)
    opt.step(gen.mlp, grads)
    return loss
