"""Dense MLP with hand-written backprop, SGD/Adam, and seeded Gaussian draws.

Matrices are plain ``float64`` numpy arrays of shape ``(rows, cols)``. Random
numbers come from ``numpy.random.Generator`` over PCG64, whose stream for a
given seed is fixed across platforms and numpy releases.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError, UsageError

ACTIVATIONS = ("relu", "leaky-relu", "identity")
LEAKY_SLOPE = 0.2


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, names: list[str]) -> dict[str, np.random.Generator]:
    """Independent named streams derived from one seed (stable in ``names`` order)."""
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.Generator(np.random.PCG64(s)) for n, s in zip(names, children)}


def gaussian_sample(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    if n < 1 or d < 1:
        raise ShapeError(f"gaussian_sample needs n, d >= 1, got {n}x{d}")
    return rng.standard_normal((n, d))


@dataclass
class Layer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weight.ndim != 2 or self.bias.shape[0] != self.weight.shape[1]:
            raise ShapeError(f"bias {self.bias.shape} does not match weight {self.weight.shape}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


_model_ids = itertools.count()


class MlpModel:
    """Feed-forward stack of affine layers, each followed by its activation."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ShapeError("an MLP needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.weight.shape[1] != b.weight.shape[0]:
                raise ShapeError(f"layer dims do not chain: {a.weight.shape} -> {b.weight.shape}")
        self.layers = layers
        self.uid = next(_model_ids)
        # bumped on every parameter update so stale forward caches are detectable
        self.version = 0

    @classmethod
    def init(cls, dims: list[int], activations: list[str], rng: np.random.Generator) -> "MlpModel":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
        if len(activations) != len(dims) - 1:
            raise ShapeError("need one activation per layer")
        layers = []
        for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            b = rng.uniform(-bound, bound, size=fan_out)
            layers.append(Layer(w, b, act))
        return cls(layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend([layer.weight, layer.bias])
        return out

    def copy(self) -> "MlpModel":
        return MlpModel([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return mlp_forward(self, x)[0]


@dataclass
class ForwardCache:
    model_uid: int
    model_version: int
    inputs: list[np.ndarray] = field(default_factory=list)
    preacts: list[np.ndarray] = field(default_factory=list)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "leaky-relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    return z


def _activation_grad(z, kind, g):
    if kind == "relu":
        return g * (z > 0)
    if kind == "leaky-relu":
        return g * np.where(z > 0, 1.0, LEAKY_SLOPE)
    return g


def mlp_forward(model: MlpModel, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeError(f"input shape {x.shape} incompatible with input_dim {model.input_dim}")
    cache = ForwardCache(model.uid, model.version)
    h = x
    for layer in model.layers:
        cache.inputs.append(h)
        z = h @ layer.weight + layer.bias
        cache.preacts.append(z)
        h = _activate(z, layer.activation)
    return h, cache


def mlp_backward(model: MlpModel, cache: ForwardCache, grad_out) -> tuple[list[np.ndarray], np.ndarray]:
    """Returns (parameter gradients aligned with ``model.parameters()``, input gradient)."""
    if cache.model_uid != model.uid or cache.model_version != model.version:
        raise UsageError("forward cache does not belong to the current model parameters")
    g = np.asarray(grad_out, dtype=np.float64)
    n = cache.inputs[0].shape[0]
    if g.shape != (n, model.output_dim):
        raise ShapeError(f"output gradient shape {g.shape} != {(n, model.output_dim)}")
    grads: list[np.ndarray] = [None] * (2 * len(model.layers))  # type: ignore[list-item]
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        g = _activation_grad(cache.preacts[idx], layer.activation, g)
        grads[2 * idx] = cache.inputs[idx].T @ g
        grads[2 * idx + 1] = g.sum(axis=0)
        g = g @ layer.weight.T
    return grads, g


class Sgd:
    kind = "sgd"

    def __init__(self, lr: float, momentum: float = 0.0, weight_decay: float = 0.0):
        if lr < 0:
            raise ValueError("learning rate must be non-negative")
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buffers: list[np.ndarray] | None = None
        self.steps = 0

    def step(self, model: MlpModel, grads: list[np.ndarray]) -> None:
        params = _check_grads(model, grads)
        if self.buffers is None:
            self.buffers = [np.zeros_like(p) for p in params]
        for p, g, m in zip(params, grads, self.buffers):
            m *= self.momentum
            m += g + self.weight_decay * p
            p -= self.lr * m
        self.steps += 1
        model.version += 1


class Adam:
    kind = "adam"

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr < 0:
            raise ValueError("learning rate must be non-negative")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None
        self.steps = 0

    def step(self, model: MlpModel, grads: list[np.ndarray]) -> None:
        params = _check_grads(model, grads)
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.steps += 1
        t = self.steps
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        model.version += 1


def _check_grads(model, grads):
    params = model.parameters()
    if len(grads) != len(params):
        raise ShapeError(f"expected {len(params)} gradient arrays, got {len(grads)}")
    for p, g in zip(params, grads):
        if np.shape(g) != p.shape:
            raise ShapeError(f"gradient shape {np.shape(g)} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient; optimizer step aborted")
    return params


def optimizer_step(state: Sgd | Adam, model: MlpModel, grads: list[np.ndarray]) -> None:
    state.step(model, grads)
