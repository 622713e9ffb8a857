"""Gaussian-mixture kernels, (confidence-weighted) MMD^2 and their gradients.

The kernel is ``k(u, v) = sum_b exp(-|u - v|^2 / (2 sigma_b^2))``. Both
estimators are biased V-statistics: diagonal pairs are kept, which also makes
them squared RKHS norms and hence non-negative.

The weighted estimator compares a weighted reference set ``A`` (weights ``c``)
with an unweighted set ``B``::

    |sum_i c_i phi(a_i) / sum_i c_i  -  sum_j phi(b_j) / P|^2

With every ``c_i = 1`` it is exactly the ordinary estimator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

DEFAULT_BANDWIDTHS = (2.0, 5.0, 10.0, 20.0, 40.0, 80.0)


@dataclass(frozen=True)
class KernelSpec:
    bandwidths: tuple[float, ...] = DEFAULT_BANDWIDTHS

    def __post_init__(self):
        bw = tuple(float(s) for s in self.bandwidths)
        if not bw:
            raise DomainError("kernel needs at least one bandwidth")
        if any(not np.isfinite(s) or s <= 0 for s in bw):
            raise DomainError(f"bandwidths must be positive, got {bw}")
        object.__setattr__(self, "bandwidths", bw)


@dataclass
class FeatureSet:
    features: np.ndarray  # (M, d_f)
    class_id: int = -1
    origin: str = "backbone"  # or "generated"

    def __post_init__(self):
        self.features = _as_matrix(self.features)
        if self.origin not in ("backbone", "generated"):
            raise ValueError(f"unknown origin {self.origin!r}")


@dataclass
class WeightedFeatureSet:
    features: np.ndarray  # (Q, d_f)
    weights: np.ndarray  # (Q,), each in (0, 1]
    class_id: int = -1

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1, np.shape(self.features)[-1])
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if self.weights.shape[0] != self.features.shape[0]:
            raise ShapeError("one weight per feature row required")
        if not np.all(np.isfinite(self.weights)):
            raise DomainError("weights must be finite")

    def __len__(self):
        return self.features.shape[0]

    @classmethod
    def empty(cls, dim: int, class_id: int = -1) -> "WeightedFeatureSet":
        return cls(np.zeros((0, dim)), np.zeros(0), class_id)


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {x.shape}")
    return x


def _features(x) -> np.ndarray:
    if isinstance(x, (FeatureSet, WeightedFeatureSet)):
        return x.features
    return _as_matrix(x)


def _sqdist(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    d = u[:, None, :] - v[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def gram(u: np.ndarray, v: np.ndarray, spec: KernelSpec) -> np.ndarray:
    d2 = _sqdist(u, v)
    return sum(np.exp(-d2 / (2.0 * s * s)) for s in spec.bandwidths)


def _gram_and_slope(u, v, spec):
    """Kernel matrix and sum_b k_b / sigma_b^2 (the factor in dk/dv)."""
    d2 = _sqdist(u, v)
    k = np.zeros_like(d2)
    slope = np.zeros_like(d2)
    for s in spec.bandwidths:
        kb = np.exp(-d2 / (2.0 * s * s))
        k += kb
        slope += kb / (s * s)
    return k, slope


def kernel_eval(spec: KernelSpec, u, v) -> float:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise ShapeError(f"kernel arguments differ in dimension: {u.shape} vs {v.shape}")
    d2 = float(np.dot(u - v, u - v))
    return float(sum(np.exp(-d2 / (2.0 * s * s)) for s in spec.bandwidths))


def _check_pair(a, b):
    if a.shape[0] < 1 or b.shape[0] < 1:
        raise DomainError("MMD needs non-empty sample sets")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}")


def _normalized_weights(A):
    c = np.asarray(A.weights, dtype=np.float64)
    if np.any(c < 0):
        raise DomainError("confidence weights must be non-negative")
    total = c.sum()
    if not total > 0:
        raise DomainError("confidence weights sum to zero")
    return c / total


def _weighted_mmd2(a, w, b, spec):
    kaa = gram(a, a, spec)
    kab = gram(a, b, spec)
    kbb = gram(b, b, spec)
    return float(w @ kaa @ w - 2.0 * (w @ kab).mean() + kbb.mean())


def mmd2(X, Y, spec: KernelSpec) -> float:
    x, y = _features(X), _features(Y)
    _check_pair(x, y)
    return _weighted_mmd2(x, np.full(x.shape[0], 1.0 / x.shape[0]), y, spec)


def zs_mmd2(A: WeightedFeatureSet, B, spec: KernelSpec) -> float:
    a, b = A.features, _features(B)
    _check_pair(a, b)
    return _weighted_mmd2(a, _normalized_weights(A), b, spec)


def _grad_wrt_b(a, w, b, spec):
    # cross term: -2/P * sum_i w_i k(a_i, b_j); dk(a, b)/db = sum_s k_s (a - b) / s^2
    p = b.shape[0]
    _, s_ab = _gram_and_slope(a, b, spec)
    coef_ab = (-2.0 / p) * w[:, None] * s_ab  # (Q, P)
    g = coef_ab.T @ a - coef_ab.sum(axis=0)[:, None] * b
    # self term: 1/P^2 sum_jj' k(b_j, b_j'); b_j appears in both slots
    _, s_bb = _gram_and_slope(b, b, spec)
    coef_bb = (2.0 / (p * p)) * s_bb
    g += coef_bb @ b - coef_bb.sum(axis=1)[:, None] * b
    return g


def mmd2_grad(X, Y, spec: KernelSpec) -> np.ndarray:
    """Gradient of ``mmd2(X, Y)`` with respect to the rows of ``Y``."""
    x, y = _features(X), _features(Y)
    _check_pair(x, y)
    return _grad_wrt_b(x, np.full(x.shape[0], 1.0 / x.shape[0]), y, spec)


def zs_mmd2_grad(A: WeightedFeatureSet, B, spec: KernelSpec) -> np.ndarray:
    """Gradient of ``zs_mmd2(A, B)`` w.r.t. the rows of ``B``; weights are constants."""
    a, b = A.features, _features(B)
    _check_pair(a, b)
    return _grad_wrt_b(a, _normalized_weights(A), b, spec)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. the logits."""
    logits = _as_matrix(logits)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    n, c = logits.shape
    if labels.shape[0] != n:
        raise ShapeError(f"{labels.shape[0]} labels for {n} rows")
    if np.any(labels < 0) or np.any(labels >= c):
        raise DomainError(f"labels must lie in [0, {c})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(log_norm - z[rows, labels]))
    grad = np.exp(z - log_norm[:, None])
    grad[rows, labels] -= 1.0
    return loss, grad / n
