import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import central_diff, rel_err
from zsmmd.errors import DomainError, ShapeError
from zsmmd.losses import (FeatureSet, KernelSpec, WeightedFeatureSet, kernel_eval, mmd2, mmd2_grad,
                          softmax_cross_entropy, zs_mmd2, zs_mmd2_grad)
from zsmmd.tensor import make_rng


def naive_kernel(bw, u, v):
    d2 = sum((a - b) ** 2 for a, b in zip(u, v))
    return sum(math.exp(-d2 / (2 * s * s)) for s in bw)


def naive_zs_mmd2(bw, a, c, b):
    """Triple-sum transcription of the weighted estimator with scalar loops."""
    q, p = len(a), len(b)
    sc = sum(c)
    t1 = sum(c[i] * c[j] * naive_kernel(bw, a[i], a[j]) for i in range(q) for j in range(q)) / sc**2
    t2 = sum(c[i] * naive_kernel(bw, a[i], b[j]) for i in range(q) for j in range(p)) * 2 / (p * sc)
    t3 = sum(naive_kernel(bw, b[i], b[j]) for i in range(p) for j in range(p)) / p**2
    return t1 - t2 + t3


def naive_mmd2(bw, x, y):
    return naive_zs_mmd2(bw, x, [1.0] * len(x), y)


def test_kernel_zero_distance():
    spec = KernelSpec((1.0, 2.0, 3.0))
    assert kernel_eval(spec, [1.0, -2.0], [1.0, -2.0]) == 3.0


def test_kernel_single_term():
    assert kernel_eval(KernelSpec((1.0,)), [0.0], [2.0]) == pytest.approx(0.1353352832366127, abs=1e-15)


def test_kernel_symmetric(rng):
    spec = KernelSpec((0.5, 2.0))
    for _ in range(20):
        u, v = rng.standard_normal(3), rng.standard_normal(3)
        assert kernel_eval(spec, u, v) == kernel_eval(spec, v, u)
        assert 0 < kernel_eval(spec, u, v) <= 2


def test_kernel_errors():
    with pytest.raises(ShapeError):
        kernel_eval(KernelSpec((1.0,)), [0.0], [0.0, 1.0])
    with pytest.raises(DomainError):
        KernelSpec(())
    with pytest.raises(DomainError):
        KernelSpec((1.0, -2.0))


def test_mmd2_identical_sets(rng):
    x = rng.standard_normal((5, 3))
    assert abs(mmd2(x, x.copy(), KernelSpec())) <= 1e-12


def test_mmd2_single_points():
    # k(0,0) - 2k(0,2) + k(2,2) = 2 - 2e^-2
    assert mmd2([[0.0]], [[2.0]], KernelSpec((1.0,))) == pytest.approx(1.7293294335267746, abs=1e-12)


def test_mmd2_matches_double_loop(rng):
    bw = (0.7, 1.3)
    x, y = rng.standard_normal((3, 2)), rng.standard_normal((4, 2))
    assert mmd2(x, y, KernelSpec(bw)) == pytest.approx(naive_mmd2(bw, x.tolist(), y.tolist()), abs=1e-12)


def test_mmd2_accepts_feature_sets(rng):
    x, y = rng.standard_normal((3, 2)), rng.standard_normal((2, 2))
    assert mmd2(FeatureSet(x), FeatureSet(y, origin="generated"), KernelSpec()) == mmd2(x, y, KernelSpec())


def test_mmd2_errors():
    with pytest.raises(DomainError):
        mmd2(np.zeros((0, 2)), np.zeros((1, 2)), KernelSpec())
    with pytest.raises(ShapeError):
        mmd2(np.zeros((1, 2)), np.zeros((1, 3)), KernelSpec())


def test_zs_mmd2_three_term_example():
    a, c, b = [[0.0], [1.0]], [0.9, 0.5], [[0.0]]
    spec = KernelSpec((1.0,))
    # hand expansion with sum(c) = 1.4, P = 1
    e = math.exp(-0.5)
    t1 = (0.81 * 1 + 2 * 0.45 * e + 0.25 * 1) / 1.4**2
    t2 = 2 * (0.9 * 1 + 0.5 * e) / 1.4
    expected = t1 - t2 + 1.0
    got = zs_mmd2(WeightedFeatureSet(a, c), b, spec)
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(naive_zs_mmd2((1.0,), a, c, b), abs=1e-12)


def test_zs_mmd2_uniform_weights_equal_mmd2(rng):
    spec = KernelSpec((0.5, 1.0, 4.0))
    a, b = rng.standard_normal((5, 3)), rng.standard_normal((4, 3))
    assert zs_mmd2(WeightedFeatureSet(a, np.ones(5)), b, spec) == mmd2(a, b, spec)


def test_zs_mmd2_identical_sets_zero(rng):
    a = rng.standard_normal((4, 2))
    assert abs(zs_mmd2(WeightedFeatureSet(a, np.full(4, 0.6)), a.copy(), KernelSpec())) <= 1e-12


def test_zs_mmd2_domain_errors():
    with pytest.raises(DomainError):
        zs_mmd2(WeightedFeatureSet([[0.0]], [0.0]), [[1.0]], KernelSpec())
    with pytest.raises(DomainError):
        zs_mmd2(WeightedFeatureSet.empty(1), [[1.0]], KernelSpec())


def _weighted(seed, q, p, d):
    rng = make_rng(seed)
    a = rng.standard_normal((q, d))
    c = rng.uniform(0.05, 1.0, size=q)
    b = rng.standard_normal((p, d))
    bw = tuple(rng.uniform(0.3, 3.0, size=int(rng.integers(1, 4))))
    return WeightedFeatureSet(a, c), b, KernelSpec(bw)


def test_zs_mmd2_grad_finite_differences():
    A, b, spec = _weighted(11, 3, 4, 2)
    fd = central_diff(lambda: zs_mmd2(A, b, spec), b)
    assert rel_err(zs_mmd2_grad(A, b, spec), fd) <= 1e-4


def test_zs_mmd2_grad_stationary_at_match(rng):
    a = rng.standard_normal((4, 3))
    g = zs_mmd2_grad(WeightedFeatureSet(a, np.full(4, 0.8)), a.copy(), KernelSpec((1.0, 2.0)))
    assert np.max(np.abs(g)) <= 1e-12


def test_zs_mmd2_grad_weight_scale_invariant():
    A, b, spec = _weighted(5, 4, 3, 2)
    scaled = WeightedFeatureSet(A.features, A.weights * 0.37)
    np.testing.assert_allclose(zs_mmd2_grad(scaled, b, spec), zs_mmd2_grad(A, b, spec), rtol=0, atol=1e-12)


def test_mmd2_grad_reduces_to_weighted(rng):
    x, y = rng.standard_normal((5, 2)), rng.standard_normal((3, 2))
    spec = KernelSpec((0.5, 1.5))
    np.testing.assert_allclose(mmd2_grad(x, y, spec), zs_mmd2_grad(WeightedFeatureSet(x, np.ones(5)), y, spec),
                               rtol=0, atol=1e-12)


def test_mmd2_grad_finite_differences(rng):
    x, y = rng.standard_normal((4, 3)), rng.standard_normal((5, 3))
    spec = KernelSpec((0.8, 2.0))
    assert rel_err(mmd2_grad(x, y, spec), central_diff(lambda: mmd2(x, y, spec), y)) <= 1e-4


def test_mmd2_grad_zero_when_equal(rng):
    x = rng.standard_normal((3, 2))
    assert np.max(np.abs(mmd2_grad(x, x.copy(), KernelSpec()))) <= 1e-12


instances = st.builds(
    lambda seed, q, p, d: _weighted(seed, q, p, d),
    st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8), st.integers(1, 4),
)


@settings(max_examples=200, deadline=None)
@given(inst=instances)
def test_estimator_properties(inst):
    A, b, spec = inst
    ones = WeightedFeatureSet(A.features, np.ones(len(A)))
    plain = mmd2(A.features, b, spec)
    assert abs(zs_mmd2(ones, b, spec) - plain) <= 1e-12
    assert plain >= -1e-12
    weighted = zs_mmd2(A, b, spec)
    assert weighted >= -1e-12
    rescaled = WeightedFeatureSet(A.features, A.weights * 3.5)
    assert abs(zs_mmd2(rescaled, b, spec) - weighted) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(inst=instances, perm_seed=st.integers(0, 1000))
def test_permutation_invariance(inst, perm_seed):
    A, b, spec = inst
    rng = make_rng(perm_seed)
    pa, pb = rng.permutation(len(A)), rng.permutation(b.shape[0])
    shuffled = WeightedFeatureSet(A.features[pa], A.weights[pa])
    assert abs(zs_mmd2(shuffled, b[pb], spec) - zs_mmd2(A, b, spec)) <= 1e-12
    assert abs(mmd2(A.features[pa], b[pb], spec) - mmd2(A.features, b, spec)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_zs_mmd2_matches_naive(seed):
    A, b, spec = _weighted(seed, 3, 3, 2)
    ref = naive_zs_mmd2(spec.bandwidths, A.features.tolist(), A.weights.tolist(), b.tolist())
    assert abs(zs_mmd2(A, b, spec) - ref) <= 1e-12


def test_cross_entropy_confident_correct():
    logits = np.zeros((1, 3))
    logits[0, 2] = 1e6
    loss, _ = softmax_cross_entropy(logits, [2])
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_cross_entropy_uniform():
    loss, grad = softmax_cross_entropy(np.zeros((2, 4)), [0, 3])
    assert loss == pytest.approx(math.log(4), abs=1e-15)
    np.testing.assert_allclose(grad[0], [-0.375, 0.125, 0.125, 0.125])


def test_cross_entropy_gradient(rng):
    logits = rng.standard_normal((3, 5))
    labels = [4, 0, 2]
    _, grad = softmax_cross_entropy(logits, labels)
    fd = central_diff(lambda: softmax_cross_entropy(logits, labels)[0], logits)
    assert rel_err(grad, fd) <= 1e-5


def test_cross_entropy_label_range():
    with pytest.raises(DomainError):
        softmax_cross_entropy(np.zeros((1, 3)), [3])
