import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zsmmd.errors import EmbeddingFileError
from zsmmd.metrics import IGNORE_LABEL
from zsmmd.synthbench import (UNSEEN_ORDER, default_class_names, load_embeddings, make_task, sample_image,
                              split_seen_unseen)
from zsmmd.tensor import make_rng


def test_zero_noise_features_are_class_means():
    task = make_task(4, 3, 5, 0.0, seed=1)
    x = task.sample_features(2, 10, make_rng(0))
    assert (x == task.means[2]).all()
    img = sample_image(task, 6, 6, [0, 1, 3], make_rng(0))
    for c in (0, 1, 3):
        assert (img.features[img.labels == c] == task.means[c]).all()


def test_same_seed_same_task():
    a, b = make_task(5, 4, 6, 0.2, 7), make_task(5, 4, 6, 0.2, 7)
    assert a.embeddings.tobytes() == b.embeddings.tobytes()
    assert a.projection.tobytes() == b.projection.tobytes()


def test_task_construction():
    task = make_task(6, 4, 8, 0.1, 3)
    np.testing.assert_allclose(np.linalg.norm(task.embeddings, axis=1), 1.0)
    np.testing.assert_allclose(task.projection.T @ task.projection, np.eye(4), atol=1e-12)
    assert task.class_names[0] == "background" and task.class_names[1] == "cow"
    with pytest.raises(ValueError):
        make_task(1, 4, 8, 0.1, 3)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_class_means_distinct(seed):
    means = make_task(8, 16, 32, 0.1, seed).means
    dists = [np.linalg.norm(means[i] - means[j]) for i, j in itertools.combinations(range(8), 2)]
    assert min(dists) > 0


def test_empirical_mean_near_projection():
    task = make_task(4, 16, 32, 0.3, 0)
    x = task.sample_features(1, 10_000, make_rng(5))
    bound = 3 * 0.3 / np.sqrt(10_000) * np.sqrt(32)
    assert np.linalg.norm(x.mean(axis=0) - task.projection @ task.embeddings[1]) <= bound


def test_single_class_image_constant():
    task = make_task(3, 2, 4, 0.1, 0)
    img = sample_image(task, 5, 7, [2], make_rng(1))
    assert (img.labels == 2).all()
    assert img.features.shape == (5, 7, 4)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 6), h=st.integers(6, 12), w=st.integers(6, 12))
def test_pixel_counts_match_region_areas(seed, k, h, w):
    task = make_task(8, 3, 4, 0.1, 0)
    rng = make_rng(seed)
    classes = sorted(rng.choice(8, size=k, replace=False).tolist())
    img = sample_image(task, h, w, classes, rng)
    assert sorted(r[0] for r in img.regions) == classes
    for c, r0, r1, c0, c1 in img.regions:
        assert (img.labels == c).sum() == (r1 - r0) * (c1 - c0)
    assert sum((r[2] - r[1]) * (r[4] - r[3]) for r in img.regions) == h * w


def test_boundary_ignore_keeps_feature_classes():
    task = make_task(5, 3, 4, 0.0, 0)
    img = sample_image(task, 8, 8, [0, 1, 2, 3], make_rng(2), boundary_ignore=True)
    assert (img.labels == IGNORE_LABEL).any()
    valid = img.labels != IGNORE_LABEL
    assert set(np.unique(img.labels[valid])) <= {0, 1, 2, 3}
    # every pixel, including ignored ones, carries some class mean
    flat = img.features.reshape(-1, 4)
    assert all(any((row == m).all() for m in task.means[:4]) for row in flat)


def test_sample_image_errors():
    task = make_task(3, 2, 4, 0.1, 0)
    with pytest.raises(ValueError):
        sample_image(task, 4, 4, [], make_rng(0))
    with pytest.raises(ValueError):
        sample_image(task, 4, 4, [5], make_rng(0))


VOC = ["background", "airplane", "bicycle", "bird", "boat", "bottle", "bus", "car", "cat", "chair", "cow",
       "dining-table", "dog", "horse", "motorbike", "person", "potted-plant", "sheep", "sofa", "train", "tv"]


def test_split_first_two():
    seen, unseen = split_seen_unseen(VOC, 2)
    assert unseen == ["cow", "motorbike"]
    assert len(seen) == 19 and "cow" not in seen


def test_split_extremes():
    assert split_seen_unseen(VOC, 0) == (VOC, [])
    seen, unseen = split_seen_unseen(VOC, 10)
    assert unseen == list(UNSEEN_ORDER)
    assert len(seen) == 11
    with pytest.raises(ValueError):
        split_seen_unseen(VOC, 11)


def test_default_names_hold_candidates():
    names = default_class_names(13)
    assert names[1:11] == list(UNSEEN_ORDER)
    assert names[11:] == ["class11", "class12"]


def test_load_embeddings(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("cat 0.1 0.2\n\ndog 1 2\n", encoding="utf-8")
    (emb,) = load_embeddings(p, ["cat"])
    np.testing.assert_array_equal(emb.vector, [0.1, 0.2])
    out = load_embeddings(p, ["dog", "cat"])
    assert [e.class_id for e in out] == [0, 1]


def test_load_embeddings_missing(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("cat 0.1 0.2\n", encoding="utf-8")
    with pytest.raises(EmbeddingFileError, match="dog"):
        load_embeddings(p, ["dog"])


def test_load_embeddings_inconsistent_dimension(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("a 1 2\nb 3 4\nc 5 6 7\n", encoding="utf-8")
    with pytest.raises(EmbeddingFileError, match="line 3"):
        load_embeddings(p, ["a"])


def test_load_embeddings_malformed(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("a 1 x\n", encoding="utf-8")
    with pytest.raises(EmbeddingFileError, match="line 1"):
        load_embeddings(p, ["a"])
