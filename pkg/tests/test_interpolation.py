import numpy as np
import pytest

from sarcd.interpolation import scaffold_interpolate
from sarcd.types import DepthMap, InsufficientSupportError

from util import random_radar


def test_nodes_are_exact():
    rng = np.random.default_rng(0)
    for _ in range(10):
        vals = random_radar(rng, 20, 20, 25, lo=2.0, hi=60.0)
        if int((vals > 0).sum()) < 3:
            continue
        sparse = DepthMap(vals, "sparse")
        try:
            dense = scaffold_interpolate(sparse)
        except InsufficientSupportError:
            continue  # rare collinear draw
        nodes = vals > 0
        np.testing.assert_array_equal(dense.values[nodes], vals[nodes])


def test_reproduces_affine_field():
    h, w = 24, 24
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    plane = (5.0 + 0.3 * rr + 0.2 * cc).astype(np.float32)
    vals = np.zeros((h, w), dtype=np.float32)
    rng = np.random.default_rng(1)
    idx = rng.choice(h * w, size=40, replace=False)
    vals.flat[idx] = plane.flat[idx]
    # Pin the corners so the hull covers the full grid.
    for r, c in [(0, 0), (0, w - 1), (h - 1, 0), (h - 1, w - 1)]:
        vals[r, c] = plane[r, c]
    dense = scaffold_interpolate(DepthMap(vals, "sparse"))
    assert dense.n_valid() == h * w
    np.testing.assert_allclose(dense.values, plane, rtol=0, atol=1e-4)


def test_outside_hull_stays_invalid():
    vals = np.zeros((16, 16), dtype=np.float32)
    vals[6, 6] = 10.0
    vals[6, 9] = 10.0
    vals[9, 7] = 10.0
    dense = scaffold_interpolate(DepthMap(vals, "sparse"))
    assert dense.values[0, 0] == 0.0
    assert dense.values[15, 15] == 0.0
    assert dense.values[7, 7] == pytest.approx(10.0)


def test_constant_supports_give_constant_interior():
    vals = np.zeros((12, 12), dtype=np.float32)
    for r, c in [(1, 1), (1, 10), (10, 1), (10, 10), (5, 6)]:
        vals[r, c] = 7.5
    dense = scaffold_interpolate(DepthMap(vals, "sparse"))
    interior = dense.values[2:9, 2:9]
    np.testing.assert_allclose(interior, 7.5, atol=1e-5)


def test_insufficient_support_errors():
    vals = np.zeros((8, 8), dtype=np.float32)
    vals[2, 2] = 5.0
    with pytest.raises(InsufficientSupportError):
        scaffold_interpolate(DepthMap(vals, "sparse"))
    vals[2, 5] = 6.0
    with pytest.raises(InsufficientSupportError):
        scaffold_interpolate(DepthMap(vals, "sparse"))
    vals[2, 7] = 7.0  # three collinear supports: still degenerate
    with pytest.raises(InsufficientSupportError):
        scaffold_interpolate(DepthMap(vals, "sparse"))


def test_output_is_dense_kind_and_same_shape():
    vals = np.zeros((9, 11), dtype=np.float32)
    vals[1, 1] = 3.0
    vals[1, 9] = 4.0
    vals[7, 5] = 5.0
    dense = scaffold_interpolate(DepthMap(vals, "sparse"))
    assert dense.kind == "dense"
    assert dense.shape == (9, 11)
    assert dense.n_valid() > 3
