"""Scaffolding: densify a sparse depth map by triangulated interpolation.

Valid pixels become nodes of a Delaunay triangulation over (row, col)
coordinates; every pixel inside the convex hull gets the barycentric
blend of its triangle's corner depths. Pixels outside the hull stay
invalid. Nodes keep their exact input value (overwritten after the
blend, so no interpolation rounding can touch them).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .types import DepthMap, InsufficientSupportError


def scaffold_interpolate(sparse: DepthMap) -> DepthMap:
    """Interpolate a sparse map across the convex hull of its supports.

    Raises InsufficientSupportError when fewer than three valid pixels
    exist or when they are collinear (no triangulation exists).
    """
    vals = sparse.values
    nodes = np.argwhere(vals > 0.0)
    if nodes.shape[0] < 3:
        raise InsufficientSupportError(
            f"need at least 3 support pixels, got {nodes.shape[0]}"
        )
    try:
        tri = Delaunay(nodes.astype(np.float64))
    except QhullError as exc:
        raise InsufficientSupportError(f"degenerate support geometry: {exc}") from exc

    h, w = vals.shape
    grid_r, grid_c = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    queries = np.stack([grid_r.ravel(), grid_c.ravel()], axis=1).astype(np.float64)
    simplex = tri.find_simplex(queries)
    inside = simplex >= 0

    out = np.zeros(h * w, dtype=np.float32)
    if np.any(inside):
        sidx = simplex[inside]
        transform = tri.transform[sidx]  # (m, 3, 2): inverse map + offset row
        delta = queries[inside] - transform[:, 2, :]
        bary01 = np.einsum("mij,mj->mi", transform[:, :2, :], delta)
        weights = np.concatenate(
            [bary01, 1.0 - bary01.sum(axis=1, keepdims=True)], axis=1
        )
        corner_rows = nodes[tri.simplices[sidx], 0]
        corner_cols = nodes[tri.simplices[sidx], 1]
        corner_depths = vals[corner_rows, corner_cols].astype(np.float64)
        blended = np.einsum("mi,mi->m", weights, corner_depths)
        out[inside] = np.maximum(blended, 0.0).astype(np.float32)
    out = out.reshape(h, w)
    node_r, node_c = nodes[:, 0], nodes[:, 1]
    out[node_r, node_c] = vals[node_r, node_c]  # nodes are exact by decree
    return DepthMap(out, "dense")
