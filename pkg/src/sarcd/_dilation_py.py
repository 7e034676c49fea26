"""Pure-python backend for structure-aware dilation.

Vectorized per seed: the connected component around each radar pixel is
found with a windowed ``scipy.ndimage.label`` call, then merged into the
global result with array comparisons. Used when the compiled kernel is
unavailable; must produce bit-identical results to it.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


def dilate(radar, mono, seeds, tau1, max_radius, connectivity):
    """Grow every seed and merge claims into per-pixel winners.

    Merge order per pixel: smallest |mono - mono(seed)| (float64), then
    smallest radar depth, then smallest (row, col) of the seed. The
    comparisons form a total order, so the outcome is independent of the
    order seeds are processed in.
    """
    h, w = radar.shape
    structure = _STRUCT_4 if connectivity == 4 else _STRUCT_8
    mono64 = mono.astype(np.float64)
    positive = mono > 0.0

    best_cost = np.full((h, w), np.inf, dtype=np.float64)
    depth = np.zeros((h, w), dtype=np.float32)
    seed_row = np.full((h, w), -1, dtype=np.int32)
    seed_col = np.full((h, w), -1, dtype=np.int32)
    seed_mono = np.zeros((h, w), dtype=np.float32)
    member = np.zeros((h, w), dtype=bool)
    contested = np.zeros((h, w), dtype=bool)
    n_grown = 0
    n_skipped = 0

    for sr, sc in seeds:
        m0 = mono[sr, sc]
        if m0 <= 0.0:
            n_skipped += 1
            continue
        n_grown += 1
        d = radar[sr, sc]
        r0, r1 = max(0, sr - max_radius), min(h, sr + max_radius + 1)
        c0, c1 = max(0, sc - max_radius), min(w, sc + max_radius + 1)
        win_cost = np.abs(mono64[r0:r1, c0:c1] - np.float64(m0))
        passable = (win_cost < tau1) & positive[r0:r1, c0:c1]
        labels, _ = ndimage.label(passable, structure=structure)
        comp = labels == labels[sr - r0, sc - c0]

        bc = best_cost[r0:r1, c0:c1]
        bd = depth[r0:r1, c0:c1]
        bsr = seed_row[r0:r1, c0:c1]
        bsc = seed_col[r0:r1, c0:c1]
        contested[r0:r1, c0:c1] |= comp & member[r0:r1, c0:c1]
        tie = comp & (win_cost == bc)
        wins = comp & (
            (win_cost < bc)
            | (tie & (d < bd))
            | (tie & (d == bd) & ((sr < bsr) | ((sr == bsr) & (sc < bsc))))
        )
        bc[wins] = win_cost[wins]
        bd[wins] = d
        bsr[wins] = sr
        bsc[wins] = sc
        seed_mono[r0:r1, c0:c1][wins] = m0
        member[r0:r1, c0:c1] |= comp

    return {
        "depth": depth,
        "member": member,
        "seed_row": seed_row,
        "seed_col": seed_col,
        "seed_mono": seed_mono,
        "contested": contested,
        "n_grown": n_grown,
        "n_skipped": n_skipped,
        "n_contested": int(contested.sum()),
    }
