"""Slow, obviously-correct reference implementations.

Everything here is written as plain loops over pixels with float64
arithmetic and no shared state, so the fast vectorized / compiled paths
can be checked against it bit for bit (integer decisions) or to tight
tolerances (accumulated sums). Nothing in this module is meant to be
fast; keep inputs small.
"""

from __future__ import annotations

from collections import deque

import numpy as np

_OFFSETS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_OFFSETS_8 = _OFFSETS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def oracle_grow_region(mono, seed, tau1, max_radius, connectivity=4):
    """Breadth-first region growing from one seed on the guidance grid.

    Returns the set of (row, col) pixels connected to ``seed`` through
    pixels p with mono[p] > 0 and |mono[p] - mono[seed]| < tau1, never
    leaving the Chebyshev ball of radius ``max_radius`` around the seed.
    """
    mono = np.asarray(mono)
    h, w = mono.shape
    r0, c0 = seed
    m0 = float(mono[r0, c0])
    if m0 <= 0.0:
        return set()
    offsets = _OFFSETS_4 if connectivity == 4 else _OFFSETS_8
    lo_r, hi_r = max(0, r0 - max_radius), min(h - 1, r0 + max_radius)
    lo_c, hi_c = max(0, c0 - max_radius), min(w - 1, c0 + max_radius)
    region = {(r0, c0)}
    queue = deque([(r0, c0)])
    while queue:
        ur, uc = queue.popleft()
        for dr, dc in offsets:
            vr, vc = ur + dr, uc + dc
            if vr < lo_r or vr > hi_r or vc < lo_c or vc > hi_c:
                continue
            if (vr, vc) in region:
                continue
            m = float(mono[vr, vc])
            if m <= 0.0:
                continue
            if abs(m - m0) >= tau1:
                continue
            region.add((vr, vc))
            queue.append((vr, vc))
    return region


def oracle_dilate(radar, mono, tau1, max_radius, connectivity=4, seed_order=None):
    """Per-seed region growing plus explicit per-pixel merge.

    ``seed_order`` overrides the order in which radar pixels are
    processed (default row-major); the merge rule is a total order per
    pixel, so the result must not depend on it. Returns a dict of
    result grids and counters.
    """
    radar = np.asarray(radar)
    mono = np.asarray(mono)
    h, w = radar.shape
    if seed_order is None:
        seed_order = [tuple(rc) for rc in np.argwhere(radar > 0.0)]
    claims = {}
    contested = set()
    n_grown = 0
    n_skipped = 0
    for (sr, sc) in seed_order:
        m0 = float(mono[sr, sc])
        if m0 <= 0.0:
            n_skipped += 1
            continue
        n_grown += 1
        depth = float(radar[sr, sc])
        region = oracle_grow_region(mono, (sr, sc), tau1, max_radius, connectivity)
        for (r, c) in region:
            cost = abs(float(mono[r, c]) - m0)
            # Lexicographic key == the merge rule: lowest guidance gap,
            # then smallest radar depth, then smallest (row, col) seed.
            key = (cost, depth, sr, sc, m0)
            prev = claims.get((r, c))
            if prev is None:
                claims[(r, c)] = key
            else:
                contested.add((r, c))
                if key[:4] < prev[:4]:
                    claims[(r, c)] = key
    out_depth = np.zeros((h, w), dtype=np.float32)
    member = np.zeros((h, w), dtype=bool)
    seed_row = np.full((h, w), -1, dtype=np.int32)
    seed_col = np.full((h, w), -1, dtype=np.int32)
    seed_mono = np.zeros((h, w), dtype=np.float32)
    contested_mask = np.zeros((h, w), dtype=bool)
    for (r, c), (cost, depth, sr, sc, m0) in claims.items():
        member[r, c] = True
        out_depth[r, c] = np.float32(depth)
        seed_row[r, c] = sr
        seed_col[r, c] = sc
        seed_mono[r, c] = np.float32(m0)
    for (r, c) in contested:
        contested_mask[r, c] = True
    return {
        "depth": out_depth,
        "member": member,
        "seed_row": seed_row,
        "seed_col": seed_col,
        "seed_mono": seed_mono,
        "contested": contested_mask,
        "n_grown": n_grown,
        "n_skipped": n_skipped,
        "n_contested": len(contested),
    }


def oracle_confidence_gt(ddr, dint, tau2):
    """Scalar-loop confidence ground truth.

    A pixel gets confidence 1 when the interpolated target agrees with
    the dilated radar depth within tau2 (inclusive), 0 when it
    disagrees; pixels without a target are dropped from validity.
    """
    ddr = np.asarray(ddr)
    dint = np.asarray(dint)
    h, w = ddr.shape
    conf = np.zeros((h, w), dtype=np.float32)
    valid = np.zeros((h, w), dtype=bool)
    n_dropped = 0
    for r in range(h):
        for c in range(w):
            d = float(ddr[r, c])
            if d <= 0.0:
                continue
            t = float(dint[r, c])
            if t <= 0.0:
                n_dropped += 1
                continue
            valid[r, c] = True
            conf[r, c] = 1.0 if abs(t - d) <= tau2 else 0.0
    return conf, valid, n_dropped


def oracle_bce(pred, target, validity, eps=1e-7):
    """Scalar-loop binary cross-entropy over the validity mask."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    validity = np.asarray(validity)
    total = 0.0
    count = 0
    for r in range(pred.shape[0]):
        for c in range(pred.shape[1]):
            if not validity[r, c]:
                continue
            p = min(max(float(pred[r, c]), eps), 1.0 - eps)
            t = float(target[r, c])
            total += t * np.log(p) + (1.0 - t) * np.log(1.0 - p)
            count += 1
    return -total / count


def oracle_depth_loss(dhat, dacc, dint, lam):
    """Scalar-loop two-term L1 depth loss."""
    dhat = np.asarray(dhat)
    dacc = np.asarray(dacc)
    dint = np.asarray(dint)
    sum_acc = 0.0
    n_acc = 0
    sum_int = 0.0
    n_int = 0
    for r in range(dhat.shape[0]):
        for c in range(dhat.shape[1]):
            p = float(dhat[r, c])
            a = float(dacc[r, c])
            if a > 0.0:
                sum_acc += abs(a - p)
                n_acc += 1
            t = float(dint[r, c])
            if t > 0.0:
                sum_int += abs(t - p)
                n_int += 1
    return sum_acc / n_acc + lam * sum_int / n_int


def oracle_mae_rmse(pred, gt, max_range):
    """Scalar-loop MAE / RMSE in millimeters over in-range pixels.

    A pixel counts when both grids are valid there and the ground-truth
    depth lies in (0, max_range].
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    abs_sum = 0.0
    sq_sum = 0.0
    count = 0
    for r in range(pred.shape[0]):
        for c in range(pred.shape[1]):
            g = float(gt[r, c])
            p = float(pred[r, c])
            if g <= 0.0 or g > max_range or p <= 0.0:
                continue
            err_mm = (p - g) * 1000.0
            abs_sum += abs(err_mm)
            sq_sum += err_mm * err_mm
            count += 1
    if count == 0:
        return float("nan"), float("nan"), 0
    return abs_sum / count, np.sqrt(sq_sum / count), count
