# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled BFS kernel for structure-aware dilation.

Semantics must match ``_dilation_py.dilate`` exactly: same float64 cost,
same merge rule, same region definition. The python backend is the
fallback, this one is just fast.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def dilate(const cnp.float32_t[:, ::1] radar, const cnp.float32_t[:, ::1] mono,
           const cnp.int32_t[:, ::1] seeds, double tau1, Py_ssize_t max_radius,
           int connectivity):
    cdef Py_ssize_t h = radar.shape[0]
    cdef Py_ssize_t w = radar.shape[1]
    cdef Py_ssize_t n_seeds = seeds.shape[0]

    best_cost_arr = np.full((h, w), np.inf, dtype=np.float64)
    depth_arr = np.zeros((h, w), dtype=np.float32)
    seed_row_arr = np.full((h, w), -1, dtype=np.int32)
    seed_col_arr = np.full((h, w), -1, dtype=np.int32)
    seed_mono_arr = np.zeros((h, w), dtype=np.float32)
    member_arr = np.zeros((h, w), dtype=np.uint8)
    contested_arr = np.zeros((h, w), dtype=np.uint8)
    visited_arr = np.full((h, w), -1, dtype=np.int64)

    cdef double[:, ::1] best_cost = best_cost_arr
    cdef cnp.float32_t[:, ::1] depth = depth_arr
    cdef cnp.int32_t[:, ::1] seed_row = seed_row_arr
    cdef cnp.int32_t[:, ::1] seed_col = seed_col_arr
    cdef cnp.float32_t[:, ::1] seed_mono = seed_mono_arr
    cdef cnp.uint8_t[:, ::1] member = member_arr
    cdef cnp.uint8_t[:, ::1] contested = contested_arr
    cdef cnp.int64_t[:, ::1] visited = visited_arr

    cdef Py_ssize_t side = 2 * max_radius + 1
    cdef Py_ssize_t cap = side * side
    if cap > h * w:
        cap = h * w
    qr_arr = np.empty(cap, dtype=np.int64)
    qc_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] qr = qr_arr
    cdef cnp.int64_t[::1] qc = qc_arr

    cdef int[8] offr
    cdef int[8] offc
    offr[0] = -1; offc[0] = 0
    offr[1] = 1;  offc[1] = 0
    offr[2] = 0;  offc[2] = -1
    offr[3] = 0;  offc[3] = 1
    offr[4] = -1; offc[4] = -1
    offr[5] = -1; offc[5] = 1
    offr[6] = 1;  offc[6] = -1
    offr[7] = 1;  offc[7] = 1
    cdef int n_off = 4 if connectivity == 4 else 8

    cdef Py_ssize_t s, sr, sc, ur, uc, vr, vc
    cdef Py_ssize_t lo_r, hi_r, lo_c, hi_c, head, tail
    cdef int k, win
    cdef cnp.float32_t m0, d
    cdef double m0d, cost
    cdef long n_grown = 0
    cdef long n_skipped = 0

    for s in range(n_seeds):
        sr = seeds[s, 0]
        sc = seeds[s, 1]
        m0 = mono[sr, sc]
        if m0 <= 0.0:
            n_skipped += 1
            continue
        n_grown += 1
        m0d = <double> m0
        d = radar[sr, sc]
        lo_r = sr - max_radius
        if lo_r < 0:
            lo_r = 0
        hi_r = sr + max_radius
        if hi_r > h - 1:
            hi_r = h - 1
        lo_c = sc - max_radius
        if lo_c < 0:
            lo_c = 0
        hi_c = sc + max_radius
        if hi_c > w - 1:
            hi_c = w - 1

        head = 0
        tail = 0
        qr[tail] = sr
        qc[tail] = sc
        tail += 1
        visited[sr, sc] = s

        while head < tail:
            ur = qr[head]
            uc = qc[head]
            head += 1

            # Claim (ur, uc) for this seed under the total-order merge
            # rule: cost, then radar depth, then seed (row, col).
            cost = fabs(<double> mono[ur, uc] - m0d)
            if member[ur, uc]:
                contested[ur, uc] = 1
            win = 0
            if cost < best_cost[ur, uc]:
                win = 1
            elif cost == best_cost[ur, uc]:
                if d < depth[ur, uc]:
                    win = 1
                elif d == depth[ur, uc]:
                    if sr < seed_row[ur, uc] or (sr == seed_row[ur, uc] and sc < seed_col[ur, uc]):
                        win = 1
            if win:
                best_cost[ur, uc] = cost
                depth[ur, uc] = d
                seed_row[ur, uc] = <cnp.int32_t> sr
                seed_col[ur, uc] = <cnp.int32_t> sc
                seed_mono[ur, uc] = m0
            member[ur, uc] = 1

            for k in range(n_off):
                vr = ur + offr[k]
                vc = uc + offc[k]
                if vr < lo_r or vr > hi_r or vc < lo_c or vc > hi_c:
                    continue
                if visited[vr, vc] == s:
                    continue
                if mono[vr, vc] <= 0.0:
                    continue
                if fabs(<double> mono[vr, vc] - m0d) >= tau1:
                    continue
                visited[vr, vc] = s
                qr[tail] = vr
                qc[tail] = vc
                tail += 1

    return {
        "depth": depth_arr,
        "member": member_arr.astype(bool),
        "seed_row": seed_row_arr,
        "seed_col": seed_col_arr,
        "seed_mono": seed_mono_arr,
        "contested": contested_arr.astype(bool),
        "n_grown": int(n_grown),
        "n_skipped": int(n_skipped),
        "n_contested": int(contested_arr.sum()),
    }
