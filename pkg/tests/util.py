"""Shared helpers for the test suite."""

import numpy as np

from sarcd import tensor as T


def random_mono(rng, h, w, hole_frac=0.1, lo=1.0, hi=60.0):
    """Random guidance grid with smooth patches and invalid holes."""
    base = rng.uniform(lo, hi, size=(max(1, h // 4), max(1, w // 4)))
    vals = np.asarray(
        np.repeat(np.repeat(base, 4, axis=0), 4, axis=1)[:h, :w], dtype=np.float32
    )
    if vals.shape != (h, w):  # pad when h or w is not a multiple of 4
        pad = np.full((h, w), (lo + hi) / 2, dtype=np.float32)
        pad[: vals.shape[0], : vals.shape[1]] = vals
        vals = pad
    vals += rng.normal(0.0, 0.05, size=(h, w)).astype(np.float32)
    vals = np.abs(vals).astype(np.float32) + np.float32(0.01)
    holes = rng.uniform(size=(h, w)) < hole_frac
    vals[holes] = 0.0
    return vals


def random_radar(rng, h, w, n_points, lo=1.0, hi=60.0):
    """Sparse radar grid with up to n_points valid pixels."""
    vals = np.zeros((h, w), dtype=np.float32)
    n = min(n_points, h * w)
    flat = rng.choice(h * w, size=n, replace=False)
    vals.flat[flat] = rng.uniform(lo, hi, size=n).astype(np.float32)
    return vals


def max_rel_err(a, b, floor=1e-8):
    """Relative max-norm gap between two arrays or scalars."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0), floor)
    return float(np.max(np.abs(a - b), initial=0.0) / scale)


# --- finite-difference gradient checking -------------------------------
#
# Each entry maps an op name to (make_inputs, apply). Input generators
# keep a margin around non-smooth points (relu/abs/clamp kinks, pooling
# ties) so central differences stay on one side of every kink.

KINK_MARGIN = 0.05


def _smooth(rng, *shape):
    return rng.uniform(-2.0, 2.0, size=shape).astype(np.float32)


def _away_from_zero(rng, *shape):
    mag = rng.uniform(KINK_MARGIN * 2, 2.0, size=shape)
    sign = rng.choice([-1.0, 1.0], size=shape)
    return (mag * sign).astype(np.float32)


def _away_from(rng, points, *shape):
    vals = rng.uniform(-2.0, 2.0, size=shape)
    for p in points:
        near = np.abs(vals - p) < KINK_MARGIN * 2
        side = np.where(vals[near] >= p, 1.0, -1.0)
        vals[near] = p + side * KINK_MARGIN * 2
    return vals.astype(np.float32)


def _unique_spatial_max(rng, h, w, c):
    vals = rng.uniform(-2.0, 2.0, size=(h, w, c)).astype(np.float32)
    flat = vals.reshape(-1, c)
    top = flat.argmax(axis=0)
    flat[top, np.arange(c)] += np.float32(0.3)  # widen the winner's lead
    return flat.reshape(h, w, c)


def _unique_channel_max(rng, h, w, c):
    vals = rng.uniform(-2.0, 2.0, size=(h, w, c)).astype(np.float32)
    idx = vals.argmax(axis=2)
    np.put_along_axis(
        vals, idx[..., None], np.take_along_axis(vals, idx[..., None], 2) + 0.3, 2
    )
    return vals


OP_CHECKS = {
    "add": (lambda r: [_smooth(r, 4, 5), _smooth(r, 4, 5)], lambda a, b: T.add(a, b)),
    "sub": (lambda r: [_smooth(r, 4, 5), _smooth(r, 4, 5)], lambda a, b: T.sub(a, b)),
    "multiply": (
        lambda r: [_smooth(r, 3, 4, 2), _smooth(r, 3, 4, 2)],
        lambda a, b: T.multiply(a, b),
    ),
    "scale": (lambda r: [_smooth(r, 4, 4)], lambda a: T.scale(a, -1.7)),
    "absolute": (lambda r: [_away_from_zero(r, 4, 5)], lambda a: T.absolute(a)),
    "relu": (lambda r: [_away_from_zero(r, 5, 4)], lambda a: T.relu(a)),
    "sigmoid": (lambda r: [_smooth(r, 4, 5)], lambda a: T.sigmoid(a)),
    "log": (
        lambda r: [r.uniform(0.4, 3.0, size=(4, 4)).astype(np.float32)],
        lambda a: T.log(a),
    ),
    "clamp": (
        lambda r: [_away_from(r, (-1.0, 1.0), 5, 5)],
        lambda a: T.clamp(a, -1.0, 1.0),
    ),
    "concat": (
        lambda r: [_smooth(r, 3, 4, 2), _smooth(r, 3, 4, 3)],
        lambda a, b: T.concat(a, b),
    ),
    "reshape": (lambda r: [_smooth(r, 4, 6)], lambda a: T.reshape(a, (2, 12))),
    "transpose": (lambda r: [_smooth(r, 3, 5)], lambda a: T.transpose(a)),
    "matmul": (
        lambda r: [_smooth(r, 4, 3), _smooth(r, 3, 5)],
        lambda a, b: T.matmul(a, b),
    ),
    "softmax": (lambda r: [_smooth(r, 5, 4)], lambda a: T.softmax(a)),
    "sum_all": (lambda r: [_smooth(r, 4, 5)], lambda a: T.sum_all(a)),
    "conv2d": (
        lambda r: [
            _smooth(r, 6, 5, 3),
            _smooth(r, 3, 3, 3, 4) * np.float32(0.4),
            _smooth(r, 4),
        ],
        lambda x, k, b: T.conv2d(x, k, b),
    ),
    "conv2d_nobias": (
        lambda r: [_smooth(r, 5, 6, 2), _smooth(r, 1, 3, 2, 3) * np.float32(0.4)],
        lambda x, k: T.conv2d(x, k),
    ),
    "global_avg_pool": (
        lambda r: [_smooth(r, 6, 6, 3)],
        lambda a: T.global_avg_pool(a),
    ),
    "global_max_pool": (
        lambda r: [_unique_spatial_max(r, 5, 6, 3)],
        lambda a: T.global_max_pool(a),
    ),
    "channel_mean": (lambda r: [_smooth(r, 5, 4, 6)], lambda a: T.channel_mean(a)),
    "channel_max": (
        lambda r: [_unique_channel_max(r, 4, 5, 6)],
        lambda a: T.channel_max(a),
    ),
    "broadcast_mul": (
        lambda r: [_smooth(r, 1, 1, 4), _smooth(r, 5, 4, 4)],
        lambda v, x: T.broadcast_mul(v, x),
    ),
    "broadcast_channels": (
        lambda r: [_smooth(r, 4, 5, 1)],
        lambda a: T.broadcast_channels(a, 6),
    ),
    "downsample2": (lambda r: [_smooth(r, 6, 8, 3)], lambda a: T.downsample2(a)),
    "upsample2": (lambda r: [_smooth(r, 4, 3, 2)], lambda a: T.upsample2(a)),
}


def fd_check_graph(make_inputs, apply_fn, seed, h=1e-3, min_grad=0.0, attempts=1):
    """Max relative error between backward() and central differences.

    Builds loss = sum(apply(inputs) * probe) with a fixed random probe,
    runs the tape backward, then checks every input's gradient against
    finite differences of the same scalar.

    Comparisons run on a float32 graph, so a gradient smaller than the
    rounding noise of the loss cannot be resolved by any step size.
    ``min_grad`` sets the smallest per-input gradient norm accepted as
    a conditioned evaluation point; draws below it are retried (up to
    ``attempts``) with fresh inputs and probe from the same stream.
    """
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        arrays = make_inputs(rng)
        probe_shape = apply_fn(*[T.Tensor(a) for a in arrays]).shape
        probe = rng.uniform(0.5, 1.5, size=probe_shape).astype(np.float32)
        probe_t = T.Tensor(probe)

        tensors = [T.Tensor(a, requires_grad=True) for a in arrays]
        with T.Tape() as tape:
            out = apply_fn(*tensors)
            loss = T.sum_all(T.multiply(out, probe_t))
        T.backward(tape, loss)
        norms = [
            np.max(np.abs(t.grad)) if t.grad is not None else 0.0 for t in tensors
        ]
        if min(norms) >= min_grad:
            break
    else:
        raise AssertionError(
            f"no conditioned draw in {attempts} attempts (seed {seed})"
        )

    worst = 0.0
    for i, arr in enumerate(arrays):
        def scalar(xt, i=i):
            subst = [T.Tensor(a) for a in arrays]
            subst[i] = xt
            o = apply_fn(*subst)
            return float(np.sum(o.data.astype(np.float64) * probe))

        numeric = T.finite_diff_grad(scalar, T.Tensor(arr), h=h)
        analytic = tensors[i].grad
        assert analytic is not None, f"no gradient reached input {i}"
        worst = max(worst, max_rel_err(analytic, numeric))
    return worst


def fd_check_op(name, seed, h=1e-3):
    make_inputs, apply_fn = OP_CHECKS[name]
    return fd_check_graph(make_inputs, apply_fn, seed, h=h)


def _saeb_kink_margins(f_m, f_r, w1, b1, w2, b2):
    """Conditioning report for a fusion-block evaluation point.

    Returns (pool_gap, relu_margin, channel_gap, gate, alive, logit_max)
    in float64: the spatial max-pool gap per pooled channel, the relu
    pre-activation magnitudes, the per-pixel channel-max gap of the
    gated radar features, the channel gate itself, whether every hidden
    unit fires on at least one pooled branch (a unit dead on both
    branches carries no usable gradient signal for its weights), and
    the largest gate logit (saturated sigmoids likewise flatten the
    attention path below float32 resolution)."""
    cat = np.concatenate([f_m, f_r], axis=2).astype(np.float64)
    flat = cat.reshape(-1, cat.shape[2])
    srt = np.sort(flat, axis=0)
    pool_gap = float(np.min(srt[-1] - srt[-2]))
    pre = np.stack(
        [
            flat.mean(axis=0) @ w1 + b1.ravel(),
            flat.max(axis=0) @ w1 + b1.ravel(),
        ]
    )
    relu_margin = float(np.min(np.abs(pre)))
    alive = bool(np.all((pre > 0.06).any(axis=0)))
    hid = np.maximum(pre, 0.0)
    logits = (hid[0] @ w2 + b2.ravel()) + (hid[1] @ w2 + b2.ravel())
    logit_max = float(np.max(np.abs(logits)))
    gate = 1.0 / (1.0 + np.exp(-logits))
    f_c = gate[None, None, :] * f_r.astype(np.float64)
    ch = np.sort(f_c.reshape(-1, f_c.shape[2]), axis=1)
    channel_gap = float(np.min(ch[:, -1] - ch[:, -2]))
    return pool_gap, relu_margin, channel_gap, gate, alive, logit_max


def fd_check_saeb(seed, h=1e-2):
    """FD-check saeb_forward gradients wrt inputs and every weight.

    The block composes three non-smooth ops (spatial max-pool, relu,
    channel max), so inputs are nudged until every kink sits farther
    from the evaluation point than the probe step can reach, then the
    margins are re-verified before the draw is accepted.  The larger
    default step and the gradient floor both answer float32 rounding:
    the attention path runs through two sigmoids, and its gradients
    must stay above the noise of the loss to be comparable at all."""
    from sarcd.blocks import SaebWeights, saeb_forward

    c_m, c_r, hidden, k = 3, 3, 2, 3

    def make(rng):
        sc = np.float32(0.4)  # keep activations mild
        for _ in range(64):
            f_m = _smooth(rng, 6, 4, c_m)
            f_r = _smooth(rng, 6, 4, c_r)
            w1 = _smooth(rng, c_m + c_r, hidden) * sc
            b1 = _smooth(rng, 1, hidden) * sc
            w2 = _smooth(rng, hidden, c_r) * sc
            b2 = _smooth(rng, 1, c_r) * sc
            sa_k = _smooth(rng, k, k, 2, 1) * sc
            sa_b = _smooth(rng, 1) * sc
            fu_k = _smooth(rng, 1, 1, c_r + c_m, c_r) * sc
            fu_b = _smooth(rng, c_r) * sc

            # Give each pooled channel an unambiguous spatial argmax.
            cat = np.concatenate([f_m, f_r], axis=2)
            flat = cat.reshape(-1, cat.shape[2])
            for ch in range(cat.shape[2]):
                r, cc = divmod(int(np.argmax(flat[:, ch])), cat.shape[1])
                if ch < c_m:
                    f_m[r, cc, ch] += np.float32(0.3)
                else:
                    f_r[r, cc, ch - c_m] += np.float32(0.3)

            # Shift the hidden bias until no pre-activation straddles
            # the relu kink on either pooled branch and every hidden
            # unit fires somewhere.
            for delta in np.linspace(0.0, 0.6, 25):
                done = False
                for s in (delta, -delta):
                    cand = (b1 + np.float32(s)).astype(np.float32)
                    rep = _saeb_kink_margins(f_m, f_r, w1, cand, w2, b2)
                    if rep[1] > 0.06 and rep[4]:
                        b1, done = cand, True
                        break
                if done:
                    break

            # Separate the top two gated channels at every pixel.
            gate = _saeb_kink_margins(f_m, f_r, w1, b1, w2, b2)[3]
            f_c = gate[None, None, :] * f_r.astype(np.float64)
            for r in range(f_c.shape[0]):
                for cc in range(f_c.shape[1]):
                    row = np.sort(f_c[r, cc])
                    j = int(np.argmax(f_c[r, cc]))
                    gap = row[-1] - row[-2]
                    if gap < 0.12:
                        f_r[r, cc, j] += np.float32((0.15 - gap) / gate[j])

            pool_gap, relu_m, ch_gap, _, alive, logit_max = _saeb_kink_margins(
                f_m, f_r, w1, b1, w2, b2
            )
            if (
                pool_gap > 0.1
                and relu_m > 0.05
                and ch_gap > 0.08
                and alive
                and logit_max < 2.5
            ):
                return [f_m, f_r, w1, b1, w2, b2, sa_k, sa_b, fu_k, fu_b]
        raise AssertionError("no kink-safe fusion-block draw found")

    def apply_fn(f_m, f_r, *ws):
        return saeb_forward(f_m, f_r, SaebWeights(*ws))

    return fd_check_graph(make, apply_fn, seed, h=h, min_grad=0.05, attempts=32)


def fd_check_afb(seed, h=7e-3):
    """FD-check afb_forward (one module) wrt both streams and weights.

    The radar-side cross-attention of the final module never reaches
    the returned image stream, so those three matrices are held as
    constants; every weight with a live path to the output is checked."""
    from sarcd.blocks import AfbModuleWeights, AfbWeights, AttentionWeights, afb_forward

    c = 3
    state = {}

    def make(rng):
        sc = np.float32(0.5)
        arrays = [_smooth(rng, 4, 2, c), _smooth(rng, 4, 2, c)]
        arrays.extend(_smooth(rng, c, c) * sc for _ in range(9))
        state["dead"] = [_smooth(rng, c, c) * sc for _ in range(3)]
        return arrays

    def apply_fn(f_i, f_r, *ws):
        from sarcd.tensor import Tensor

        module = AfbModuleWeights(
            img_self=AttentionWeights(*ws[0:3]),
            rad_self=AttentionWeights(*ws[3:6]),
            img_cross=AttentionWeights(*ws[6:9]),
            rad_cross=AttentionWeights(*[Tensor(a) for a in state["dead"]]),
        )
        return afb_forward(f_i, f_r, AfbWeights([module]))

    return fd_check_graph(make, apply_fn, seed, h=h, min_grad=0.05, attempts=32)
