"""Minimal reverse-mode automatic differentiation on float32 arrays.

Values are float32; reductions and matrix products accumulate in
float64 before casting back, which keeps forward evaluation
deterministic and tight enough for finite-difference checks. Recording
happens on an explicit ``Tape``: ops called under an active tape whose
inputs require gradients append (output, inputs, vjp) records, and
``backward`` walks them in reverse. Tensors are treble: data, optional
grad buffer, and the requires_grad flag. Do not mutate ``data`` while a
tape referencing the tensor is alive.

Spatial tensors are channel-last: (h, w, c).
"""

from __future__ import annotations

import numpy as np

from .types import ShapeMismatchError


class Tensor:
    """A float32 array plus an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float32)
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


_TAPE_STACK: list["Tape"] = []


class Tape:
    """Ordered record of operations for one backward pass."""

    def __init__(self):
        self.records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()
        return False


def _record(out: Tensor, inputs: tuple[Tensor, ...], vjp) -> Tensor:
    if _TAPE_STACK and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        _TAPE_STACK[-1].records.append((out, inputs, vjp))
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """Accumulate d loss / d input into ``grad`` of every tracked tensor."""
    if loss.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not depend on any tensor that requires grad")
    loss.grad = np.ones_like(loss.data)
    for out, inputs, vjp in reversed(tape.records):
        if out.grad is None:
            continue
        grads = vjp(out.grad)
        for tensor, grad in zip(inputs, grads):
            if grad is None or not tensor.requires_grad:
                continue
            grad = np.asarray(grad, dtype=np.float32).reshape(tensor.data.shape)
            if tensor.grad is None:
                tensor.grad = grad
            else:
                tensor.grad = tensor.grad + grad


def _need_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: {a.shape} vs {b.shape}")


def _need_ndim(op: str, t: Tensor, ndim: int) -> None:
    if t.data.ndim != ndim:
        raise ShapeMismatchError(f"{op}: expected {ndim}-d input, got shape {t.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _need_same_shape("add", a, b)
    out = Tensor(a.data + b.data)
    return _record(out, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _need_same_shape("sub", a, b)
    out = Tensor(a.data - b.data)
    return _record(out, (a, b), lambda g: (g, -g))


def multiply(a: Tensor, b: Tensor) -> Tensor:
    _need_same_shape("multiply", a, b)
    out = Tensor(a.data * b.data)
    return _record(out, (a, b), lambda g: (g * b.data, g * a.data))


def scale(a: Tensor, s: float) -> Tensor:
    s32 = np.float32(s)
    out = Tensor(a.data * s32)
    return _record(out, (a,), lambda g: (g * s32,))


def absolute(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.data))
    sign = np.sign(a.data)
    return _record(out, (a,), lambda g: (g * sign,))


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, np.float32(0.0)))
    gate = (a.data > 0.0).astype(np.float32)
    return _record(out, (a,), lambda g: (g * gate,))


def sigmoid(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.data.astype(np.float64)))
    out = Tensor(s.astype(np.float32))
    return _record(out, (a,), lambda g: ((g.astype(np.float64) * s * (1.0 - s)).astype(np.float32),))


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise ValueError("log needs strictly positive inputs")
    out = Tensor(np.log(a.data))
    return _record(out, (a,), lambda g: (g / a.data,))


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    if not lo < hi:
        raise ValueError(f"clamp needs lo < hi, got [{lo}, {hi}]")
    out = Tensor(np.clip(a.data, np.float32(lo), np.float32(hi)))
    gate = ((a.data > lo) & (a.data < hi)).astype(np.float32)
    return _record(out, (a,), lambda g: (g * gate,))


def concat(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != b.data.ndim or a.shape[:-1] != b.shape[:-1]:
        raise ShapeMismatchError(f"concat: {a.shape} vs {b.shape}")
    out = Tensor(np.concatenate([a.data, b.data], axis=-1))
    split = a.shape[-1]
    return _record(out, (a, b), lambda g: (g[..., :split], g[..., split:]))


def reshape(a: Tensor, shape: tuple) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    orig = a.data.shape
    return _record(out, (a,), lambda g: (g.reshape(orig),))


def transpose(a: Tensor) -> Tensor:
    _need_ndim("transpose", a, 2)
    out = Tensor(a.data.T.copy())
    return _record(out, (a,), lambda g: (g.T.copy(),))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _need_ndim("matmul", a, 2)
    _need_ndim("matmul", b, 2)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: {a.shape} vs {b.shape}")
    a64 = a.data.astype(np.float64)
    b64 = b.data.astype(np.float64)
    out = Tensor(np.einsum("nk,km->nm", a64, b64, optimize=False).astype(np.float32))

    def vjp(g):
        g64 = g.astype(np.float64)
        ga = np.einsum("nm,km->nk", g64, b64, optimize=False)
        gb = np.einsum("nk,nm->km", a64, g64, optimize=False)
        return ga.astype(np.float32), gb.astype(np.float32)

    return _record(out, (a, b), vjp)


def softmax(a: Tensor) -> Tensor:
    x = a.data.astype(np.float64)
    x = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(x)
    s = e / np.sum(e, axis=-1, keepdims=True)
    out = Tensor(s.astype(np.float32))

    def vjp(g):
        g64 = g.astype(np.float64)
        inner = np.sum(g64 * s, axis=-1, keepdims=True)
        return ((g64 - inner) * s).astype(np.float32),

    return _record(out, (a,), vjp)


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(np.asarray(np.sum(a.data, dtype=np.float64), dtype=np.float32))
    shape = a.data.shape
    return _record(out, (a,), lambda g: (np.full(shape, g, dtype=np.float32),))


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """Stride-1 cross-correlation with zero same-padding.

    x: (h, w, c_in); kernel: (kh, kw, c_in, c_out) with odd kh, kw;
    bias: (c_out,) or None. Accumulates in float64.
    """
    _need_ndim("conv2d", x, 3)
    if kernel.data.ndim != 4:
        raise ShapeMismatchError(f"conv2d: kernel must be 4-d, got {kernel.shape}")
    kh, kw, ci, co = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"conv2d: kernel dims must be odd, got {kh}x{kw}")
    if ci != x.shape[2]:
        raise ShapeMismatchError(f"conv2d: input channels {x.shape[2]} vs kernel {ci}")
    if bias is not None and bias.shape != (co,):
        raise ShapeMismatchError(f"conv2d: bias {bias.shape} vs ({co},)")
    h, w = x.shape[:2]
    ph, pw = kh // 2, kw // 2
    xp = np.zeros((h + kh - 1, w + kw - 1, ci), dtype=np.float64)
    xp[ph : ph + h, pw : pw + w] = x.data
    k64 = kernel.data.astype(np.float64)
    acc = np.zeros((h, w, co), dtype=np.float64)
    for du in range(kh):
        for dv in range(kw):
            acc += np.einsum(
                "hwi,io->hwo", xp[du : du + h, dv : dv + w], k64[du, dv], optimize=False
            )
    if bias is not None:
        acc += bias.data.astype(np.float64)
    out = Tensor(acc.astype(np.float32))

    def vjp(g):
        g64 = g.astype(np.float64)
        gx_pad = np.zeros_like(xp)
        gk = np.zeros_like(k64)
        for du in range(kh):
            for dv in range(kw):
                gx_pad[du : du + h, dv : dv + w] += np.einsum(
                    "hwo,io->hwi", g64, k64[du, dv], optimize=False
                )
                gk[du, dv] = np.einsum(
                    "hwi,hwo->io", xp[du : du + h, dv : dv + w], g64, optimize=False
                )
        gx = gx_pad[ph : ph + h, pw : pw + w].astype(np.float32)
        if bias is None:
            return gx, gk.astype(np.float32)
        return gx, gk.astype(np.float32), g64.sum(axis=(0, 1)).astype(np.float32)

    inputs = (x, kernel) if bias is None else (x, kernel, bias)
    return _record(out, inputs, vjp)


def global_avg_pool(x: Tensor) -> Tensor:
    _need_ndim("global_avg_pool", x, 3)
    h, w, c = x.shape
    mean = np.mean(x.data, axis=(0, 1), keepdims=True, dtype=np.float64)
    out = Tensor(mean.astype(np.float32))

    def vjp(g):
        return (np.broadcast_to(g.astype(np.float64) / (h * w), (h, w, c)).astype(np.float32),)

    return _record(out, (x,), vjp)


def global_max_pool(x: Tensor) -> Tensor:
    """Spatial max per channel; ties route gradient to the first flat index."""
    _need_ndim("global_max_pool", x, 3)
    h, w, c = x.shape
    flat = x.data.reshape(h * w, c)
    idx = np.argmax(flat, axis=0)
    out = Tensor(flat[idx, np.arange(c)].reshape(1, 1, c))

    def vjp(g):
        gx = np.zeros((h * w, c), dtype=np.float32)
        gx[idx, np.arange(c)] = g.reshape(c)
        return (gx.reshape(h, w, c),)

    return _record(out, (x,), vjp)


def channel_mean(x: Tensor) -> Tensor:
    _need_ndim("channel_mean", x, 3)
    c = x.shape[2]
    out = Tensor(np.mean(x.data, axis=2, keepdims=True, dtype=np.float64).astype(np.float32))

    def vjp(g):
        return (np.broadcast_to(g.astype(np.float64) / c, x.shape).astype(np.float32),)

    return _record(out, (x,), vjp)


def channel_max(x: Tensor) -> Tensor:
    """Channel max per pixel; ties route gradient to the first channel."""
    _need_ndim("channel_max", x, 3)
    idx = np.argmax(x.data, axis=2)
    out = Tensor(np.take_along_axis(x.data, idx[..., None], axis=2))

    def vjp(g):
        gx = np.zeros(x.shape, dtype=np.float32)
        np.put_along_axis(gx, idx[..., None], g, axis=2)
        return (gx,)

    return _record(out, (x,), vjp)


def broadcast_mul(vec: Tensor, x: Tensor) -> Tensor:
    """Multiply a (1, 1, c) channel vector into an (h, w, c) grid."""
    _need_ndim("broadcast_mul", x, 3)
    if vec.shape != (1, 1, x.shape[2]):
        raise ShapeMismatchError(f"broadcast_mul: vec {vec.shape} vs (1, 1, {x.shape[2]})")
    out = Tensor(x.data * vec.data)

    def vjp(g):
        g64 = g.astype(np.float64)
        gvec = np.sum(g64 * x.data, axis=(0, 1), keepdims=True).astype(np.float32)
        gx = (g * vec.data).astype(np.float32)
        return gvec, gx

    return _record(out, (vec, x), vjp)


def broadcast_channels(x: Tensor, channels: int) -> Tensor:
    """Repeat an (h, w, 1) grid across ``channels`` channels."""
    _need_ndim("broadcast_channels", x, 3)
    if x.shape[2] != 1:
        raise ShapeMismatchError(f"broadcast_channels: expected (h, w, 1), got {x.shape}")
    out = Tensor(np.repeat(x.data, channels, axis=2))

    def vjp(g):
        return (np.sum(g.astype(np.float64), axis=2, keepdims=True).astype(np.float32),)

    return _record(out, (x,), vjp)


def downsample2(x: Tensor) -> Tensor:
    """Decimate by 2 in both spatial dims (the strided-conv sampling).

    Composed after ``conv2d`` this equals a stride-2 same-padded
    convolution exactly, which is how the toy encoders downscale.
    """
    _need_ndim("downsample2", x, 3)
    h, w, c = x.shape
    if h % 2 != 0 or w % 2 != 0:
        raise ShapeMismatchError(f"downsample2 needs even spatial dims, got {x.shape}")
    out = Tensor(x.data[::2, ::2, :].copy())

    def vjp(g):
        gx = np.zeros((h, w, c), dtype=np.float32)
        gx[::2, ::2, :] = g
        return (gx,)

    return _record(out, (x,), vjp)


def upsample2(x: Tensor) -> Tensor:
    """Nearest-neighbor upsampling by 2 in both spatial dims."""
    _need_ndim("upsample2", x, 3)
    h, w, c = x.shape
    out = Tensor(np.repeat(np.repeat(x.data, 2, axis=0), 2, axis=1))

    def vjp(g):
        g64 = g.astype(np.float64).reshape(h, 2, w, 2, c)
        return (g64.sum(axis=(1, 3)).astype(np.float32),)

    return _record(out, (x,), vjp)


def finite_diff_grad(f, x: Tensor, h: float = 1e-3) -> np.ndarray:
    """Central-difference gradient of a scalar function of one tensor.

    Perturbations are applied in float32, and each difference divides
    by the actually realized float32 step, not the nominal ``h``.
    Returns float64 with the shape of ``x``.
    """
    base = x.data
    grad = np.zeros(base.size, dtype=np.float64)
    for i in range(base.size):
        orig = float(base.flat[i])
        xp = base.copy()
        xp.flat[i] = np.float32(orig + h)
        xm = base.copy()
        xm.flat[i] = np.float32(orig - h)
        step = float(xp.flat[i]) - float(xm.flat[i])
        if step == 0.0:
            raise ValueError(f"step underflow at flat index {i} (value {orig})")
        fp = f(Tensor(xp))
        fm = f(Tensor(xm))
        fp = fp.item() if isinstance(fp, Tensor) else float(fp)
        fm = fm.item() if isinstance(fm, Tensor) else float(fm)
        grad[i] = (fp - fm) / step
    return grad.reshape(base.shape)
