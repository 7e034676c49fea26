"""Structure-aware dilation of sparse radar depth.

Each valid radar pixel seeds a region grown over the monocular depth
map: a pixel joins the region when its monocular depth sits within tau1
of the seed's monocular depth (strict) and it is 4- or 8-connected to
the seed through such pixels, never farther than ``max_radius`` in
Chebyshev distance. Every pixel of the grown region receives the seed's
radar depth. Overlapping regions are resolved per pixel by a total
order (guidance gap, then radar depth, then seed position), which makes
the result independent of seed processing order.

Two backends produce bit-identical results: a compiled BFS kernel and a
pure-python fallback used when the extension is not built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _dilation_py
from .types import DepthMap, InvalidSeedError, ShapeMismatchError, ValidMask

try:
    from . import _dilation_fast
except ImportError:  # extension not built; fallback handles everything
    _dilation_fast = None


def fast_backend_available() -> bool:
    """True when the compiled dilation kernel was built and imports."""
    return _dilation_fast is not None


@dataclass(frozen=True)
class EnhancementParams:
    """Thresholds and limits for the radar enhancement stage.

    tau1: guidance gap (m) for region growing, strict upper bound.
    tau2: agreement gap (m) for confidence ground truth, inclusive.
    tau3: confidence threshold for noise filtering.
    max_radius: Chebyshev growth limit around each seed, pixels.
    connectivity: 4 or 8 neighborhood for region growing.
    align_mono: fit an affine map from monocular to radar depths over
        the seed pixels before growing (off by default).
    """

    tau1: float = 0.2
    tau2: float = 0.4
    tau3: float = 0.5
    max_radius: int = 64
    connectivity: int = 4
    align_mono: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.tau1) and self.tau1 > 0.0):
            raise ValueError(f"tau1 must be finite and > 0, got {self.tau1}")
        if not (np.isfinite(self.tau2) and self.tau2 > 0.0):
            raise ValueError(f"tau2 must be finite and > 0, got {self.tau2}")
        if not (np.isfinite(self.tau3) and 0.0 <= self.tau3 <= 1.0):
            raise ValueError(f"tau3 must lie in [0, 1], got {self.tau3}")
        if int(self.max_radius) != self.max_radius or self.max_radius < 1:
            raise ValueError(f"max_radius must be an integer >= 1, got {self.max_radius}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")


@dataclass(frozen=True)
class RoiLabelMap:
    """Per-pixel record of who claimed what during dilation.

    ``member`` marks the union of all grown regions. Where it is set,
    ``seed_row``/``seed_col`` give the winning seed, ``seed_mono`` its
    guidance depth and ``depth`` its radar depth (identical to the
    dilated output map). Elsewhere the seed indices are -1 and values 0.
    """

    member: np.ndarray
    seed_row: np.ndarray
    seed_col: np.ndarray
    seed_mono: np.ndarray
    depth: np.ndarray
    n_grown: int
    n_skipped: int
    n_contested: int

    def __post_init__(self):
        for name in ("member", "seed_row", "seed_col", "seed_mono", "depth"):
            arr = getattr(self, name)
            arr.setflags(write=False)
            if arr.shape != self.member.shape:
                raise ShapeMismatchError(f"{name} {arr.shape} vs member {self.member.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.member.shape

    def roi_mask(self) -> ValidMask:
        return ValidMask(self.member)

    def n_member(self) -> int:
        return int(np.count_nonzero(self.member))


def fit_mono_alignment(mono: DepthMap, radar: DepthMap) -> tuple[float, float]:
    """Least-squares (scale, offset) mapping mono depths to radar depths.

    Fitted over pixels where both maps are valid. Falls back to the
    identity (1, 0) when fewer than two such pixels exist or the mono
    values there are all equal.
    """
    both = (mono.values > 0.0) & (radar.values > 0.0)
    if int(both.sum()) < 2:
        return 1.0, 0.0
    x = mono.values[both].astype(np.float64)
    y = radar.values[both].astype(np.float64)
    if np.all(x == x[0]):
        return 1.0, 0.0
    a, b = np.polyfit(x, y, 1)
    return float(a), float(b)


def apply_mono_alignment(mono: DepthMap, scale: float, offset: float) -> DepthMap:
    """Apply an affine alignment, keeping invalid pixels invalid.

    Aligned values that land at or below zero become invalid, since a
    non-positive depth carries no usable structure.
    """
    vals = mono.values.astype(np.float64) * scale + offset
    vals = vals.astype(np.float32)
    vals[(mono.values <= 0.0) | (vals <= 0.0)] = 0.0
    return DepthMap(vals, mono.kind)


def grow_roi(
    mono: DepthMap, seed: tuple[int, int], params: EnhancementParams
) -> set[tuple[int, int]]:
    """Region of interest for a single seed, as a set of (row, col).

    Raises InvalidSeedError when the guidance depth at the seed is
    invalid, and ValueError when the seed is out of bounds.
    """
    r0, c0 = int(seed[0]), int(seed[1])
    h, w = mono.shape
    if not (0 <= r0 < h and 0 <= c0 < w):
        raise ValueError(f"seed {(r0, c0)} outside {h}x{w} grid")
    if mono.values[r0, c0] <= 0.0:
        raise InvalidSeedError(f"guidance depth invalid at seed {(r0, c0)}")
    rad = params.max_radius
    rlo, rhi = max(0, r0 - rad), min(h, r0 + rad + 1)
    clo, chi = max(0, c0 - rad), min(w, c0 + rad + 1)
    win = mono.values[rlo:rhi, clo:chi]
    m0 = np.float64(mono.values[r0, c0])
    passable = (np.abs(win.astype(np.float64) - m0) < params.tau1) & (win > 0.0)
    structure = (
        ndimage.generate_binary_structure(2, 1)
        if params.connectivity == 4
        else ndimage.generate_binary_structure(2, 2)
    )
    labels, _ = ndimage.label(passable, structure=structure)
    comp = labels == labels[r0 - rlo, c0 - clo]
    rows, cols = np.nonzero(comp)
    return {(int(r + rlo), int(c + clo)) for r, c in zip(rows, cols)}


def _resolve_backend(backend: str):
    if backend == "auto":
        return _dilation_fast if _dilation_fast is not None else _dilation_py
    if backend == "fast":
        if _dilation_fast is None:
            raise RuntimeError("compiled dilation kernel is not available")
        return _dilation_fast
    if backend == "python":
        return _dilation_py
    raise ValueError(f"unknown backend {backend!r} (use auto, fast or python)")


def structure_aware_dilate(
    radar: DepthMap,
    mono: DepthMap,
    params: EnhancementParams,
    backend: str = "auto",
) -> tuple[DepthMap, RoiLabelMap]:
    """Dilate sparse radar depth along monocular structure.

    Returns the dilated depth map (valid exactly on the union of grown
    regions) and the per-pixel label record. Seeds whose guidance pixel
    is invalid are skipped and counted in ``n_skipped``.
    """
    if radar.shape != mono.shape:
        raise ShapeMismatchError(f"radar {radar.shape} vs mono {mono.shape}")
    impl = _resolve_backend(backend)
    guidance = mono
    if params.align_mono:
        scale, offset = fit_mono_alignment(mono, radar)
        guidance = apply_mono_alignment(mono, scale, offset)
    seeds = np.ascontiguousarray(np.argwhere(radar.values > 0.0).astype(np.int32))
    radar_vals = np.ascontiguousarray(radar.values, dtype=np.float32)
    mono_vals = np.ascontiguousarray(guidance.values, dtype=np.float32)
    res = impl.dilate(
        radar_vals,
        mono_vals,
        seeds,
        float(params.tau1),
        int(params.max_radius),
        int(params.connectivity),
    )
    dilated = DepthMap(res["depth"], "sparse")
    labels = RoiLabelMap(
        member=res["member"],
        seed_row=res["seed_row"],
        seed_col=res["seed_col"],
        seed_mono=res["seed_mono"],
        depth=res["depth"],
        n_grown=res["n_grown"],
        n_skipped=res["n_skipped"],
        n_contested=res["n_contested"],
    )
    return dilated, labels
