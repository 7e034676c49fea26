"""Core container types and on-disk formats for depth grids.

All depth values are float32 meters. A value of exactly 0.0 marks an
invalid pixel; valid depths are strictly positive and finite. Arrays are
frozen (read-only) after construction so maps can be shared freely.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

# Hard cap on width * height accepted from files, to keep a corrupt
# header from triggering a giant allocation.
MAX_PIXELS = 100_000_000

RDM_MAGIC = b"RDM1"
RDM_HEADER_SIZE = 16

_KIND_TAGS = {"sparse": 0, "dense": 1}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


class RdmError(ValueError):
    """Malformed depth-map file."""


class BadMagicError(RdmError):
    pass


class TruncatedFileError(RdmError):
    pass


class DimensionOverflowError(RdmError):
    pass


class ShapeMismatchError(ValueError):
    """Two grids that must share a shape do not."""


class EmptyRegionError(ValueError):
    """An operation needed a nonempty pixel region and got none."""


class InsufficientSupportError(ValueError):
    """Too few (or degenerate) support points for interpolation."""


class InvalidSeedError(ValueError):
    """A region-growing seed lies on an invalid guidance pixel."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _as_depth_values(values) -> np.ndarray:
    vals = np.array(values, dtype=np.float32, copy=True)
    if vals.ndim != 2:
        raise ValueError(f"depth values must be 2-D, got ndim={vals.ndim}")
    if vals.size == 0:
        raise ValueError("depth values must be non-empty")
    if not np.all(np.isfinite(vals)):
        raise ValueError("depth values must be finite")
    if np.any(vals < 0.0):
        raise ValueError("depth values must be >= 0 (0 marks invalid)")
    return _freeze(vals)


@dataclass(frozen=True)
class DepthMap:
    """A 2-D grid of depths in meters; 0.0 means no measurement.

    ``kind`` records whether the grid is a sparse measurement map (most
    pixels invalid) or a dense estimate (every pixel carries a value).
    The tag is descriptive and survives file round-trips; no operation
    changes behavior based on it.
    """

    values: np.ndarray
    kind: str = "sparse"

    def __post_init__(self):
        object.__setattr__(self, "values", _as_depth_values(self.values))
        if self.kind not in _KIND_TAGS:
            raise ValueError(f"unknown depth-map kind {self.kind!r}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def valid_mask(self) -> "ValidMask":
        return ValidMask(self.values > 0.0)

    def n_valid(self) -> int:
        return int(np.count_nonzero(self.values > 0.0))

    @staticmethod
    def zeros(height: int, width: int, kind: str = "sparse") -> "DepthMap":
        return DepthMap(np.zeros((height, width), dtype=np.float32), kind)


@dataclass(frozen=True)
class ValidMask:
    """Boolean validity grid with a pixel count."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool, copy=True)
        if bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got ndim={bits.ndim}")
        object.__setattr__(self, "bits", _freeze(bits))

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape


@dataclass(frozen=True)
class ConfidenceMap:
    """Per-pixel confidence in [0, 1] with an explicit validity mask.

    Pixels outside ``validity`` hold exactly 0. ``n_dropped`` counts
    pixels that were excluded while building the map because no target
    value existed there (kept for reporting; not part of equality).
    """

    values: np.ndarray
    validity: np.ndarray
    n_dropped: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float32, copy=True)
        mask = np.array(self.validity, dtype=bool, copy=True)
        if vals.ndim != 2:
            raise ValueError(f"confidence values must be 2-D, got ndim={vals.ndim}")
        if vals.shape != mask.shape:
            raise ShapeMismatchError(
                f"confidence {vals.shape} vs validity {mask.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("confidence values must be finite")
        if np.any((vals < 0.0) | (vals > 1.0)):
            raise ValueError("confidence values must lie in [0, 1]")
        vals[~mask] = 0.0
        object.__setattr__(self, "values", _freeze(vals))
        object.__setattr__(self, "validity", _freeze(mask))
        if self.n_dropped < 0:
            raise ValueError("n_dropped must be >= 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class Image:
    """Dense RGB image, float32 in [0, 1], shape (h, w, 3)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float32, copy=True)
        if vals.ndim != 3 or vals.shape[2] != 3:
            raise ValueError(f"image must have shape (h, w, 3), got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("image values must be finite")
        if np.any((vals < 0.0) | (vals > 1.0)):
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class EnhancedRadarDepth:
    """Two-channel enhanced radar depth: dilated raw + noise-filtered.

    Both channels live on the same grid. ``raw`` is the structure-aware
    dilated map; ``filtered`` is the same map after confidence
    filtering, so its valid set is a subset of ``raw``'s.
    """

    raw: DepthMap
    filtered: DepthMap

    def __post_init__(self):
        if self.raw.shape != self.filtered.shape:
            raise ShapeMismatchError(
                f"raw {self.raw.shape} vs filtered {self.filtered.shape}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.raw.shape

    def stacked(self) -> np.ndarray:
        """Channel-last (h, w, 2) view used as network input."""
        return np.stack([self.raw.values, self.filtered.values], axis=-1)


def write_rdm(path, depth_map: DepthMap) -> None:
    """Write a depth map in the RDM binary format.

    Layout: 16-byte header (magic ``RDM1``, u32 width, u32 height,
    u32 kind tag), then height*width float32 values, row-major,
    everything little-endian.
    """
    header = struct.pack(
        "<4sIII",
        RDM_MAGIC,
        depth_map.width,
        depth_map.height,
        _KIND_TAGS[depth_map.kind],
    )
    payload = np.ascontiguousarray(depth_map.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_rdm(path) -> DepthMap:
    """Read an RDM file, validating header and payload sizes."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < RDM_HEADER_SIZE:
        if blob[:4] != RDM_MAGIC and len(blob) >= 4:
            raise BadMagicError(f"bad magic {blob[:4]!r}")
        raise TruncatedFileError(
            f"header needs {RDM_HEADER_SIZE} bytes, file has {len(blob)}"
        )
    magic, width, height, tag = struct.unpack("<4sIII", blob[:RDM_HEADER_SIZE])
    if magic != RDM_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if width == 0 or height == 0:
        raise RdmError(f"zero dimension: {width}x{height}")
    if width * height > MAX_PIXELS:
        raise DimensionOverflowError(
            f"{width}x{height} exceeds the {MAX_PIXELS}-pixel cap"
        )
    if tag not in _TAG_KINDS:
        raise RdmError(f"unknown kind tag {tag}")
    expected = width * height * 4
    body = blob[RDM_HEADER_SIZE:]
    if len(body) < expected:
        raise TruncatedFileError(
            f"payload needs {expected} bytes, file has {len(body)}"
        )
    if len(body) > expected:
        raise RdmError(f"{len(body) - expected} trailing bytes after payload")
    values = np.frombuffer(body, dtype="<f4").reshape(height, width)
    values = values.astype(np.float32, copy=True)
    if not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise RdmError("payload contains non-finite or negative depths")
    return DepthMap(values, _TAG_KINDS[tag])


def write_confidence(path, conf: ConfidenceMap) -> None:
    """Write a confidence map as an npz archive with two planes.

    The archive is built with pinned zip timestamps so the same map
    always produces the same bytes; np.load reads it back unchanged.
    """
    import zipfile

    from numpy.lib import format as npformat

    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, arr in (("values", conf.values), ("validity", conf.validity)):
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w") as fh:
                npformat.write_array(fh, np.ascontiguousarray(arr))


def read_confidence(path) -> ConfidenceMap:
    """Read a confidence archive back.

    ``n_dropped`` is bookkeeping of the ground-truth derivation, not a
    property of the map itself, so it is not persisted and comes back 0.
    """
    try:
        with np.load(path) as data:
            values = np.asarray(data["values"], dtype=np.float32)
            validity = np.asarray(data["validity"], dtype=bool)
    except (OSError, KeyError, ValueError) as exc:
        raise RdmError(f"cannot read confidence archive {path}: {exc}") from exc
    return ConfidenceMap(values, validity)


def read_depth_png16(path, kind: str = "sparse") -> DepthMap:
    """Import a 16-bit grayscale PNG holding depth in millimeters.

    The uint16 value 0 maps to the invalid sentinel; everything else is
    converted to meters (value / 1000).
    """
    from PIL import Image as PilImage

    with PilImage.open(path) as img:
        if img.mode not in ("I", "I;16", "I;16B", "I;16L"):
            raise RdmError(f"expected 16-bit grayscale PNG, got mode {img.mode!r}")
        raw = np.asarray(img, dtype=np.uint32)
    if raw.ndim != 2:
        raise RdmError(f"expected 2-D grayscale PNG, got shape {raw.shape}")
    if np.any(raw > 65535):
        raise RdmError("pixel values exceed 16-bit range")
    values = raw.astype(np.float32) / 1000.0
    return DepthMap(values, kind)
