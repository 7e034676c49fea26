"""Confidence supervision and noise filtering for dilated radar depth.

The dilated map inherits radar noise: every pixel of a region grown
from a bad return is bad. Ground-truth confidence marks a pixel 1 when
the interpolated supervision depth agrees with the dilated depth within
tau2 (inclusive), 0 otherwise; pixels without supervision are dropped
from the loss and counted. Filtering keeps dilated pixels whose
predicted confidence reaches tau3 and pairs the result with the raw
map as the two-channel enhanced radar depth.
"""

from __future__ import annotations

import numpy as np

from .types import (
    ConfidenceMap,
    DepthMap,
    EmptyRegionError,
    EnhancedRadarDepth,
    ShapeMismatchError,
)

BCE_EPS = 1e-7


def confidence_ground_truth(
    ddr: DepthMap, dint: DepthMap, tau2: float
) -> ConfidenceMap:
    """Binary agreement labels between dilated radar and supervision.

    Valid where both maps are valid; the label is 1 when
    |dint - ddr| <= tau2. Dilated pixels with no supervision are
    excluded from validity and counted in ``n_dropped``.
    """
    if ddr.shape != dint.shape:
        raise ShapeMismatchError(f"ddr {ddr.shape} vs dint {dint.shape}")
    has_pred = ddr.values > 0.0
    has_target = dint.values > 0.0
    validity = has_pred & has_target
    gap = np.abs(dint.values.astype(np.float64) - ddr.values.astype(np.float64))
    labels = np.where(validity & (gap <= tau2), 1.0, 0.0).astype(np.float32)
    n_dropped = int(np.count_nonzero(has_pred & ~has_target))
    return ConfidenceMap(labels, validity, n_dropped=n_dropped)


def bce_loss(pred: ConfidenceMap, target: ConfidenceMap) -> float:
    """Mean binary cross-entropy over the shared validity mask.

    Predictions are clamped to [eps, 1 - eps] before the logs. The two
    maps must agree on validity; an empty mask is an error because the
    mean would be undefined.
    """
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"pred {pred.shape} vs target {target.shape}")
    if not np.array_equal(pred.validity, target.validity):
        raise ValueError("prediction and target validity masks differ")
    mask = pred.validity
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise EmptyRegionError("confidence loss over an empty region")
    p = np.clip(pred.values[mask].astype(np.float64), BCE_EPS, 1.0 - BCE_EPS)
    t = target.values[mask].astype(np.float64)
    total = float(np.sum(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))
    return -total / count


def filter_by_confidence(
    ddr: DepthMap, confidence: ConfidenceMap, tau3: float
) -> DepthMap:
    """Keep dilated pixels whose confidence reaches tau3 (inclusive).

    Pixels outside the confidence validity mask are removed along with
    low-confidence ones: no confidence, no pass.
    """
    if ddr.shape != confidence.shape:
        raise ShapeMismatchError(f"ddr {ddr.shape} vs confidence {confidence.shape}")
    keep = confidence.validity & (confidence.values >= tau3) & (ddr.values > 0.0)
    vals = np.where(keep, ddr.values, np.float32(0.0)).astype(np.float32)
    return DepthMap(vals, "sparse")


def assemble_enhanced(ddr: DepthMap, dfr: DepthMap) -> EnhancedRadarDepth:
    """Pair the raw dilated map with its filtered version.

    The filtered channel must be a sub-map of the raw one: same values
    wherever valid, and no pixel valid in ``dfr`` but not in ``ddr``.
    """
    if ddr.shape != dfr.shape:
        raise ShapeMismatchError(f"ddr {ddr.shape} vs dfr {dfr.shape}")
    f_valid = dfr.values > 0.0
    if np.any(f_valid & (ddr.values <= 0.0)):
        raise ValueError("filtered map is valid where the raw map is not")
    if not np.array_equal(dfr.values[f_valid], ddr.values[f_valid]):
        raise ValueError("filtered map changes values of the raw map")
    return EnhancedRadarDepth(raw=ddr, filtered=dfr)
