"""Range-bucketed depth error metrics.

Depths are meters internally; reported errors are millimeters. A pixel
enters a bucket when the ground-truth depth lies in (0, max_range] and
the prediction is valid there. Accumulation is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import DepthMap, EmptyRegionError, ShapeMismatchError

DEFAULT_RANGES = (50.0, 70.0, 80.0)


def evaluate(pred: DepthMap, gt: DepthMap, max_range: float) -> tuple[float, float, int]:
    """MAE and RMSE in millimeters plus the pixel count for one bucket.

    Raises EmptyRegionError when no pixel qualifies, since a mean over
    nothing has no value to report.
    """
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"pred {pred.shape} vs gt {gt.shape}")
    if not (np.isfinite(max_range) and max_range > 0.0):
        raise ValueError(f"max_range must be finite and > 0, got {max_range}")
    mask = (gt.values > 0.0) & (gt.values <= max_range) & (pred.values > 0.0)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise EmptyRegionError(f"no valid pixels with ground truth in (0, {max_range}]")
    err_mm = (
        pred.values[mask].astype(np.float64) - gt.values[mask].astype(np.float64)
    ) * 1000.0
    mae = float(np.mean(np.abs(err_mm)))
    rmse = float(np.sqrt(np.mean(err_mm * err_mm)))
    return mae, rmse, count


@dataclass(frozen=True)
class EvalReport:
    """Per-bucket metrics keyed by the bucket's max range in meters."""

    buckets: dict

    def to_dict(self) -> dict:
        return {
            f"0-{int(r) if float(r).is_integer() else r}m": {
                "mae_mm": v[0], "rmse_mm": v[1], "n_pixels": v[2],
            }
            for r, v in self.buckets.items()
        }


def evaluate_ranges(
    pred: DepthMap, gt: DepthMap, ranges: tuple[float, ...] = DEFAULT_RANGES
) -> EvalReport:
    """Evaluate nested (0, r] buckets in one pass over the bucket list."""
    if len(ranges) == 0:
        raise ValueError("need at least one range bucket")
    buckets = {float(r): evaluate(pred, gt, float(r)) for r in ranges}
    return EvalReport(buckets)
