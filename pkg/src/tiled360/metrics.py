"""MSE / PSNR frame metrics for comparing received viewports and tiles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError

PSNR_SATURATED = 99.0


@dataclass(frozen=True)
class FrameMetric:
    frame_index: int
    viewport_mse: float
    mean_tile_mse: float
    psnr_db: float


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared sample difference.

    Squared errors are summed exactly in int64 and divided once.  When all
    channels have equal sample counts, this equals averaging the
    per-channel MSEs.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare frames of shape {a.shape} and {b.shape}")
    if a.size == 0:
        raise DimensionError("cannot compute MSE of empty frames")
    diff = a.astype(np.int64) - b.astype(np.int64)
    return int(np.sum(diff * diff)) / a.size


def psnr(mse_value: float, max_value: float = 255.0) -> float:
    if mse_value < 0 or math.isnan(mse_value):
        raise ValueError(f"mse must be non-negative, got {mse_value}")
    if mse_value == 0:
        return PSNR_SATURATED
    return 10.0 * math.log10(max_value * max_value / mse_value)


def mean_tile_mse(ref_tiles: Mapping[int, np.ndarray], recv_tiles: Mapping[int, np.ndarray],
                  used: Iterable[int]) -> float:
    used = sorted(set(used))
    if not used:
        raise ValueError("mean tile MSE needs at least one tile")
    for tile_id in used:
        if tile_id not in ref_tiles or tile_id not in recv_tiles:
            raise KeyError(f"tile {tile_id} missing from reference or received tiles")
    return sum(mse(ref_tiles[i], recv_tiles[i]) for i in used) / len(used)
