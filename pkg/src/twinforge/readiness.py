"""Preprocessing stages: outlier removal, gap filling, smoothing,
normalization, rolling-maximum peak extraction.

All stages are pure functions on 1-D float arrays. run_readiness composes
them per axis in a fixed order and zips the three axes into block-level
3-vectors for segmentation and clustering.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import AllMissing, AxisLengthMismatch, EmptySeries, WindowTooLarge


@dataclass(frozen=True)
class ReadinessConfig:
    sigma_threshold: float = 7.0
    smooth_window: int = 5
    block_size: int = 50
    gap_fill: str = "linear"  # or "hold"
    normalize: bool = True

    def __post_init__(self):
        if self.sigma_threshold <= 0:
            raise ValueError("sigma_threshold must be positive")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValueError("smooth_window must be odd and >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.gap_fill not in ("linear", "hold"):
            raise ValueError(f"unknown gap_fill mode {self.gap_fill!r}")

    def with_overrides(self, **kwargs) -> "ReadinessConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class FeatureSeries:
    """Block-wise peak vectors: peaks[i] = (x, y, z) peak of block i, with
    spans[i] the half-open source sample range."""

    peaks: np.ndarray  # (n_blocks, 3)
    spans: tuple[tuple[int, int], ...]
    config_used: ReadinessConfig

    def __post_init__(self):
        if not np.all(np.isfinite(self.peaks)):
            raise ValueError("feature vectors must be finite")

    def __len__(self) -> int:
        return self.peaks.shape[0]

    @property
    def blocks(self) -> list[tuple[int, tuple[float, float, float], tuple[int, int]]]:
        return [
            (i, tuple(self.peaks[i]), self.spans[i]) for i in range(len(self))
        ]


def detect_outliers(series, sigma_threshold: float = 7.0) -> np.ndarray:
    """Mask of points strictly beyond sigma_threshold population deviations.

    Mean and sigma are taken over the full input, spikes included (single
    pass, reproducible); non-finite entries are excluded from the statistics
    but never flagged here, they count as missing downstream. sigma == 0
    flags nothing.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise EmptySeries("detect_outliers needs a non-empty series")
    finite = np.isfinite(x)
    if not finite.any():
        raise AllMissing("no finite values")
    mu = x[finite].mean()
    sigma = x[finite].std()
    if sigma == 0.0:
        return np.zeros(x.shape, dtype=bool)
    mask = np.zeros(x.shape, dtype=bool)
    mask[finite] = np.abs(x[finite] - mu) > sigma_threshold * sigma
    return mask


def fill_gaps(series, mask, mode: str = "linear") -> np.ndarray:
    """Replace flagged/missing positions.

    linear: interior points by interpolation between nearest valid
    neighbours, leading/trailing by the nearest valid value. hold: carry the
    last valid value forward (leading positions take the first valid one).
    """
    x = np.asarray(series, dtype=np.float64)
    bad = np.asarray(mask, dtype=bool) | ~np.isfinite(x)
    if bad.all():
        raise AllMissing("cannot fill a fully-missing series")
    if not bad.any():
        return x.copy()
    idx = np.arange(x.size)
    valid = idx[~bad]
    if mode == "linear":
        out = x.copy()
        out[bad] = np.interp(idx[bad], valid, x[valid])
        return out
    if mode == "hold":
        # index of the most recent valid point at or before each position
        last = np.maximum.accumulate(np.where(~bad, idx, -1))
        last[last < 0] = valid[0]  # leading run: take first valid
        return x[last]
    raise ValueError(f"unknown gap_fill mode {mode!r}")


def smooth(series, window: int) -> np.ndarray:
    """Centered moving average; edges use the truncated window so length is
    preserved."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise EmptySeries("smooth needs a non-empty series")
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    if window > x.size:
        raise WindowTooLarge(f"window {window} > length {x.size}")
    if window == 1:
        return x.copy()
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(x.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, x.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def zscore_normalize(series) -> np.ndarray:
    """(x - mean) / population std; a constant series maps to all zeros."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise EmptySeries("zscore_normalize needs a non-empty series")
    sigma = x.std()
    if sigma == 0.0:
        return np.zeros_like(x)
    return (x - x.mean()) / sigma


def rolling_max(series, block_size: int) -> np.ndarray:
    """Peak of each non-overlapping block; a partial final block is kept."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise EmptySeries("rolling_max needs a non-empty series")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    n_blocks = -(-x.size // block_size)
    padded = np.full(n_blocks * block_size, -np.inf)
    padded[: x.size] = x
    return padded.reshape(n_blocks, block_size).max(axis=1)


def block_spans(n: int, block_size: int) -> tuple[tuple[int, int], ...]:
    return tuple(
        (start, min(start + block_size, n)) for start in range(0, n, block_size)
    )


def run_readiness(
    x: Sequence[float],
    y: Sequence[float],
    z: Sequence[float],
    config: Optional[ReadinessConfig] = None,
) -> FeatureSeries:
    """Full per-axis pipeline: detect_outliers -> fill_gaps -> smooth ->
    zscore_normalize (if enabled) -> rolling_max, axes zipped into 3-vectors.

    The three axis series must be time-aligned and equal length. Non-finite
    input values are treated as missing and filled alongside outliers.
    """
    cfg = config or ReadinessConfig()
    axes = [np.asarray(a, dtype=np.float64) for a in (x, y, z)]
    lengths = {a.size for a in axes}
    if len(lengths) != 1:
        raise AxisLengthMismatch(f"axis lengths differ: {[a.size for a in axes]}")
    n = axes[0].size
    if n == 0:
        raise EmptySeries("run_readiness needs non-empty axes")
    columns = []
    for axis in axes:
        mask = detect_outliers(axis, cfg.sigma_threshold)
        filled = fill_gaps(axis, mask, cfg.gap_fill)
        smoothed = smooth(filled, cfg.smooth_window)
        if cfg.normalize:
            smoothed = zscore_normalize(smoothed)
        columns.append(rolling_max(smoothed, cfg.block_size))
    peaks = np.column_stack(columns)
    return FeatureSeries(peaks=peaks, spans=block_spans(n, cfg.block_size), config_used=cfg)
