"""Angle-signal conditioning: gap filling, smoothing, resampling, mean removal.

All filters use replicate (edge) padding so output length equals input
length, which the alignment step depends on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptySignal, EvenWindow, WindowTooLarge
from .kinematics import AngleSeries


@dataclass(frozen=True)
class FilterConfig:
    median_window: int = 5
    mavg_window: int = 5
    target_rate_hz: float = 30.0

    def __post_init__(self):
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ValueError("median_window must be odd and >= 1")
        if self.mavg_window < 1:
            raise ValueError("mavg_window must be >= 1")
        if not self.target_rate_hz > 0:
            raise ValueError("target_rate_hz must be positive")


def _require_valid(series: AngleSeries, op: str) -> np.ndarray:
    if len(series) == 0:
        raise EmptySignal(f"{op}: empty signal")
    if not series.fully_valid:
        raise ValueError(f"{op}: series has invalid samples; interpolate first")
    return series.values


def interpolate_gaps(series: AngleSeries) -> AngleSeries:
    """Fill invalid samples linearly between valid neighbours.

    Leading and trailing gaps take the nearest valid value.
    """
    valid = series.validity
    if not valid.any():
        raise EmptySignal("no valid samples to interpolate from")
    if valid.all():
        return series.with_values(series.values)
    idx = np.arange(len(series))
    filled = np.array(series.values)
    # np.interp clamps outside the valid range, which is the constant extension
    filled[~valid] = np.interp(idx[~valid], idx[valid], series.values[valid])
    return series.with_values(filled)


def _padded_windows(x: np.ndarray, window: int) -> np.ndarray:
    left = (window - 1) // 2
    right = window // 2
    return sliding_window_view(np.pad(x, (left, right), mode="edge"), window)


def median_filter(series: AngleSeries, window: int = 5) -> AngleSeries:
    x = _require_valid(series, "median_filter")
    if window % 2 == 0:
        raise EvenWindow(f"median window must be odd, got {window}")
    if window < 1 or window > len(x):
        raise WindowTooLarge(f"window {window} exceeds signal length {len(x)}")
    # odd window: np.median picks the middle order statistic, no averaging
    return series.with_values(np.median(_padded_windows(x, window), axis=1))


def moving_average(series: AngleSeries, window: int = 5) -> AngleSeries:
    """Centered moving mean. Even windows reach one sample further right."""
    x = _require_valid(series, "moving_average")
    if window < 1 or window > len(x):
        raise WindowTooLarge(f"window {window} exceeds signal length {len(x)}")
    out = _padded_windows(x, window).mean(axis=1)
    # a mean cannot leave the input hull; clip rounding so constants stay exact
    return series.with_values(np.clip(out, x.min(), x.max()))


def resample(series: AngleSeries, target_rate_hz: float) -> AngleSeries:
    """Linear interpolation onto ``k / target_rate_hz`` within the source span."""
    x = _require_valid(series, "resample")
    if not target_rate_hz > 0:
        raise ValueError("target_rate_hz must be positive")
    src_rate = series.sample_rate_hz
    t_src = np.arange(len(x)) / src_rate
    span = (len(x) - 1) / src_rate
    n_out = int(np.floor(span * target_rate_hz + 1e-9)) + 1
    t_out = np.arange(n_out) / target_rate_hz
    return series.with_values(np.interp(t_out, t_src, x), sample_rate_hz=target_rate_hz)


def mean_remove(series: AngleSeries) -> AngleSeries:
    x = _require_valid(series, "mean_remove")
    return series.with_values(x - x.mean())


def condition_video(series: AngleSeries, cfg: FilterConfig) -> AngleSeries:
    """interpolate -> median -> moving average -> mean removal.

    A resample is inserted after interpolation only when the video rate
    differs from ``cfg.target_rate_hz``.
    """
    s = interpolate_gaps(series)
    if s.sample_rate_hz != cfg.target_rate_hz:
        s = resample(s, cfg.target_rate_hz)
    s = median_filter(s, cfg.median_window)
    s = moving_average(s, cfg.mavg_window)
    return mean_remove(s)


def condition_imu(series: AngleSeries, cfg: FilterConfig) -> AngleSeries:
    """interpolate -> resample -> median -> moving average -> mean removal."""
    s = interpolate_gaps(series)
    s = resample(s, cfg.target_rate_hz)
    s = median_filter(s, cfg.median_window)
    s = moving_average(s, cfg.mavg_window)
    return mean_remove(s)
