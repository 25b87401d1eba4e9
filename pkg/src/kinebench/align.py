"""Integer-lag synchronization of an estimate against a reference signal.

Offset convention: a positive offset ``k`` means the estimate lags the
reference, so ``est[i + k]`` lines up with ``ref[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientOverlap, RateMismatch
from .kinematics import AngleSeries


@dataclass(frozen=True)
class AlignmentConfig:
    fit_window: int = 180
    max_offset: int = 15

    def __post_init__(self):
        if self.fit_window < 2:
            raise ValueError("fit_window must be >= 2")
        if self.max_offset < 0:
            raise ValueError("max_offset must be >= 0")


@dataclass(frozen=True)
class AlignmentResult:
    offset: int
    fit_rmse: float
    aligned_length: int


def overlap_bounds(n_ref: int, n_est: int, offset: int) -> tuple[int, int]:
    """Reference index range [lo, hi) that has a partner in the shifted estimate."""
    lo = max(0, -offset)
    hi = min(n_ref, n_est - offset)
    return lo, max(lo, hi)


def _values(series) -> np.ndarray:
    if isinstance(series, AngleSeries):
        if not series.fully_valid:
            raise ValueError("alignment needs fully valid series")
        return series.values
    return np.asarray(series, dtype=np.float64)


def best_offset(ref, est, cfg: AlignmentConfig = AlignmentConfig()) -> AlignmentResult:
    """Exhaustive search over ``[-max_offset, max_offset]`` for minimal RMSE.

    For each candidate the RMSE is taken over the first
    ``min(fit_window, overlap)`` samples of the overlap. Ties go to the
    smaller |offset|, then the smaller signed offset.
    """
    if isinstance(ref, AngleSeries) and isinstance(est, AngleSeries):
        if ref.sample_rate_hz != est.sample_rate_hz:
            raise RateMismatch(f"reference at {ref.sample_rate_hz} Hz, estimate at {est.sample_rate_hz} Hz")
    y, yhat = _values(ref), _values(est)
    if len(y) < 2 or len(yhat) < 2:
        raise InsufficientOverlap("both series need at least 2 samples")

    best = None
    for k in range(-cfg.max_offset, cfg.max_offset + 1):
        lo, hi = overlap_bounds(len(y), len(yhat), k)
        w = min(cfg.fit_window, hi - lo)
        if w < 2:
            continue
        d = y[lo : lo + w] - yhat[lo + k : lo + k + w]
        err = float(np.sqrt(np.mean(d * d)))
        key = (err, abs(k), k)
        if best is None or key < best[0]:
            best = (key, k, hi - lo)
    if best is None:
        raise InsufficientOverlap("no candidate offset leaves 2 overlapping samples")
    (err, _, _), k, length = best
    return AlignmentResult(offset=k, fit_rmse=err, aligned_length=length)


def apply_offset_and_trim(ref: AngleSeries, est: AngleSeries, offset: int) -> tuple[AngleSeries, AngleSeries]:
    """Cut both series to their common support under ``offset``."""
    lo, hi = overlap_bounds(len(ref), len(est), offset)
    if hi - lo < 2:
        raise InsufficientOverlap(f"offset {offset} leaves {hi - lo} overlapping samples")
    r = ref.with_values(ref.values[lo:hi], ref.validity[lo:hi])
    e = est.with_values(est.values[lo + offset : hi + offset], est.validity[lo + offset : hi + offset])
    return r, e
