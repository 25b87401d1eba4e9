"""Agreement metrics between a reference and an estimated angle trajectory.

``y`` is always the reference (IMU) and ``yhat`` the estimate (video). NRMSE
and R² are asymmetric in that order.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional

import numpy as np

from .errors import EmptyInput, EmptySignal, KinebenchError, LengthMismatch, ZeroRange, ZeroVariance
from .kinematics import AngleSeries

METRICS = ("rmse", "mae", "nrmse", "pearson", "r2")

PER_ACTIVITY = "per_activity_per_model"
OVERALL = "overall_per_model"
# mean over per-activity means instead of over all trials
OVERALL_OF_ACTIVITY_MEANS = "overall_of_activity_means"
GROUPINGS = (PER_ACTIVITY, OVERALL, OVERALL_OF_ACTIVITY_MEANS)


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(y, AngleSeries):
        y = y.values
    if isinstance(yhat, AngleSeries):
        yhat = yhat.values
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.shape != yhat.shape:
        raise LengthMismatch(f"lengths differ: {y.size} vs {yhat.size}")
    if y.size == 0:
        raise EmptySignal("empty signal")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    d = y - yhat
    return math.sqrt(float(np.mean(d * d)))


def nrmse(y, yhat) -> float:
    """RMSE divided by the range of the reference."""
    y, yhat = _pair(y, yhat)
    span = float(y.max() - y.min())
    if span == 0:
        raise ZeroRange("reference signal is constant")
    return rmse(y, yhat) / span


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def pearson(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise ZeroVariance("need at least 2 samples")
    dy = y - y.mean()
    dh = yhat - yhat.mean()
    syy = float(np.dot(dy, dy))
    shh = float(np.dot(dh, dh))
    if syy == 0 or shh == 0:
        raise ZeroVariance("constant series has no correlation")
    r = float(np.dot(dy, dh)) / math.sqrt(syy * shh)
    return min(1.0, max(-1.0, r))


def r2(y, yhat) -> float:
    """Coefficient of determination of yhat as a predictor of y; can be negative."""
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise ZeroVariance("need at least 2 samples")
    dy = y - y.mean()
    ss_tot = float(np.dot(dy, dy))
    if ss_tot == 0:
        raise ZeroVariance("reference signal is constant")
    d = y - yhat
    return 1.0 - float(np.dot(d, d)) / ss_tot


@dataclass(frozen=True)
class MetricsRecord:
    """One (subject, activity, model) trial. ``None`` marks an absent metric."""

    subject_id: str
    activity_id: str
    model: str
    rmse: Optional[float]
    nrmse: Optional[float]
    mae: Optional[float]
    pearson: Optional[float]
    r2: Optional[float]
    n_samples: int
    offset: Optional[int] = None
    fit_rmse: Optional[float] = None

    def metric(self, name: str) -> Optional[float]:
        return getattr(self, name)

    def as_dict(self) -> dict:
        return asdict(self)


RECORD_FIELDS = tuple(f.name for f in fields(MetricsRecord))

_FUNCS = {"rmse": rmse, "nrmse": nrmse, "mae": mae, "pearson": pearson, "r2": r2}


def evaluate_trial(
    ref,
    est,
    subject_id: str = "",
    activity_id: str = "",
    model: str = "",
    offset: Optional[int] = None,
    fit_rmse: Optional[float] = None,
) -> MetricsRecord:
    """All five metrics on one aligned pair.

    A degenerate reference (zero range or variance) leaves the affected
    metrics as ``None`` instead of raising, so one trial cannot sink a batch.
    Length and emptiness errors still propagate.
    """
    y, yhat = _pair(ref, est)
    values = {}
    for name, fn in _FUNCS.items():
        try:
            values[name] = fn(y, yhat)
        except (ZeroRange, ZeroVariance):
            values[name] = None
    return MetricsRecord(
        subject_id=subject_id,
        activity_id=activity_id,
        model=model,
        n_samples=int(y.size),
        offset=offset,
        fit_rmse=fit_rmse,
        **values,
    )


@dataclass(frozen=True)
class Cell:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class SummaryTable:
    """``cells[group][metric] -> Cell``.

    Groups are ``(model,)`` for overall groupings and ``(activity_id, model)``
    for the per-activity grouping. Metrics with no present value in a group
    are missing from that group's dict.
    """

    grouping: str
    cells: dict
    ddof: int = 0

    @property
    def models(self) -> list[str]:
        return sorted({g[-1] for g in self.cells})

    @property
    def activities(self) -> list[str]:
        if self.grouping != PER_ACTIVITY:
            return []
        return sorted({g[0] for g in self.cells})

    def get(self, *group: str, metric: str) -> Optional[Cell]:
        return self.cells.get(tuple(group), {}).get(metric)


def _mean_std(values: list[float], ddof: int) -> Cell:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=ddof)) if arr.size > ddof else 0.0
    return Cell(mean=float(arr.mean()), std=std, count=int(arr.size))


def _reduce(groups: dict, ddof: int) -> dict:
    cells = {}
    for key in sorted(groups):
        per_metric = {}
        for m in METRICS:
            vals = [v for v in groups[key][m] if v is not None]
            if vals:
                per_metric[m] = _mean_std(vals, ddof)
        cells[key] = per_metric
    return cells


def aggregate(records: Iterable[MetricsRecord], grouping: str = OVERALL, ddof: int = 0) -> SummaryTable:
    """Unweighted mean and standard deviation per group.

    ``ddof=0`` gives the population standard deviation, ``ddof=1`` the
    sample one. Absent metrics are skipped, not counted as zero.
    """
    records = list(records)
    if not records:
        raise EmptyInput("no records to aggregate")
    if grouping not in GROUPINGS:
        raise KinebenchError(f"unknown grouping {grouping!r}")

    if grouping == OVERALL_OF_ACTIVITY_MEANS:
        per_act = aggregate(records, PER_ACTIVITY, ddof)
        groups: dict = defaultdict(lambda: defaultdict(list))
        for (_, model), cell in per_act.cells.items():
            for m in METRICS:
                groups[(model,)][m].append(cell[m].mean if m in cell else None)
        return SummaryTable(grouping, _reduce(groups, ddof), ddof)

    groups = defaultdict(lambda: defaultdict(list))
    for r in records:
        key = (r.activity_id, r.model) if grouping == PER_ACTIVITY else (r.model,)
        for m in METRICS:
            groups[key][m].append(r.metric(m))
    return SummaryTable(grouping, _reduce(groups, ddof), ddof)
