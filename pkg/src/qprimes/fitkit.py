"""Straight-line fits in transformed coordinates, and the series decimation recorder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

TRANSFORMS = ("loglog", "semilog_y", "linear")


@dataclass(frozen=True)
class FitResult:
    """Least-squares line in transformed coordinates.

    loglog:    y = alpha * x**beta
    semilog_y: y = alpha * exp(beta * x)
    linear:    y = alpha + beta * x
    """

    alpha: float
    beta: float
    n_points: int
    residual_rms: float
    transform: str
    window: tuple[float, float]

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.transform == "loglog":
            return self.alpha * x**self.beta
        if self.transform == "semilog_y":
            return self.alpha * np.exp(self.beta * x)
        return self.alpha + self.beta * x


def linear_fit(
    points: Sequence[tuple[float, float]],
    transform: str = "loglog",
    window: Optional[tuple[float, float]] = None,
) -> FitResult:
    """Ordinary least squares on transformed coordinates, restricted to x in ``window``."""
    if transform not in TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}; choose from {TRANSFORMS}")
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    x, y = arr[:, 0], arr[:, 1]
    if window is not None:
        sel = (x >= window[0]) & (x <= window[1])
        x, y = x[sel], y[sel]
    if x.size < 3:
        raise ValueError(f"need at least 3 points to fit, got {x.size}")
    if transform in ("loglog", "semilog_y") and np.any(y <= 0):
        raise ValueError("log transform needs positive y values")
    if transform == "loglog" and np.any(x <= 0):
        raise ValueError("loglog transform needs positive x values")
    u = np.log(x) if transform == "loglog" else x
    v = np.log(y) if transform != "linear" else y
    A = np.column_stack([np.ones_like(u), u])
    (c0, c1), *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - (c0 + c1 * u)
    rms = float(math.sqrt(np.mean(resid**2)))
    alpha = float(c0) if transform == "linear" else math.exp(c0)
    used = window if window is not None else (float(x.min()), float(x.max()))
    return FitResult(alpha, float(c1), int(x.size), rms, transform, used)


@dataclass(frozen=True)
class DecimationRule:
    """Keep everything below ``dense_limit``; above it keep sign changes, records
    (when ``record_extrema``) and one point per geometric step of ``geometric_ratio``."""

    dense_limit: float = 1e6
    geometric_ratio: float = 1.01
    record_extrema: bool = True
    floor_value: float = 1e-3

    def __post_init__(self):
        if not self.geometric_ratio > 1:
            raise ValueError("geometric_ratio must exceed 1")
        if not self.floor_value > 0:
            raise ValueError("floor_value must be positive")


@dataclass
class Decimated:
    indices: list[int]
    points: list[tuple[float, float]]
    clamped: list[bool] = field(default_factory=list)


def decimate(series: Sequence[tuple[float, float]], rule: DecimationRule) -> Decimated:
    """Thin an x-ordered (x, value) series for plotting.

    Values with |value| below ``floor_value`` are replaced by +-floor_value and
    flagged in ``clamped``.
    """
    keep: list[int] = []
    next_x = None
    prev_sign = 0
    hi = lo = None
    for i, (x, v) in enumerate(series):
        take = False
        s = (v > 0) - (v < 0)
        if s and prev_sign and s != prev_sign:
            take = True
        if s:
            prev_sign = s
        if x < rule.dense_limit:
            take = True
        if rule.record_extrema and (hi is None or v > hi or v < lo):
            take = True
        hi = v if hi is None else max(hi, v)
        lo = v if lo is None else min(lo, v)
        if x >= rule.dense_limit and (next_x is None or x >= next_x):
            take = True
            next_x = max(x, rule.dense_limit) * rule.geometric_ratio
        if take:
            keep.append(i)
    points, clamped = [], []
    for i in keep:
        x, v = series[i]
        small = abs(v) < rule.floor_value
        points.append((x, math.copysign(rule.floor_value, v) if small else v))
        clamped.append(small)
    return Decimated(keep, points, clamped)
