"""Mergeable accumulators and small estimate containers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Estimate(NamedTuple):
    value: float
    error: float
    samples: int


@dataclass
class Moments:
    """Running ``(count, sum, sum of squares)`` with Kahan-compensated sums.

    Merging is associative and commutative up to rounding; experiment
    reductions always merge in block order so results are bit-reproducible.
    """

    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0
    _c: float = 0.0
    _c_sq: float = 0.0

    def _add(self, value, attr, comp):
        cur = getattr(self, attr)
        y = value - getattr(self, comp)
        s = cur + y
        setattr(self, comp, (s - cur) - y)
        setattr(self, attr, s)

    def add_many(self, values) -> "Moments":
        v = np.asarray(values, dtype=float).ravel()
        self.count += v.size
        self._add(math.fsum(v), "total", "_c")
        self._add(math.fsum(v * v), "total_sq", "_c_sq")
        return self

    def merge(self, other: "Moments") -> "Moments":
        self.count += other.count
        self._add(other.total, "total", "_c")
        self._add(other.total_sq, "total_sq", "_c_sq")
        return self

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else math.nan

    @property
    def std(self) -> float:
        """Sample standard deviation (n - 1 denominator)."""
        if self.count < 2:
            return math.nan
        var = (self.total_sq - self.count * self.mean**2) / (self.count - 1)
        return math.sqrt(max(var, 0.0))

    @property
    def sem(self) -> float:
        return self.std / math.sqrt(self.count) if self.count >= 2 else math.nan


def bernoulli_sigma(p: float, samples: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / samples)


def loglog_slope(x, y, yerr=None):
    """Weighted least-squares slope of ``log y`` against ``log x``.

    Returns ``(slope, slope_stderr, intercept)``.  With `yerr`, weights are
    ``(y / yerr)^2`` (delta-method variance of ``log y``) and the slope error
    comes from the weights; otherwise from the residuals.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if yerr is None:
        w = np.ones_like(lx)
    else:
        w = (np.asarray(y, dtype=float) / np.asarray(yerr, dtype=float)) ** 2
    sw = w.sum()
    xm = (w * lx).sum() / sw
    ym = (w * ly).sum() / sw
    sxx = (w * (lx - xm) ** 2).sum()
    slope = (w * (lx - xm) * (ly - ym)).sum() / sxx
    intercept = ym - slope * xm
    if yerr is None:
        resid = ly - (intercept + slope * lx)
        dof = max(lx.size - 2, 1)
        err = math.sqrt((resid**2).sum() / dof / sxx)
    else:
        err = math.sqrt(1.0 / sxx)
    return float(slope), float(err), float(intercept)
