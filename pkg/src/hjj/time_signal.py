"""Piecewise-constant time signals on [0, horizon].

Signals model merely-measurable time data (flux limiters, running-cost
coefficients). The stored representative is right-continuous, left-continuous
at the final time. Every consumer in the package integrates signals over
windows instead of sampling them pointwise, so results do not depend on the
representative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyWindow, HorizonMismatch, OutOfHorizon

__all__ = [
    "TimeSignal",
    "constant",
    "as_signal",
    "union_mesh",
    "l1_distance",
    "coeff_eval",
    "coeff_average",
    "coeff_bounds",
    "coeff_signals",
]

# Relative slack for horizon-boundary comparisons.
_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class TimeSignal:
    """Right-continuous step function: values[k] on [breakpoints[k], breakpoints[k+1])."""

    breakpoints: np.ndarray  # shape (m+1,), breakpoints[0] == 0.0
    values: np.ndarray  # shape (m,)
    _cumint: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or vals.ndim != 1 or bp.size != vals.size + 1:
            raise ValueError("need m+1 breakpoints for m values")
        if bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if not np.all(np.diff(bp) > 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise ValueError("signal values must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        cum = np.concatenate(([0.0], np.cumsum(vals * np.diff(bp))))
        object.__setattr__(self, "_cumint", cum)

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    def _clamp(self, t: float) -> float:
        T = self.horizon
        tol = _EDGE_TOL * max(1.0, T)
        if t < -tol or t > T + tol:
            raise OutOfHorizon(f"t={t!r} outside [0, {T!r}]")
        return min(max(t, 0.0), T)

    def __call__(self, t: float) -> float:
        t = self._clamp(t)
        if t >= self.horizon:
            return float(self.values[-1])
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return float(self.values[k])

    def _antiderivative(self, t: float) -> float:
        # F(t) = integral of the signal over [0, t], exact.
        if t >= self.horizon:
            return float(self._cumint[-1])
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        k = max(k, 0)
        return float(self._cumint[k] + self.values[k] * (t - self.breakpoints[k]))

    def integrate(self, a: float, b: float) -> float:
        """Exact integral over [a, b] (window clipped to the horizon)."""
        a, b = self._clamp(a), self._clamp(b)
        if b <= a:
            raise EmptyWindow(f"window [{a!r}, {b!r}] is empty")
        return self._antiderivative(b) - self._antiderivative(a)

    def average(self, a: float, b: float) -> float:
        a2, b2 = self._clamp(a), self._clamp(b)
        if b2 <= a2:
            raise EmptyWindow(f"window [{a!r}, {b!r}] is empty")
        return self.integrate(a2, b2) / (b2 - a2)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values))))

    def mollify(self, eps: float) -> "TimeSignal":
        """Window-average approximant, sampled on a mesh of width <= eps/4.

        Each output cell carries the exact average of the signal over the
        window [mid - eps, mid + eps] (clipped to [0, horizon]) around the
        cell midpoint. Sampling a sliding average cannot increase total
        variation, and the L1 distance to the original vanishes as eps -> 0.
        """
        if eps <= 0.0:
            raise ValueError("mollification width must be positive")
        T = self.horizon
        n = max(1, int(np.ceil(T / (eps / 4.0) - _EDGE_TOL)))
        mesh = np.linspace(0.0, T, n + 1)
        mids = 0.5 * (mesh[:-1] + mesh[1:])
        vals = np.empty(n)
        for j, c in enumerate(mids):
            lo = max(0.0, c - eps)
            hi = min(T, c + eps)
            vals[j] = self.average(lo, hi)
        return TimeSignal(*_coalesce(mesh, vals))

    def shift_values(self, fn) -> "TimeSignal":
        """New signal with values fn(values) on the same breakpoints."""
        return TimeSignal(self.breakpoints.copy(), fn(self.values))

    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(t) for t in self.breakpoints],
            "values": [float(v) for v in self.values],
        }

    @staticmethod
    def from_dict(d: dict) -> "TimeSignal":
        return TimeSignal(np.asarray(d["breakpoints"], dtype=float),
                          np.asarray(d["values"], dtype=float))


def _coalesce(bp: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Merge adjacent cells with exactly equal values.
    keep = np.concatenate(([True], vals[1:] != vals[:-1]))
    new_vals = vals[keep]
    starts = bp[:-1][keep]
    new_bp = np.concatenate((starts, [bp[-1]]))
    return new_bp, new_vals


def constant(value: float, horizon: float) -> TimeSignal:
    return TimeSignal(np.array([0.0, float(horizon)]), np.array([float(value)]))


def as_signal(v, horizon: float) -> TimeSignal:
    """Coerce a scalar or TimeSignal to a TimeSignal on [0, horizon]."""
    if isinstance(v, TimeSignal):
        if abs(v.horizon - horizon) > _EDGE_TOL * max(1.0, horizon):
            raise HorizonMismatch(f"signal horizon {v.horizon} != {horizon}")
        return v
    return constant(float(v), horizon)


def union_mesh(signals: Sequence[TimeSignal]) -> np.ndarray:
    """Sorted union of the breakpoints of several signals (same horizon)."""
    if not signals:
        raise ValueError("need at least one signal")
    T = signals[0].horizon
    for s in signals[1:]:
        if abs(s.horizon - T) > _EDGE_TOL * max(1.0, T):
            raise HorizonMismatch("signals have different horizons")
    merged = np.unique(np.concatenate([s.breakpoints for s in signals]))
    # unique() can leave nearly-duplicate floats; collapse them
    keep = np.concatenate(([True], np.diff(merged) > _EDGE_TOL * max(1.0, T)))
    return merged[keep]


def l1_distance(s1: TimeSignal, s2: TimeSignal) -> float:
    """Exact integral of |s1 - s2| over the shared horizon."""
    mesh = union_mesh([s1, s2])
    widths = np.diff(mesh)
    mids = 0.5 * (mesh[:-1] + mesh[1:])
    v1 = np.array([s1(t) for t in mids])
    v2 = np.array([s2(t) for t in mids])
    return float(np.sum(np.abs(v1 - v2) * widths))


# Coefficients of named functional forms are either plain floats or
# TimeSignals. These helpers keep that union manageable.

def coeff_eval(v, t: float) -> float:
    return v(t) if isinstance(v, TimeSignal) else float(v)


def coeff_average(v, a: float, b: float) -> float:
    return v.average(a, b) if isinstance(v, TimeSignal) else float(v)


def coeff_bounds(v) -> tuple[float, float]:
    if isinstance(v, TimeSignal):
        return v.min(), v.max()
    return float(v), float(v)


def coeff_signals(coefficients: dict) -> dict:
    """The TimeSignal-valued entries of a coefficient dict."""
    return {k: v for k, v in coefficients.items() if isinstance(v, TimeSignal)}
