"""Threshold sets, rejection curves and integer step-function envelopes.

Both rejection curves and envelopes are right-continuous nondecreasing step
functions represented by their jump points: value(t) = #{jumps <= t}, capped
at m for envelopes.  All comparisons on a threshold set are decided exactly
by evaluating at a finite set of event points, never by grid discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "ThresholdSet",
    "RejectionCurve",
    "CriticalVector",
    "Envelope",
    "envelope_from_critical_vector",
    "monotone_improve",
    "parametric_simes_envelope",
    "dominates",
    "envelope_leq",
]


def _as_sorted_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size and np.any(np.diff(arr) < 0):
        raise ConfigError(f"{name} must be sorted nondecreasing")
    if np.any(np.isnan(arr)):
        raise ConfigError(f"{name} contains NaN")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ThresholdSet:
    """The set of p-value cutoffs over which bounds are simultaneous.

    Either a closed interval [lo, hi] or a finite grid of cutoffs.  Interval
    endpoints are included; all rejection comparisons use ``p <= t``.
    """

    lo: float
    hi: float
    grid_values: np.ndarray | None = None

    @staticmethod
    def interval(lo: float, hi: float) -> "ThresholdSet":
        if not (0.0 <= lo <= hi <= 1.0):
            raise ConfigError(f"interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1")
        return ThresholdSet(float(lo), float(hi), None)

    @staticmethod
    def grid(values) -> "ThresholdSet":
        arr = np.asarray(values, dtype=np.float64).ravel()
        if arr.size == 0:
            raise ConfigError("threshold grid must be nonempty")
        if np.any(np.diff(arr) <= 0):
            raise ConfigError("threshold grid must be strictly increasing")
        if arr[0] < 0.0 or arr[-1] > 1.0:
            raise ConfigError("threshold grid values must lie in [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        return ThresholdSet(float(arr[0]), float(arr[-1]), arr)

    @property
    def is_interval(self) -> bool:
        return self.grid_values is None

    def contains(self, t: float) -> bool:
        if self.is_interval:
            return self.lo <= t <= self.hi
        return bool(np.any(self.grid_values == t))

    def smallest_geq(self, t: float) -> float | None:
        """Smallest element of the set that is >= t, or None."""
        if self.is_interval:
            if t <= self.lo:
                return self.lo
            return t if t <= self.hi else None
        idx = int(np.searchsorted(self.grid_values, t, side="left"))
        return float(self.grid_values[idx]) if idx < self.grid_values.size else None

    def constraint_points(self, jumps: np.ndarray) -> np.ndarray:
        """Event points at which ``left(t) <= right(t)`` must be checked.

        For a nondecreasing right-continuous left operand with these jump
        points and a nondecreasing right operand, the supremum of their
        difference over the set is attained at one of these points.
        """
        if not self.is_interval:
            return self.grid_values
        inner = jumps[(jumps > self.lo) & (jumps <= self.hi)]
        return np.concatenate(([self.lo], inner))

    def event_points(self, *jump_arrays: np.ndarray) -> np.ndarray:
        """Sorted unique change points of the given step functions within the set."""
        if not self.is_interval:
            return self.grid_values
        parts = [np.asarray([self.lo])]
        for jumps in jump_arrays:
            parts.append(jumps[(jumps > self.lo) & (jumps <= self.hi)])
        return np.unique(np.concatenate(parts))

    def describe(self) -> str:
        if self.is_interval:
            return f"[{self.lo!r}, {self.hi!r}]"
        return "{" + ",".join(repr(v) for v in self.grid_values.tolist()) + "}"


def _step_values(jumps: np.ndarray, ts, cap: int | None) -> np.ndarray:
    counts = np.searchsorted(jumps, np.asarray(ts, dtype=np.float64), side="right")
    if cap is not None:
        counts = np.minimum(counts, cap)
    return counts


@dataclass(frozen=True, eq=False)
class RejectionCurve:
    """t -> #{i in I : p_i <= t} for one transform and one index set."""

    jumps: np.ndarray
    m_total: int

    def __post_init__(self):
        arr = _as_sorted_array(self.jumps, "rejection curve jump points")
        object.__setattr__(self, "jumps", arr)
        if arr.size > self.m_total:
            raise ConfigError("curve has more jump points than hypotheses")

    @staticmethod
    def from_pvalues(pvalues, m_total: int | None = None) -> "RejectionCurve":
        arr = np.sort(np.asarray(pvalues, dtype=np.float64).ravel())
        return RejectionCurve(arr, len(arr) if m_total is None else m_total)

    def value(self, t: float) -> int:
        return int(_step_values(self.jumps, [t], None)[0])

    def values(self, ts) -> np.ndarray:
        return _step_values(self.jumps, ts, None)


@dataclass(frozen=True, eq=False)
class CriticalVector:
    """Nondecreasing thresholds c_1 <= ... <= c_#C; entries <= 0 are allowed
    (they arise from shifted families and count at every t >= 0)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_sorted_array(self.values, "critical vector"))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class Envelope:
    """Candidate/confidence bound B(t) = min(#{jumps <= t}, m)."""

    jumps: np.ndarray
    m: int

    def __post_init__(self):
        object.__setattr__(self, "jumps", _as_sorted_array(self.jumps, "envelope jump points"))
        if self.m < 0:
            raise ConfigError("envelope cap m must be >= 0")

    def value(self, t: float) -> int:
        return int(_step_values(self.jumps, [t], self.m)[0])

    def values(self, ts) -> np.ndarray:
        return _step_values(self.jumps, ts, self.m)

    def curve_pairs(self, domain: ThresholdSet) -> list[tuple[float, int]]:
        """(t, B(t)) at all change points within the domain, starting at its infimum."""
        events = domain.event_points(self.jumps)
        vals = self.values(events)
        return [(float(t), int(v)) for t, v in zip(events, vals)]

    def same_as(self, other: "Envelope") -> bool:
        return self.m == other.m and np.array_equal(self.jumps, other.jumps)


def envelope_from_critical_vector(c, domain: ThresholdSet, m: int) -> Envelope:
    """Envelope B(t) = min(#{i : c_i <= t}, m) induced by a critical vector."""
    if m < 1:
        raise ConfigError("m must be >= 1")
    values = c.values if isinstance(c, CriticalVector) else CriticalVector(np.asarray(c)).values
    if domain is None:
        raise ConfigError("domain must be provided")
    return Envelope(values, m)


def dominates(curve: RejectionCurve, envelope: Envelope, domain: ThresholdSet) -> bool:
    """True iff curve(t) <= envelope(t) for every t in the threshold set."""
    pts = domain.constraint_points(curve.jumps)
    return bool(np.all(curve.values(pts) <= envelope.values(pts)))


def envelope_leq(a: Envelope, b: Envelope, domain: ThresholdSet) -> bool:
    """True iff a(t) <= b(t) for every t in the threshold set."""
    pts = domain.constraint_points(a.jumps)
    return bool(np.all(a.values(pts) <= b.values(pts)))


def monotone_improve(envelope: Envelope, curve: RejectionCurve, domain: ThresholdSet) -> Envelope:
    """Improve an envelope using the running count of guaranteed true findings.

    B'(t) = R(t) - max{[R(s) - B(s)]^+ : s in T, s <= t}.  Exact via the merged
    event points of both step functions; B' <= B pointwise on the set.
    """
    events = domain.event_points(curve.jumps, envelope.jumps)
    rv = curve.values(events)
    bv = envelope.values(events)
    gap = np.maximum(rv - bv, 0)
    improved = rv - np.maximum.accumulate(gap)
    increments = np.diff(improved, prepend=0)
    jumps = np.repeat(events, increments)
    return Envelope(jumps, envelope.m)


def parametric_simes_envelope(m: int, alpha: float, domain: ThresholdSet) -> Envelope:
    """Scaled-Simes envelope B(t) = #{1 <= i <= m : i*alpha/m <= t} = min(floor(m*t/alpha), m)."""
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    if m < 1:
        raise ConfigError("m must be >= 1")
    if domain is None:
        raise ConfigError("domain must be provided")
    jumps = np.arange(1, m + 1, dtype=np.float64) * alpha / m
    return Envelope(jumps, m)
