"""Totally ordered families of candidate envelopes.

Each family is parametrized by a scalar lambda; members are pointwise
comparable, and ``key(lam)`` maps the parameter to a number that increases
with the envelope (higher key = pointwise larger member).  For a rejection
curve, ``min_dominating_param`` returns the parameter of the smallest member
dominating the curve on the threshold set.

Where the parameter comes out of floating-point arithmetic, it is rounded
toward the larger envelope until the realized member actually dominates, so
the coverage guarantee never hinges on rounding luck.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaincinv

from .errors import ConfigError, FdpEnvelopeError
from .stepfun import Envelope, RejectionCurve, ThresholdSet

__all__ = [
    "CandidateFamily",
    "SimesFamily",
    "BetaQuantileFamily",
    "SamFamily",
    "MaxTFamily",
    "parse_family_spec",
    "minimal_dominating_member",
]

DEFAULT_SIMES_SHIFT = 0.001
_GUARD_MAX_STEPS = 64


def constraint_pairs(sorted_rows: np.ndarray, domain: ThresholdSet):
    """Constraint triples (pts, counts, valid) for rows of sorted p-values.

    Domination of an envelope B over the row's rejection curve on the domain
    is equivalent to B(pts) >= counts at every valid position.  For an
    interval the positions are the row's own values inside (lo, hi] with
    their one-based ranks, plus the interval infimum with the count of
    values <= lo; for a grid, every grid point with its count.
    """
    rows = np.atleast_2d(np.asarray(sorted_rows, dtype=np.float64))
    w, k = rows.shape
    if domain.is_interval:
        lo, hi = domain.lo, domain.hi
        klo = np.sum(rows <= lo, axis=1, dtype=np.int64)
        ranks = np.broadcast_to(np.arange(1, k + 1, dtype=np.int64), (w, k))
        pts = np.concatenate((np.full((w, 1), lo), rows), axis=1)
        counts = np.concatenate((klo[:, None], ranks), axis=1)
        valid = np.concatenate(
            ((klo >= 1)[:, None], (rows > lo) & (rows <= hi)), axis=1
        )
        return pts, counts, valid
    grid = domain.grid_values
    counts = np.empty((w, grid.size), dtype=np.int64)
    for j in range(w):
        counts[j] = np.searchsorted(rows[j], grid, side="right")
    pts = np.broadcast_to(grid, (w, grid.size))
    return pts, counts, counts >= 1


class CandidateFamily:
    """Base interface; concrete families implement member/key/min-dominating."""

    m: int

    def spec_string(self) -> str:
        raise NotImplementedError

    def top_param(self) -> float:
        """Parameter of the member that is identically m (dominates everything)."""
        raise NotImplementedError

    def key(self, lam):
        """Monotone map: key increases iff the member increases pointwise."""
        raise NotImplementedError

    def validate_param(self, lam) -> None:
        raise NotImplementedError

    def member(self, lam, domain: ThresholdSet | None = None) -> Envelope:
        raise NotImplementedError

    def min_dominating_params(self, sorted_rows: np.ndarray, domain: ThresholdSet) -> np.ndarray:
        """Per-row minimal dominating parameter; rows are sorted p-value vectors."""
        raise NotImplementedError

    def min_dominating_param(self, curve: RejectionCurve, domain: ThresholdSet) -> float:
        params = self.min_dominating_params(curve.jumps[None, :], domain)
        return float(params[0])


@dataclass(frozen=True)
class SimesFamily(CandidateFamily):
    """Members from critical vectors (i*lam - shift), i = 1..m.

    Larger lam means a smaller envelope.  The parameter search is capped at
    1 + shift, beyond which every member vanishes on [0, 1].
    """

    m: int
    shift: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.shift < 0:
            raise ConfigError("shift must be >= 0")

    def spec_string(self) -> str:
        return "simes" if self.shift == 0 else f"simes:shift={self.shift!r}"

    @property
    def param_cap(self) -> float:
        return 1.0 + self.shift

    def top_param(self) -> float:
        return 0.0

    def key(self, lam):
        return np.negative(lam)

    def validate_param(self, lam) -> None:
        if not (0.0 <= lam <= self.param_cap):
            raise ConfigError(f"simes lambda {lam} outside [0, {self.param_cap}]")

    def member(self, lam, domain: ThresholdSet | None = None) -> Envelope:
        self.validate_param(lam)
        jumps = np.arange(1, self.m + 1, dtype=np.float64) * lam - self.shift
        return Envelope(jumps, self.m)

    def min_dominating_params(self, sorted_rows: np.ndarray, domain: ThresholdSet) -> np.ndarray:
        pts, counts, valid = constraint_pairs(sorted_rows, domain)
        ratios = np.where(valid, (pts + self.shift) / np.maximum(counts, 1), np.inf)
        lams = np.minimum(ratios.min(axis=1), self.param_cap)
        # guard: member realization uses i*lam - shift; nudge down until it clears
        for _ in range(_GUARD_MAX_STEPS):
            bad = np.any(valid & (counts * lams[:, None] - self.shift > pts), axis=1)
            if not np.any(bad):
                break
            lams[bad] = np.nextafter(lams[bad], -np.inf)
        return lams


@dataclass(frozen=True)
class BetaQuantileFamily(CandidateFamily):
    """Members with critical values at the lam-quantile of Beta(i, m+1-i).

    Larger lam means a smaller envelope; lam = 0 is the top member.
    """

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")

    def spec_string(self) -> str:
        return "beta"

    def top_param(self) -> float:
        return 0.0

    def key(self, lam):
        return np.negative(lam)

    def validate_param(self, lam) -> None:
        if not (0.0 <= lam <= 1.0):
            raise ConfigError(f"beta lambda {lam} outside [0, 1]")

    def _shapes(self):
        i = np.arange(1, self.m + 1, dtype=np.float64)
        return i, self.m + 1 - i

    def member(self, lam, domain: ThresholdSet | None = None) -> Envelope:
        self.validate_param(lam)
        a, b = self._shapes()
        jumps = betaincinv(a, b, lam)
        if np.any(np.isnan(jumps)):
            raise FdpEnvelopeError("beta quantile inversion failed to converge")
        return Envelope(jumps, self.m)

    def min_dominating_params(self, sorted_rows: np.ndarray, domain: ThresholdSet) -> np.ndarray:
        pts, counts, valid = constraint_pairs(sorted_rows, domain)
        # B(e) >= r  iff  q_r^lam <= e  iff  lam <= I_e(r, m+1-r)
        cnt = np.maximum(counts, 1).astype(np.float64)
        x = np.clip(pts, 0.0, 1.0)
        bounds = np.where(valid, betainc(cnt, self.m + 1 - cnt, x), np.inf)
        lams = np.minimum(bounds.min(axis=1), 1.0)
        for _ in range(_GUARD_MAX_STEPS):
            q = betaincinv(cnt, self.m + 1 - cnt, np.broadcast_to(lams[:, None], cnt.shape))
            bad = np.any(valid & (q > pts), axis=1)
            if not np.any(bad):
                break
            lams[bad] = np.nextafter(lams[bad], -np.inf)
        return lams


@dataclass(frozen=True)
class SamFamily(CandidateFamily):
    """Indicator members: B(t) = lam for t <= c, else m, lam in {0..m}."""

    m: int
    c: float

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if not (0.0 <= self.c <= 1.0):
            raise ConfigError("sam cutoff c must lie in [0, 1]")

    def spec_string(self) -> str:
        return f"sam:c={self.c!r}"

    def _check_domain(self, domain: ThresholdSet | None) -> None:
        if domain is not None and not domain.contains(self.c):
            raise ConfigError(f"sam cutoff c={self.c} is not in the threshold set")

    def top_param(self) -> float:
        return self.m

    def key(self, lam):
        return np.asarray(lam, dtype=np.float64)

    def validate_param(self, lam) -> None:
        if lam != int(lam) or not (0 <= int(lam) <= self.m):
            raise ConfigError(f"sam lambda {lam} must be an integer in 0..{self.m}")

    def member(self, lam, domain: ThresholdSet | None = None) -> Envelope:
        self.validate_param(lam)
        self._check_domain(domain)
        lam = int(lam)
        jumps = np.concatenate(
            (np.zeros(lam), np.full(self.m - lam, np.nextafter(self.c, np.inf)))
        )
        return Envelope(jumps, self.m)

    def min_dominating_params(self, sorted_rows: np.ndarray, domain: ThresholdSet) -> np.ndarray:
        self._check_domain(domain)
        rows = np.atleast_2d(np.asarray(sorted_rows, dtype=np.float64))
        return np.sum(rows <= self.c, axis=1).astype(np.float64)


@dataclass(frozen=True)
class MaxTFamily(CandidateFamily):
    """Indicator members: B(t) = 0 for t < lam, else m, lam in [0, 1]."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")

    def spec_string(self) -> str:
        return "maxt"

    def top_param(self) -> float:
        return 0.0

    def key(self, lam):
        return np.negative(lam)

    def validate_param(self, lam) -> None:
        if not (0.0 <= lam <= 1.0):
            raise ConfigError(f"maxt lambda {lam} outside [0, 1]")

    def member(self, lam, domain: ThresholdSet | None = None) -> Envelope:
        self.validate_param(lam)
        return Envelope(np.full(self.m, float(lam)), self.m)

    def min_dominating_params(self, sorted_rows: np.ndarray, domain: ThresholdSet) -> np.ndarray:
        pts, counts, valid = constraint_pairs(sorted_rows, domain)
        lams = np.where(valid, pts, np.inf).min(axis=1)
        return np.clip(lams, 0.0, 1.0)


def minimal_dominating_member(
    family: CandidateFamily, curve: RejectionCurve, domain: ThresholdSet
) -> float:
    """Parameter of the smallest family member dominating the curve on the set."""
    return family.min_dominating_param(curve, domain)


def parse_family_spec(spec: str, m: int) -> CandidateFamily:
    """Parse the CLI family grammar: simes | simes:shift=V | beta | sam:c=V | maxt."""
    text = spec.strip()
    name, _, rest = text.partition(":")
    name = name.lower()
    params: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            key = key.strip().lower()
            if not key:
                raise ConfigError(f"malformed family spec {spec!r}")
            if not sep:
                if name == "simes" and key == "shift":
                    params["shift"] = DEFAULT_SIMES_SHIFT
                    continue
                raise ConfigError(f"family parameter {key!r} needs a value in {spec!r}")
            try:
                params[key] = float(value)
            except ValueError:
                raise ConfigError(f"non-numeric value for {key!r} in family spec {spec!r}")
    if name == "simes":
        unknown = set(params) - {"shift"}
        if unknown:
            raise ConfigError(f"unknown simes parameters {sorted(unknown)}")
        return SimesFamily(m, params.get("shift", 0.0))
    if name == "beta":
        if params:
            raise ConfigError("beta family takes no parameters")
        return BetaQuantileFamily(m)
    if name == "sam":
        unknown = set(params) - {"c"}
        if unknown:
            raise ConfigError(f"unknown sam parameters {sorted(unknown)}")
        if "c" not in params:
            raise ConfigError("sam family requires a cutoff, e.g. sam:c=0.005")
        return SamFamily(m, params["c"])
    if name == "maxt":
        if params:
            raise ConfigError("maxt family takes no parameters")
        return MaxTFamily(m)
    raise ConfigError(f"unknown family {name!r} (expected simes, beta, sam or maxt)")


def family_catalog() -> list[dict[str, str]]:
    """Description of the family grammar, used by the CLI and service."""
    return [
        {
            "spec": "simes",
            "parameters": "none",
            "description": "critical vector (i*lambda), scaled Simes line",
        },
        {
            "spec": f"simes:shift={DEFAULT_SIMES_SHIFT}",
            "parameters": "shift >= 0 (default 0.001 when omitted)",
            "description": "critical vector (i*lambda - shift); less sensitive to the smallest p-values",
        },
        {
            "spec": "beta",
            "parameters": "none",
            "description": "critical values at the lambda-quantile of Beta(i, m+1-i)",
        },
        {
            "spec": "sam:c=0.005",
            "parameters": "c: cutoff, must belong to the threshold set",
            "description": "indicator family; bound at c is a permutation quantile of R(c)",
        },
        {
            "spec": "maxt",
            "parameters": "none",
            "description": "indicator family; reproduces single-step min-p (maxT) rejections",
        },
    ]
