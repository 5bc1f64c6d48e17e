"""Poisson emission times, uniformity mod 1, and exact discrepancy measures.

Emission times are partial sums of exponential waits; wrapped around the
unit-circumference circle their fractional parts become uniform, which is
what justifies reading the label off the arrival time.  Discrepancies are
computed exactly from the sorted points: the star (anchored) form by the
classical order-statistic formula, the extreme form as the sum of the
one-sided parts, with a certified [star, 2*star] bracket once exact
evaluation is disabled by size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

EXACT_EXTREME_LIMIT = 10_000


@dataclass(frozen=True)
class EmissionTrace:
    """Waiting times, cumulative emission times, and their fractional parts."""

    theta: float
    waits: np.ndarray = field(repr=False, compare=False)
    cums: np.ndarray = field(repr=False, compare=False)
    fracs: np.ndarray = field(repr=False, compare=False)

    @property
    def count(self) -> int:
        return int(self.waits.size)


def generate_trace(theta: float, k: int, rng: np.random.Generator) -> EmissionTrace:
    """k exponential waits with mean theta, by inverse transform -theta*log(1-U)."""
    if theta <= 0.0:
        raise ValueError(f"theta must be positive, got {theta}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    u = rng.random(k)
    waits = -theta * np.log1p(-u)
    cums = np.cumsum(waits)
    fracs = cums - np.floor(cums)
    for arr in (waits, cums, fracs):
        arr.setflags(write=False)
    return EmissionTrace(theta=float(theta), waits=waits, cums=cums, fracs=fracs)


def _checked_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1)
    if pts.size == 0:
        raise ValueError("point set must be nonempty")
    if np.any(pts < 0.0) or np.any(pts >= 1.0):
        raise ValueError("points must lie in [0, 1)")
    return pts


def interval_count(points, alpha: float, beta: float) -> int:
    """A_k(alpha, beta): number of points in the half-open interval [alpha, beta)."""
    pts = _checked_points(points)
    return int(np.count_nonzero((pts >= alpha) & (pts < beta)))


def star_discrepancy(points) -> float:
    """Exact anchored discrepancy D*_k from the sorted points:
    max_i max(i/k - x_(i), x_(i) - (i-1)/k)."""
    pts = np.sort(_checked_points(points))
    k = pts.size
    grid = np.arange(1, k + 1) / k
    return float(np.maximum(grid - pts, pts - (grid - 1.0 / k)).max())


def _one_sided_parts(points) -> tuple[float, float]:
    pts = np.sort(_checked_points(points))
    k = pts.size
    grid = np.arange(1, k + 1) / k
    d_plus = float((grid - pts).max())
    d_minus = float((pts - (grid - 1.0 / k)).max())
    return max(d_plus, 0.0), max(d_minus, 0.0)


@dataclass(frozen=True)
class DiscrepancyBracket:
    """Certified enclosure of the extreme discrepancy; exact when lower == upper."""

    lower: float
    upper: float
    exact: bool

    @property
    def value(self) -> float:
        if not self.exact:
            raise ValueError("bracket is not exact; use lower/upper")
        return self.lower


def extreme_discrepancy(points, exact_limit: int = EXACT_EXTREME_LIMIT) -> DiscrepancyBracket:
    """Extreme discrepancy over all half-open subintervals of [0, 1).

    For k <= exact_limit the value is exact (sum of the one-sided star
    parts); beyond that the certified bracket [D*, min(2 D*, 1)] is returned
    rather than an uncertified estimate.
    """
    pts = _checked_points(points)
    if pts.size <= exact_limit:
        d_plus, d_minus = _one_sided_parts(pts)
        val = d_plus + d_minus
        return DiscrepancyBracket(lower=val, upper=val, exact=True)
    star = star_discrepancy(pts)
    return DiscrepancyBracket(lower=star, upper=min(2.0 * star, 1.0), exact=False)


@dataclass(frozen=True)
class DiscrepancyStats:
    """Summary of one point set: size, star value, extreme bracket."""

    k: int
    star: float
    extreme: DiscrepancyBracket
    points: np.ndarray = field(repr=False, compare=False)

    def count(self, alpha: float, beta: float) -> int:
        return interval_count(self.points, alpha, beta)


def discrepancy_stats(points, exact_limit: int = EXACT_EXTREME_LIMIT) -> DiscrepancyStats:
    pts = _checked_points(points)
    pts = pts.copy()
    pts.setflags(write=False)
    return DiscrepancyStats(
        k=int(pts.size),
        star=star_discrepancy(pts),
        extreme=extreme_discrepancy(pts, exact_limit=exact_limit),
        points=pts,
    )


def label_from_time(x: float, label_count: int) -> int:
    """Label m = floor({x} * N) + 1 read off the wrapped emission time."""
    if label_count < 1:
        raise ValueError("label count must be >= 1")
    frac = float(x) - math.floor(float(x))
    m = int(frac * label_count) + 1
    return min(m, label_count)


def labels_from_trace(trace: EmissionTrace, label_count: int) -> np.ndarray:
    """Vectorized labels for every emission in a trace (1-based)."""
    if label_count < 1:
        raise ValueError("label count must be >= 1")
    m = (trace.fracs * label_count).astype(np.int64) + 1
    return np.minimum(m, label_count)


@dataclass(frozen=True)
class RateFit:
    """Log-log fit of the star discrepancy against the sample size."""

    ks: tuple[int, ...]
    star_values: tuple[float, ...]
    slope: float
    intercept: float
    residuals: tuple[float, ...]


def fit_rate(ks, star_values) -> RateFit:
    ks = tuple(int(k) for k in ks)
    stars = tuple(float(s) for s in star_values)
    logk = np.log(np.asarray(ks, dtype=float))
    logd = np.log(np.asarray(stars, dtype=float))
    slope, intercept = np.polyfit(logk, logd, 1)
    resid = logd - (slope * logk + intercept)
    return RateFit(
        ks=ks,
        star_values=stars,
        slope=float(slope),
        intercept=float(intercept),
        residuals=tuple(float(r) for r in resid),
    )


def robbins_rate_check(theta: float, ks, rng: np.random.Generator) -> RateFit:
    """Empirical decay rate of D*_k along prefixes of one Poisson trace.

    The asymptotic guarantee is k^(-1/2) up to poly-log factors, so the
    fitted slope should sit near -1/2.
    """
    ks = sorted(int(k) for k in ks)
    if not ks or ks[0] < 1:
        raise ValueError("ks must be positive sizes")
    trace = generate_trace(theta, ks[-1], rng)
    stars = [star_discrepancy(trace.fracs[:k]) for k in ks]
    return fit_rate(ks, stars)


@dataclass(frozen=True)
class GateResult:
    """Label frequencies before and after detector-readiness gating."""

    label_count: int
    ungated_counts: np.ndarray = field(repr=False, compare=False)
    gated_counts: np.ndarray = field(repr=False, compare=False)
    total: int = 0
    accepted: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.total if self.total else 0.0


def detector_gate(
    p1: float,
    p2: float,
    label_count: int,
    k: int,
    theta: float,
    rng: np.random.Generator,
) -> GateResult:
    """Gate each emission by two independent readiness draws.

    Readiness is independent of the emission time, so conditioning on both
    devices being ready leaves the label law unchanged.
    """
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0.0 < p <= 1.0:
            raise ValueError(f"{name} must lie in (0, 1], got {p}")
    trace = generate_trace(theta, k, rng)
    labels = labels_from_trace(trace, label_count)
    ready = (rng.random(k) < p1) & (rng.random(k) < p2)
    ungated = np.bincount(labels, minlength=label_count + 1)[1:]
    gated = np.bincount(labels[ready], minlength=label_count + 1)[1:]
    for arr in (ungated, gated):
        arr.setflags(write=False)
    return GateResult(
        label_count=label_count,
        ungated_counts=ungated,
        gated_counts=gated,
        total=int(k),
        accepted=int(ready.sum()),
    )


def uniform_chi_square(counts) -> tuple[float, int]:
    """Chi-square statistic and dof against the uniform label law."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty counts")
    expected = total / counts.size
    stat = float(((counts - expected) ** 2 / expected).sum())
    return stat, counts.size - 1


def chi_square_quantile(level: float, dof: int) -> float:
    """Upper quantile of the chi-square distribution (e.g. level=0.999)."""
    return float(sstats.chi2.ppf(level, dof))
