"""Fixed-accuracy estimators: clipped MLE, Rao score confidence set, Clopper-Pearson."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy import special

from .model import (NonIdentifiable, Prevalence, SurveyObservation,
                    TestAccuracy, apparent_prevalence)

NONEMPTY = "nonempty"
EMPTY = "empty"


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    return alpha


def chi2_quantile(alpha: float, df: int = 1) -> float:
    """Upper-alpha quantile of chi-square(df), via the inverse regularized gamma."""
    alpha = _check_alpha(alpha)
    return 2.0 * float(special.gammaincinv(df / 2.0, 1.0 - alpha))


@dataclass(frozen=True)
class IntervalEstimate:
    status: str
    lower: Optional[float] = None
    upper: Optional[float] = None
    level: float = 0.95

    def __post_init__(self):
        if self.status == NONEMPTY:
            if self.lower is None or self.upper is None:
                raise ValueError("nonempty interval needs both endpoints")
            if not 0.0 <= self.lower <= self.upper <= 1.0:
                raise ValueError(f"bad interval [{self.lower}, {self.upper}]")
        elif self.status == EMPTY:
            if self.lower is not None or self.upper is not None:
                raise ValueError("empty interval carries no endpoints")
        else:
            raise ValueError(f"unknown status {self.status!r}")

    @classmethod
    def empty(cls, level: float) -> "IntervalEstimate":
        return cls(EMPTY, None, None, level)

    @property
    def is_empty(self) -> bool:
        return self.status == EMPTY

    def contains(self, value: float) -> bool:
        return not self.is_empty and self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return 0.0 if self.is_empty else self.upper - self.lower


@dataclass(frozen=True)
class AcceptanceInterval:
    """Acceptance region for X, in counts, of the score test at one null value."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower exceeds upper")

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper


def mle(survey: SurveyObservation, acc: TestAccuracy) -> Prevalence:
    """Maximum likelihood prevalence, clipped to 0 or 1 at the boundaries.

    A tie at ``X == N(1 - specificity)`` resolves to 0.
    """
    if acc.is_degenerate:
        raise NonIdentifiable("sensitivity + specificity == 1: theta is not identifiable")
    n, x = survey.n_samples, survey.x_positive
    zero_at = n * (1.0 - acc.specificity)
    one_at = n * acc.sensitivity
    if acc.youden > 0:
        if x <= zero_at:
            return Prevalence(0.0)
        if x >= one_at:
            return Prevalence(1.0)
    else:
        if x >= zero_at:
            return Prevalence(0.0)
        if x <= one_at:
            return Prevalence(1.0)
    est = (x / n - (1.0 - acc.specificity)) / acc.youden
    return Prevalence(min(1.0, max(0.0, est)))


def mle_clip_threshold(survey: SurveyObservation, acc: TestAccuracy) -> float:
    """Count ``N(1 - specificity)`` at or below which the MLE is clipped to zero."""
    return survey.n_samples * (1.0 - acc.specificity)


def _half_width(n: int, t: float, crit: float) -> float:
    return math.sqrt(max(0.0, n * crit * t * (1.0 - t)))


def rao_acceptance_interval(theta0, n: int, acc: TestAccuracy,
                            alpha: float = 0.05) -> AcceptanceInterval:
    """Score-test acceptance interval ``N t -/+ sqrt(N chi2 t (1-t))`` for ``t = theta0*``.

    Endpoints are clipped to ``[0, N]``; clipping never changes which integer X
    are accepted.
    """
    crit = chi2_quantile(alpha)
    t = apparent_prevalence(theta0, acc)
    s = _half_width(n, t, crit)
    return AcceptanceInterval(max(0.0, n * t - s), min(float(n), n * t + s))


def acceptance_bound_extrema(n: int, acc: TestAccuracy,
                             alpha: float = 0.05) -> tuple[float, float]:
    """``(inf l, sup u)`` of the raw acceptance bounds over theta0 in [0, 1].

    ``l(t) = N t - k sqrt(t(1-t))`` is convex in t and ``u`` concave, so each
    extremum sits at an endpoint of the theta* range or at the single
    stationary point, ``t = (1 -/+ sqrt(N / (N + chi2))) / 2``.
    """
    crit = chi2_quantile(alpha)
    a, b = acc.apparent_range
    k = math.sqrt(n * crit)
    r = math.sqrt(n / (n + crit))

    def lower(t):
        return n * t - k * math.sqrt(t * (1.0 - t))

    def upper(t):
        return n * t + k * math.sqrt(t * (1.0 - t))

    lo_pts = [a, b]
    t_min = 0.5 * (1.0 - r)
    if a < t_min < b:
        lo_pts.append(t_min)
    hi_pts = [a, b]
    t_max = 0.5 * (1.0 + r)
    if a < t_max < b:
        hi_pts.append(t_max)
    return min(lower(t) for t in lo_pts), max(upper(t) for t in hi_pts)


def empty_ci_condition(survey: SurveyObservation, acc: TestAccuracy,
                       alpha: float = 0.05) -> bool:
    """True when X falls outside every acceptance interval, so the score set is empty."""
    inf_l, sup_u = acceptance_bound_extrema(survey.n_samples, acc, alpha)
    x = survey.x_positive
    return x < inf_l or x > sup_u


def wilson_bounds(x: int, n: int, crit: float) -> tuple[float, float]:
    """Roots in t of ``(x - n t)^2 = crit * n t (1 - t)``."""
    center = 2.0 * x + crit
    disc = crit * (crit + 4.0 * x * (1.0 - x / n))
    root = math.sqrt(max(0.0, disc))
    denom = 2.0 * (n + crit)
    lo = (center - root) / denom
    hi = (center + root) / denom
    # exact values at the edges; the formula loses them to rounding
    if x == 0:
        lo = 0.0
    if x == n:
        hi = 1.0
    return max(0.0, lo), min(1.0, hi)


def rao_confidence_set(survey: SurveyObservation, acc: TestAccuracy,
                       alpha: float = 0.05) -> IntervalEstimate:
    """Invert the score test: all theta0 in [0, 1] whose acceptance interval holds X."""
    crit = chi2_quantile(alpha)
    level = 1.0 - alpha
    t_lo, t_hi = wilson_bounds(survey.x_positive, survey.n_samples, crit)
    a, b = acc.apparent_range
    lo, hi = max(t_lo, a), min(t_hi, b)
    if lo > hi:
        return IntervalEstimate.empty(level)
    if acc.is_degenerate:
        return IntervalEstimate(NONEMPTY, 0.0, 1.0, level)
    fp, slope = 1.0 - acc.specificity, acc.youden
    ends = sorted(((lo - fp) / slope, (hi - fp) / slope))
    return IntervalEstimate(NONEMPTY, min(1.0, max(0.0, ends[0])),
                            min(1.0, max(0.0, ends[1])), level)


def clopper_pearson(survey: SurveyObservation, alpha: float = 0.05) -> IntervalEstimate:
    """Exact two-sided interval for a binomial proportion under a perfect test."""
    alpha = _check_alpha(alpha)
    n, x = survey.n_samples, survey.x_positive
    tail = math.log(alpha / 2) / n
    if x == 0:
        lower = 0.0
    elif x == n:
        lower = math.exp(tail)
    else:
        lower = float(special.betaincinv(x, n - x + 1, alpha / 2))
    if x == n:
        upper = 1.0
    elif x == 0:
        upper = -math.expm1(tail)
    else:
        upper = float(special.betaincinv(x + 1, n - x, 1 - alpha / 2))
    return IntervalEstimate(NONEMPTY, lower, upper, 1.0 - alpha)
