"""Binomial observation model for surveys read through an imperfect test.

A survey of ``N`` samples returns ``X`` test positives with
``X ~ Binom(N, theta*)`` where the apparent prevalence is
``theta* = theta * sensitivity + (1 - theta) * (1 - specificity)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral


class NonIdentifiable(ValueError):
    """Raised when sensitivity + specificity == 1, so theta does not enter the model."""


class DimensionMismatch(ValueError):
    pass


def _check_count(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ValueError(f"{name} must be an integer count, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return int(value)


@dataclass(frozen=True)
class SurveyObservation:
    """One survey round: ``x_positive`` test positives out of ``n_samples``.

    ``confirmed_fraction`` is the cumulative confirmed case count divided by the
    population at the end of collection. It is a hard lower bound on prevalence
    in the Bayesian model and is ignored by the frequentist estimators.
    """

    n_samples: int
    x_positive: int
    confirmed_fraction: float = 0.0
    label: str = ""

    def __post_init__(self):
        n = _check_count("n_samples", self.n_samples)
        x = _check_count("x_positive", self.x_positive)
        if n < 1:
            raise ValueError("n_samples must be at least 1")
        if x > n:
            raise ValueError(f"x_positive ({x}) exceeds n_samples ({n})")
        cf = float(self.confirmed_fraction)
        if not 0.0 <= cf < 1.0:
            raise ValueError(f"confirmed_fraction must lie in [0, 1), got {cf}")
        object.__setattr__(self, "n_samples", n)
        object.__setattr__(self, "x_positive", x)
        object.__setattr__(self, "confirmed_fraction", cf)

    @property
    def observed_fraction(self) -> float:
        return self.x_positive / self.n_samples


@dataclass(frozen=True)
class TestAccuracy:
    """Fixed sensitivity and specificity of a diagnostic test, each in (0, 1]."""

    __test__ = False  # keep pytest from collecting this as a test class

    sensitivity: float
    specificity: float

    def __post_init__(self):
        for name in ("sensitivity", "specificity"):
            v = float(getattr(self, name))
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
            object.__setattr__(self, name, v)

    @property
    def youden(self) -> float:
        """sensitivity + specificity - 1; the slope of theta* in theta."""
        return self.sensitivity + self.specificity - 1.0

    @property
    def is_degenerate(self) -> bool:
        return self.sensitivity + self.specificity == 1.0

    @property
    def false_positive_rate(self) -> float:
        return 1.0 - self.specificity

    @property
    def apparent_range(self) -> tuple[float, float]:
        """Range of theta* as theta sweeps [0, 1]."""
        a, b = 1.0 - self.specificity, self.sensitivity
        return (min(a, b), max(a, b))


@dataclass(frozen=True)
class ClinicalTable:
    """2x2 counts from evaluating the test on samples of known status.

    Naming follows ``<true state>_test_<result>``: e.g. ``true_neg_test_pos``
    is a false positive.
    """

    true_pos_test_pos: int
    true_neg_test_pos: int
    true_pos_test_neg: int
    true_neg_test_neg: int

    def __post_init__(self):
        for name in ("true_pos_test_pos", "true_neg_test_pos",
                     "true_pos_test_neg", "true_neg_test_neg"):
            object.__setattr__(self, name, _check_count(name, getattr(self, name)))

    @property
    def n_true_pos(self) -> int:
        return self.true_pos_test_pos + self.true_pos_test_neg

    @property
    def n_true_neg(self) -> int:
        return self.true_neg_test_pos + self.true_neg_test_neg

    def point_accuracy(self) -> TestAccuracy:
        """Plug-in sensitivity and specificity (correct calls / column total)."""
        if self.n_true_pos == 0 or self.n_true_neg == 0:
            raise ValueError("clinical table needs samples of both true states")
        return TestAccuracy(self.true_pos_test_pos / self.n_true_pos,
                            self.true_neg_test_neg / self.n_true_neg)


@dataclass(frozen=True)
class Prevalence:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"prevalence must lie in [0, 1], got {v}")
        object.__setattr__(self, "value", v)

    def __float__(self):
        return self.value


def _as_float(theta) -> float:
    return theta.value if isinstance(theta, Prevalence) else float(theta)


def apparent_prevalence(theta, acc: TestAccuracy) -> float:
    """Probability that a sampled individual tests positive."""
    t = _as_float(theta)
    return t * acc.sensitivity + (1.0 - t) * (1.0 - acc.specificity)


def apparent_pair(theta: float, sens: float, one_minus_sens: float,
                  spec: float, one_minus_spec: float) -> tuple[float, float]:
    """Return ``(theta*, 1 - theta*)`` without forming ``1 - theta*`` by subtraction.

    Both complements are passed in so callers holding e.g. ``1 - spec`` to
    full relative precision keep it.
    """
    pos = theta * sens + (1.0 - theta) * one_minus_spec
    neg = theta * one_minus_sens + (1.0 - theta) * spec
    return pos, neg


def log_binom_coef(n: int, x: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(x + 1) - math.lgamma(n - x + 1)


def binom_logpmf(x: int, n: int, p: float, q: float | None = None) -> float:
    """Log binomial mass with exact handling of p in {0, 1}.

    ``q`` is ``1 - p`` if the caller has it at better precision.
    """
    if q is None:
        q = 1.0 - p
    out = log_binom_coef(n, x)
    if x > 0:
        if p <= 0.0:
            return -math.inf
        out += x * math.log(p)
    if n - x > 0:
        if q <= 0.0:
            return -math.inf
        out += (n - x) * math.log(q)
    return out


def log_likelihood(survey: SurveyObservation, theta, acc: TestAccuracy) -> float:
    """Log Binom(N, theta*) mass at the observed X, binomial coefficient included."""
    t = _as_float(theta)
    pos, neg = apparent_pair(t, acc.sensitivity, 1.0 - acc.sensitivity,
                             acc.specificity, 1.0 - acc.specificity)
    return binom_logpmf(survey.x_positive, survey.n_samples, pos, neg)
