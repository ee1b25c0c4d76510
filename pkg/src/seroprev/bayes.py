"""Joint posterior over survey prevalences and test accuracy.

Sensitivity and specificity get Beta priors built from a clinical evaluation
table (Jeffreys prior updated by the table). Each survey prevalence gets a
Jeffreys prior truncated below at the confirmed-case fraction. All densities
are unnormalized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .model import (ClinicalTable, DimensionMismatch, SurveyObservation,
                    apparent_pair, binom_logpmf)


@dataclass(frozen=True)
class BetaShape:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"Beta {name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def logpdf(self, x: float, one_minus_x: float | None = None) -> float:
        """Unnormalized log density ``(a-1) log x + (b-1) log(1-x)``.

        A zero exponent contributes 0 even at the matching boundary.
        """
        if one_minus_x is None:
            one_minus_x = 1.0 - x
        if x < 0.0 or one_minus_x < 0.0:
            return -math.inf
        return _xlog(self.alpha - 1.0, x) + _xlog(self.beta - 1.0, one_minus_x)


def _xlog(c: float, x: float) -> float:
    if c == 0.0:
        return 0.0
    if x == 0.0:
        return -math.inf if c > 0 else math.inf
    return c * math.log(x)


JEFFREYS = BetaShape(0.5, 0.5)


def clinical_posterior(table: ClinicalTable) -> tuple[BetaShape, BetaShape]:
    """Posterior Beta shapes for (sensitivity, specificity) under Jeffreys priors.

    >>> clinical_posterior(ClinicalTable(42, 1, 3, 34))
    (BetaShape(alpha=42.5, beta=3.5), BetaShape(alpha=34.5, beta=1.5))
    """
    sens = BetaShape(table.true_pos_test_pos + 0.5,
                     table.n_true_pos - table.true_pos_test_pos + 0.5)
    spec = BetaShape(table.true_neg_test_neg + 0.5,
                     table.n_true_neg - table.true_neg_test_neg + 0.5)
    return sens, spec


@dataclass(frozen=True)
class TruncatedJeffreysPrior:
    """Jeffreys density on theta restricted to ``theta >= lower_bound``."""

    lower_bound: float = 0.0

    def __post_init__(self):
        lb = float(self.lower_bound)
        if not 0.0 <= lb < 1.0:
            raise ValueError(f"lower_bound must lie in [0, 1), got {lb}")
        object.__setattr__(self, "lower_bound", lb)


def log_prior_theta(prior: TruncatedJeffreysPrior, theta: float) -> float:
    if not prior.lower_bound <= theta < 1.0:
        return -math.inf
    if theta == 0.0:
        return math.inf
    return -0.5 * math.log(theta) - 0.5 * math.log1p(-theta)


@dataclass(frozen=True)
class JointModel:
    surveys: tuple
    sens_prior: BetaShape
    spec_prior: BetaShape
    theta_priors: tuple = field(default=None)

    def __post_init__(self):
        surveys = tuple(self.surveys)
        if not surveys:
            raise ValueError("model needs at least one survey")
        priors = self.theta_priors
        if priors is None:
            priors = tuple(TruncatedJeffreysPrior(s.confirmed_fraction) for s in surveys)
        priors = tuple(priors)
        if len(priors) != len(surveys):
            raise DimensionMismatch("one theta prior is needed per survey")
        for i, (s, p) in enumerate(zip(surveys, priors)):
            if p.lower_bound != s.confirmed_fraction:
                raise ValueError(f"theta_priors[{i}] bound differs from survey confirmed_fraction")
        object.__setattr__(self, "surveys", surveys)
        object.__setattr__(self, "theta_priors", priors)

    @classmethod
    def from_clinical(cls, surveys: Sequence[SurveyObservation],
                      table: ClinicalTable) -> "JointModel":
        sens, spec = clinical_posterior(table)
        return cls(tuple(surveys), sens, spec)

    @property
    def n_surveys(self) -> int:
        return len(self.surveys)

    @property
    def n_params(self) -> int:
        return len(self.surveys) + 2

    @property
    def param_names(self) -> list[str]:
        return [f"theta_{i + 1}" for i in range(self.n_surveys)] + ["sensitivity", "specificity"]

    @property
    def lower_bounds(self) -> list[float]:
        return [p.lower_bound for p in self.theta_priors]


@dataclass(frozen=True)
class ParameterPoint:
    thetas: tuple
    sensitivity: float
    specificity: float

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        for t in thetas:
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"theta must lie in [0, 1], got {t}")
        for name in ("sensitivity", "specificity"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "thetas", thetas)


def _survey_loglik(s: SurveyObservation, theta, sens, one_m_sens, spec, one_m_spec):
    pos, neg = apparent_pair(theta, sens, one_m_sens, spec, one_m_spec)
    return binom_logpmf(s.x_positive, s.n_samples, pos, neg)


def posterior_terms(model: JointModel, point: ParameterPoint) -> dict:
    """Each additive piece of the log posterior, keyed by name."""
    if len(point.thetas) != model.n_surveys:
        raise DimensionMismatch(
            f"point has {len(point.thetas)} thetas, model has {model.n_surveys} surveys")
    sens, spec = point.sensitivity, point.specificity
    terms = {}
    for i, (s, prior, th) in enumerate(zip(model.surveys, model.theta_priors, point.thetas)):
        terms[f"loglik_{i + 1}"] = _survey_loglik(s, th, sens, 1.0 - sens, spec, 1.0 - spec)
        terms[f"prior_theta_{i + 1}"] = log_prior_theta(prior, th)
    terms["prior_sensitivity"] = model.sens_prior.logpdf(sens)
    terms["prior_specificity"] = model.spec_prior.logpdf(spec)
    return terms


def log_posterior(model: JointModel, point: ParameterPoint) -> float:
    """Unnormalized joint log posterior; ``-inf`` outside the support."""
    terms = posterior_terms(model, point)
    if any(v == -math.inf for v in terms.values()):
        return -math.inf
    return math.fsum(terms.values())


def log_posterior_values(model: JointModel, thetas, sens: float, one_m_sens: float,
                         spec: float, one_m_spec: float) -> float:
    """Same as :func:`log_posterior` on raw floats, with complements supplied
    separately so values near 1 keep their precision."""
    total = model.sens_prior.logpdf(sens, one_m_sens) + model.spec_prior.logpdf(spec, one_m_spec)
    for s, prior, th in zip(model.surveys, model.theta_priors, thetas):
        total += log_prior_theta(prior, th)
        total += _survey_loglik(s, th, sens, one_m_sens, spec, one_m_spec)
    if math.isnan(total):
        return -math.inf
    return total
