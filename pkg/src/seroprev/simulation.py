"""Monte Carlo study of the fixed-accuracy estimators on synthetic surveys."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import frequentist as freq
from .model import Prevalence, SurveyObservation, TestAccuracy, apparent_prevalence


@dataclass(frozen=True)
class ScenarioSpec:
    true_theta: float
    acc: TestAccuracy
    n_samples: int
    alpha: float = 0.05
    n_replications: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "true_theta", float(Prevalence(self.true_theta)))
        if self.n_replications < 1:
            raise ValueError("n_replications must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        freq._check_alpha(self.alpha)


@dataclass(frozen=True)
class ScenarioReport:
    n_replications: int
    empty_ci_frequency: float
    mle_mean: float
    mle_zero_frequency: float
    rao_coverage_given_nonempty: float  # nan when every replication was empty
    rao_coverage: float                 # empty sets count as misses
    cp_coverage: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _uniform(seed: int, index: int) -> float:
    return float(np.random.default_rng([int(seed), int(index)]).random())


def _inverse_cdf(spec: ScenarioSpec) -> np.ndarray:
    p = apparent_prevalence(spec.true_theta, spec.acc)
    return stats.binom.cdf(np.arange(spec.n_samples + 1), spec.n_samples, p)


def _invert(cdf: np.ndarray, u) -> np.ndarray:
    # smallest k with F(k) >= u
    x = np.searchsorted(cdf, u, side="left")
    return np.minimum(x, len(cdf) - 1)


def draw_survey(spec: ScenarioSpec, replication_index: int) -> SurveyObservation:
    """Replication ``replication_index`` of the scenario, fixed by (seed, index)."""
    x = int(_invert(_inverse_cdf(spec), _uniform(spec.seed, replication_index)))
    return SurveyObservation(spec.n_samples, x, label=f"rep{replication_index}")


def draw_counts(spec: ScenarioSpec) -> np.ndarray:
    """Positive counts for every replication; element i equals ``draw_survey(spec, i)``."""
    cdf = _inverse_cdf(spec)
    u = np.array([_uniform(spec.seed, i) for i in range(spec.n_replications)])
    return _invert(cdf, u)


def run_scenario(spec: ScenarioSpec) -> ScenarioReport:
    """Draw every replication and tally emptiness, MLE behaviour and coverage.

    Each distinct count is analysed once and weighted by how often it occurred.
    """
    xs = draw_counts(spec)
    values, counts = np.unique(xs, return_counts=True)
    reps = spec.n_replications
    theta = spec.true_theta
    n_empty = n_rao_cov = n_cp_cov = n_zero = 0
    mle_sum = 0.0
    identifiable = not spec.acc.is_degenerate
    for x, c in zip(values.tolist(), counts.tolist()):
        survey = SurveyObservation(spec.n_samples, x)
        rao = freq.rao_confidence_set(survey, spec.acc, spec.alpha)
        if rao.is_empty:
            n_empty += c
        elif rao.contains(theta):
            n_rao_cov += c
        if freq.clopper_pearson(survey, spec.alpha).contains(theta):
            n_cp_cov += c
        if identifiable:
            est = freq.mle(survey, spec.acc).value
            mle_sum += c * est
            n_zero += c * (est == 0.0)
    nonempty = reps - n_empty
    return ScenarioReport(
        n_replications=reps,
        empty_ci_frequency=n_empty / reps,
        mle_mean=mle_sum / reps if identifiable else float("nan"),
        mle_zero_frequency=n_zero / reps if identifiable else float("nan"),
        rao_coverage_given_nonempty=n_rao_cov / nonempty if nonempty else float("nan"),
        rao_coverage=n_rao_cov / reps,
        cp_coverage=n_cp_cov / reps,
    )

