"""scikit-learn style wrappers.

Input ``X`` is an array of survey rows ``[n_samples, x_positive]`` with an
optional third column holding the confirmed-case fraction. Parameters live in
``__init__`` and fitted state in trailing-underscore attributes, so the
estimators support ``get_params``/``set_params``/``clone``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import frequentist as freq
from .bayes import BetaShape, JointModel
from .mcmc import McmcConfig, sample, summarize
from .model import ClinicalTable, SurveyObservation, TestAccuracy


def check_surveys(X) -> list[SurveyObservation]:
    """Validate a survey array and convert each row to a :class:`SurveyObservation`."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] not in (2, 3):
        raise ValueError(f"expected 2 or 3 columns, got {X.shape[1]}")
    counts = X[:, :2]
    if np.any(counts != np.round(counts)):
        raise ValueError("n_samples and x_positive must be whole numbers")
    out = []
    for row in X:
        cf = row[2] if X.shape[1] == 3 else 0.0
        out.append(SurveyObservation(int(row[0]), int(row[1]), float(cf)))
    return out


class FixedAccuracyPrevalence(BaseEstimator):
    """Clipped MLE and score-test confidence sets at known sensitivity/specificity.

    After ``fit``: ``prevalence_`` (MLE per row), ``clip_threshold_``,
    ``confidence_sets_`` (list of IntervalEstimate) and ``empty_`` (bool mask).
    """

    def __init__(self, sensitivity=1.0, specificity=1.0, alpha=0.05):
        self.sensitivity = sensitivity
        self.specificity = specificity
        self.alpha = alpha

    def fit(self, X, y=None):
        acc = TestAccuracy(self.sensitivity, self.specificity)
        surveys = check_surveys(X)
        self.accuracy_ = acc
        self.n_features_in_ = np.asarray(X).shape[1]
        self.prevalence_ = np.array([freq.mle(s, acc).value for s in surveys])
        self.clip_threshold_ = np.array([freq.mle_clip_threshold(s, acc) for s in surveys])
        self.confidence_sets_ = [freq.rao_confidence_set(s, acc, self.alpha) for s in surveys]
        self.empty_ = np.array([c.is_empty for c in self.confidence_sets_])
        return self

    def predict(self, X):
        check_is_fitted(self, "accuracy_")
        return np.array([freq.mle(s, self.accuracy_).value for s in check_surveys(X)])

    def predict_interval(self, X):
        """(n, 2) array of score-set endpoints; empty sets give NaN rows."""
        check_is_fitted(self, "accuracy_")
        out = []
        for s in check_surveys(X):
            ci = freq.rao_confidence_set(s, self.accuracy_, self.alpha)
            out.append((np.nan, np.nan) if ci.is_empty else (ci.lower, ci.upper))
        return np.array(out)


class BayesianPrevalence(BaseEstimator):
    """Posterior prevalence with accuracy priors from a clinical evaluation table.

    ``clinical`` is ``(tp, fp, fn, tn)``. All survey rows are fitted jointly
    and share the sensitivity and specificity.
    """

    def __init__(self, clinical=(42, 1, 3, 34), n_chains=4, n_warmup=1000, n_draws=1000,
                 seed=0, target_accept=0.4, initial_step=0.5, population=1, n_jobs=1):
        self.clinical = clinical
        self.n_chains = n_chains
        self.n_warmup = n_warmup
        self.n_draws = n_draws
        self.seed = seed
        self.target_accept = target_accept
        self.initial_step = initial_step
        self.population = population
        self.n_jobs = n_jobs

    def _model(self, surveys):
        return JointModel.from_clinical(surveys, ClinicalTable(*self.clinical))

    def fit(self, X, y=None):
        surveys = check_surveys(X)
        self.model_ = self._model(surveys)
        config = McmcConfig(self.n_chains, self.n_warmup, self.n_draws, self.seed,
                            self.target_accept, self.initial_step)
        self.samples_, self.diagnostics_ = sample(self.model_, config, n_jobs=self.n_jobs)
        self.summary_ = summarize(self.samples_, self.population)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    @property
    def sens_prior_(self) -> BetaShape:
        return self.model_.sens_prior

    def predict(self, X=None):
        """Posterior mean prevalence of each fitted survey."""
        check_is_fitted(self, "summary_")
        return np.array([self.summary_[n].mean for n in self.summary_.theta_names])

    def credible_interval(self, level=0.95):
        check_is_fitted(self, "samples_")
        k = self.model_.n_surveys
        q = (1 - level) / 2
        return np.quantile(self.samples_.draws[:, :k], [q, 1 - q], axis=0).T
