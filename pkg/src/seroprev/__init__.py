"""Prevalence estimation from serology surveys with an imperfect diagnostic test."""

from .model import (ClinicalTable, DimensionMismatch, NonIdentifiable, Prevalence,
                    SurveyObservation, TestAccuracy, apparent_prevalence, log_likelihood)
from .frequentist import (AcceptanceInterval, IntervalEstimate, clopper_pearson,
                          empty_ci_condition, mle, mle_clip_threshold,
                          rao_acceptance_interval, rao_confidence_set)
from .bayes import (BetaShape, JointModel, ParameterPoint, TruncatedJeffreysPrior,
                    clinical_posterior, log_posterior, log_prior_theta)
from .mcmc import (Diagnostics, InsufficientDraws, InvalidInit, McmcConfig,
                   NonConvergenceWarning, PosteriorSamples, PosteriorSummary,
                   detection_ratio, diagnostics, sample, summarize)
from .simulation import ScenarioReport, ScenarioSpec, draw_survey, run_scenario
from .estimators import BayesianPrevalence, FixedAccuracyPrevalence

__version__ = "0.1.0"

__all__ = [
    "ClinicalTable", "DimensionMismatch", "NonIdentifiable", "Prevalence", "SurveyObservation",
    "TestAccuracy", "apparent_prevalence", "log_likelihood",
    "AcceptanceInterval", "IntervalEstimate", "clopper_pearson", "empty_ci_condition", "mle",
    "mle_clip_threshold", "rao_acceptance_interval", "rao_confidence_set",
    "BetaShape", "JointModel", "ParameterPoint", "TruncatedJeffreysPrior", "clinical_posterior",
    "log_posterior", "log_prior_theta",
    "Diagnostics", "InsufficientDraws", "InvalidInit", "McmcConfig", "NonConvergenceWarning",
    "PosteriorSamples", "PosteriorSummary", "detection_ratio", "diagnostics", "sample",
    "summarize",
    "ScenarioReport", "ScenarioSpec", "draw_survey", "run_scenario",
    "BayesianPrevalence", "FixedAccuracyPrevalence",
]
