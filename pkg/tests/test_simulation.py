import math
from fractions import Fraction

import numpy as np
import pytest

from seroprev import frequentist as freq
from seroprev.model import SurveyObservation, TestAccuracy
from seroprev.simulation import ScenarioSpec, draw_counts, draw_survey, run_scenario

PAPER_ACC = TestAccuracy(42 / 45, 34 / 35)


def exact_binom_cdf(k, n, p: Fraction) -> float:
    """P(X <= k) for Binom(n, p) in exact rational arithmetic."""
    return float(sum(math.comb(n, i) * p ** i * (1 - p) ** (n - i) for i in range(k + 1)))


def test_draw_degenerate_cases():
    zero = ScenarioSpec(0.0, TestAccuracy(0.9, 1.0), 50, n_replications=10, seed=1)
    one = ScenarioSpec(1.0, TestAccuracy(1.0, 0.8), 50, n_replications=10, seed=1)
    for i in range(10):
        assert draw_survey(zero, i).x_positive == 0
        assert draw_survey(one, i).x_positive == 50


def test_draw_is_deterministic_per_index():
    spec = ScenarioSpec(0.2, PAPER_ACC, 300, n_replications=50, seed=42)
    xs = draw_counts(spec)
    assert [draw_survey(spec, i).x_positive for i in range(50)] == xs.tolist()
    assert np.array_equal(xs, draw_counts(spec))
    longer = ScenarioSpec(0.2, PAPER_ACC, 300, n_replications=80, seed=42)
    assert np.array_equal(draw_counts(longer)[:50], xs)


def test_draw_mean_matches_binomial():
    spec = ScenarioSpec(0.0, PAPER_ACC, 1500, n_replications=100_000, seed=7)
    xs = draw_counts(spec)
    p = 1 / 35
    se = math.sqrt(1500 * p * (1 - p) / xs.size)
    assert abs(xs.mean() - 1500 * p) < 3 * se


def test_empty_frequency_matches_exact_cdf():
    spec = ScenarioSpec(0.0, PAPER_ACC, 1500, n_replications=100_000, seed=2021)
    inf_l, _ = freq.acceptance_bound_extrema(1500, PAPER_ACC)
    k = math.ceil(inf_l) - 1          # largest X with X < inf l
    assert k == 30
    exact = exact_binom_cdf(k, 1500, Fraction(1, 35))
    assert exact == pytest.approx(0.023212, abs=1e-6)
    rep = run_scenario(spec)
    se = math.sqrt(exact * (1 - exact) / spec.n_replications)
    assert abs(rep.empty_ci_frequency - exact) < 3 * se


def test_wilson_coverage_perfect_test():
    spec = ScenarioSpec(0.5, TestAccuracy(1.0, 1.0), 1000, n_replications=100_000, seed=3)
    rep = run_scenario(spec)
    assert rep.empty_ci_frequency == 0.0
    assert 0.94 <= rep.rao_coverage_given_nonempty <= 0.96
    assert rep.rao_coverage == rep.rao_coverage_given_nonempty


def test_single_replication_frequencies():
    for theta in (0.0, 0.05, 0.3):
        rep = run_scenario(ScenarioSpec(theta, PAPER_ACC, 200, n_replications=1, seed=5))
        for v in (rep.empty_ci_frequency, rep.mle_zero_frequency, rep.cp_coverage,
                  rep.rao_coverage):
            assert v in (0.0, 1.0)
        assert rep.rao_coverage_given_nonempty in (0.0, 1.0) or (
            rep.empty_ci_frequency == 1.0 and math.isnan(rep.rao_coverage_given_nonempty))


def test_report_consistency_with_draws():
    spec = ScenarioSpec(0.01, PAPER_ACC, 400, n_replications=5000, seed=11)
    xs = draw_counts(spec)
    rep = run_scenario(spec)
    threshold = 400 * (1 - PAPER_ACC.specificity)
    assert rep.mle_zero_frequency == np.mean(xs <= threshold)
    empty = [freq.empty_ci_condition(SurveyObservation(400, int(x)), PAPER_ACC) for x in xs]
    assert rep.empty_ci_frequency == np.mean(empty)
    nonempty = 1 - rep.empty_ci_frequency
    assert rep.empty_ci_frequency + nonempty == 1.0
    assert rep.rao_coverage == pytest.approx(rep.rao_coverage_given_nonempty * nonempty)
    mles = [freq.mle(SurveyObservation(400, int(x)), PAPER_ACC).value for x in xs]
    assert rep.mle_mean == pytest.approx(np.mean(mles), rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(0.1, PAPER_ACC, 100, n_replications=0)
    with pytest.raises(ValueError):
        ScenarioSpec(1.5, PAPER_ACC, 100)
    with pytest.raises(ValueError):
        ScenarioSpec(0.1, PAPER_ACC, 100, alpha=1.0)


def test_non_identifiable_scenario():
    rep = run_scenario(ScenarioSpec(0.2, TestAccuracy(0.4, 0.6), 100, n_replications=20))
    assert math.isnan(rep.mle_mean)
