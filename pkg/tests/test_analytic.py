import math

import numpy as np
import pytest

from chebyprod import analytic
from chebyprod.analytic import CHEBYSHEV, MARKOV, TRIVIAL
from chebyprod.errors import InfeasibleSpecError, InvalidSpecError
from chebyprod.events import Event
from chebyprod.moments import MomentSpec

SPEC = MomentSpec(4, 1.0, 0.5, 0.0)


def test_chebyshev_univariate_branches():
    assert analytic.chebyshev_univariate(1.0, 1.0, 0.5).regime == TRIVIAL
    assert analytic.chebyshev_univariate(1.0, 1.0, 3.0, nonnegative=True).value == pytest.approx(0.2, abs=1e-15)
    markov = analytic.chebyshev_univariate(1.0, 1.0, 1.5, nonnegative=True)
    assert markov.regime == MARKOV
    assert markov.value == pytest.approx(1.0 / 1.5, abs=1e-15)
    # without the support restriction the Cantelli branch applies
    assert analytic.chebyshev_univariate(1.0, 1.0, 1.5).value == pytest.approx(0.8, abs=1e-15)


def test_chebyshev_extremal_distribution_attains_bound():
    dist = analytic.chebyshev_extremal_distribution(0.0, 1.0, 2.0)
    assert abs(dist.mean()) < 1e-15
    assert abs(dist.second_moment() - 1.0) < 1e-15
    assert abs(dist.event_probability(Event("max", "geq", 2.0)) - 0.2) < 1e-15
    with pytest.raises(InvalidSpecError):
        analytic.chebyshev_extremal_distribution(1.0, 1.0, 1.0)


def test_sum_bound_regimes():
    spec = MomentSpec(5, 1.0, 0.5, 0.0)
    assert analytic.sum_bound(spec, 4.0, "geq").regime == TRIVIAL
    assert analytic.sum_bound(spec, 5.2, "geq").value == pytest.approx(5.0 / 5.2, abs=1e-15)
    assert analytic.sum_bound(spec, 7.0, "geq").value == pytest.approx(1.25 / 5.25, abs=1e-15)
    assert analytic.sum_bound(spec, 5.2, "geq", nonnegative=False).value == pytest.approx(1.25 / 1.29, abs=1e-12)
    assert analytic.sum_bound(spec, 3.0, "leq").value == pytest.approx(1.25 / 5.25, abs=1e-15)
    assert analytic.sum_bound(spec, 6.0, "leq").value == 1.0
    with pytest.raises(InvalidSpecError):
        analytic.sum_bound(spec, 3.0, "above")


def test_sum_bound_needs_feasible_spec():
    with pytest.raises(InfeasibleSpecError):
        analytic.sum_bound(MomentSpec(3, 0.1, 1.0, -0.2), 1.0, "geq")


def test_relaxed_right_bound_example():
    bound = analytic.relaxed_right_bound(SPEC, 1.5 ** 4)
    assert bound.regime == CHEBYSHEV
    assert abs(bound.value - 0.2) < 1e-12


def test_relaxed_right_bound_branches():
    assert analytic.relaxed_right_bound(SPEC, 0.5).value == 1.0
    markov = analytic.relaxed_right_bound(SPEC, 1.05 ** 4)
    assert markov.regime == MARKOV
    assert abs(markov.value - 1.0 / 1.05) < 1e-12


def test_relaxed_never_exceeds_mo():
    for root in np.linspace(1.01, 3.0, 50):
        gamma = root ** 4
        assert analytic.relaxed_right_bound(SPEC, gamma).value <= analytic.mo_bound(SPEC, gamma).value + 1e-12


def test_extremal_distribution_attains_relaxed_bound():
    gamma = 1.5 ** 4
    dist = analytic.extremal_distribution(SPEC, gamma)
    assert abs(dist.mean() - 1.0) < 1e-12
    assert abs(dist.event_probability(Event("product", "geq", gamma)) - 0.2) < 1e-12
    d_i, d_total = dist.covariance_deficit(SPEC)
    assert d_i >= -1e-12 and d_total >= -1e-12


def test_gamma_bar():
    threshold = analytic.gamma_bar_threshold(SPEC)
    assert threshold.hypothesis_holds
    assert abs(threshold.root - (1.0 + (1.0 + math.sqrt(13.0)) / 24.0)) < 1e-12
    assert abs(threshold.log_value - 4.0 * math.log(threshold.root)) < 1e-12
    assert not analytic.gamma_bar_threshold(MomentSpec(4, 1.0, 4.0, 0.0)).hypothesis_holds


def test_perturbed_distribution_is_exactly_feasible():
    gamma = 1.5 ** 4
    dist = analytic.perturbed_extremal_distribution(SPEC, gamma)
    dist.check()
    assert dist.max_residual(SPEC) < 1e-12
    assert abs(dist.event_probability(Event("product", "geq", gamma)) - 0.2) < 1e-12


def test_perturbed_distribution_below_gamma_bar():
    with pytest.raises(InvalidSpecError):
        analytic.perturbed_extremal_distribution(SPEC, 1.1 ** 4)


def test_absorption(absorbed_spec):
    assert analytic.absorption_threshold(absorbed_spec) == 3.0
    assert analytic.is_absorbed(absorbed_spec)
    assert not analytic.is_absorbed(SPEC)
    dist = analytic.absorbing_distribution(absorbed_spec)
    dist.check()
    assert dist.max_residual(absorbed_spec) < 1e-12
    assert dist.event_probability(Event("product", "leq", 1e-9)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidSpecError):
        analytic.absorbing_distribution(SPEC)


def test_mo_bound():
    assert analytic.mo_bound(SPEC, 0.5).regime == TRIVIAL
    assert abs(analytic.mo_bound(SPEC, 1.5 ** 4).value - 0.2) < 1e-12


def test_log_space_bound():
    bound = analytic.log_space_bound(0.0, 0.1, 0.0, 4, math.e)
    assert abs(bound.value - 0.04 / 1.04) < 1e-12
    assert analytic.log_space_bound(0.0, 0.1, 0.0, 4, 0.5).regime == TRIVIAL
    with pytest.raises(InvalidSpecError):
        analytic.log_space_bound(0.0, 0.1, -0.5, 4, 2.0)
