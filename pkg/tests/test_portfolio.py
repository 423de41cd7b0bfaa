import math

import numpy as np
import pandas as pd
import pytest

from chebyprod.config_loader import SolverSettings
from chebyprod.errors import InvalidSpecError
from chebyprod.moments import MomentSpec
from chebyprod.portfolio import (
    ABSORPTION, DETERMINISTIC, FixedMixPortfolio, ReturnPanel, WVaRResult, best_frontier_point,
    estimate_moments, frank_wolfe, frontier_sweep, max_expectation_portfolio, minimum_variance_portfolio,
    vertex_tau, wealth_spec, worst_case_var,
)
from chebyprod.product_bounds import LEFT, BoundQuery, left_bound

MEAN = np.array([0.01, 0.03])
COV = np.diag([1e-4, 4e-4])


def test_estimate_moments():
    panel = ReturnPanel(("a",), [[0.0], [0.2]])
    mean, cov = estimate_moments(panel)
    assert abs(mean[0] - 0.1) < 1e-15
    assert abs(cov[0, 0] - 0.02) < 1e-15


def test_panel_validation():
    with pytest.raises(InvalidSpecError):
        ReturnPanel(("a",), [[0.1]])
    with pytest.raises(InvalidSpecError):
        ReturnPanel(("a", "b"), [[0.1], [0.2]])
    with pytest.raises(InvalidSpecError):
        ReturnPanel(("a",), [[0.1], [-1.5]])
    with pytest.raises(InvalidSpecError):
        ReturnPanel(("a",), [[0.1], [np.nan]])


def test_panel_from_csv(returns_csv):
    panel = ReturnPanel.from_csv(returns_csv)
    assert panel.asset_names == ("bonds", "equity", "growth")
    assert panel.periods == 36
    assert abs(panel.returns[0, 1] - 0.0215) < 1e-15


def test_panel_rejects_text(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n0.1,0.2\n0.3,oops\n")
    with pytest.raises(InvalidSpecError):
        ReturnPanel.from_csv(str(path))


def test_panel_from_frame():
    panel = ReturnPanel.from_frame(pd.DataFrame({"x": [0.01, 0.02], "y": [0.0, -0.01]}))
    assert panel.asset_names == ("x", "y")


def test_portfolio_weights():
    assert FixedMixPortfolio([0.25, 0.75]).format() == "0.25;0.75"
    with pytest.raises(InvalidSpecError):
        FixedMixPortfolio([0.5, 0.6])
    with pytest.raises(InvalidSpecError):
        FixedMixPortfolio([1.5, -0.5])


def test_wealth_spec():
    spec = wealth_spec(FixedMixPortfolio([0.5, 0.5]), MEAN, COV, 12)
    assert spec.T == 12
    assert abs(spec.mu - 1.02) < 1e-15
    assert abs(spec.sigma - math.sqrt(1.25e-4)) < 1e-15
    assert spec.rho == 0.0
    with pytest.raises(InvalidSpecError):
        wealth_spec(FixedMixPortfolio([1.0, 0.0]), MEAN, COV, 1)


def test_deterministic_growth():
    spec = wealth_spec(FixedMixPortfolio([1.0]), [0.02], [[0.0]], 10)
    result = worst_case_var(spec, 0.05)
    assert result.tag == DETERMINISTIC
    assert abs(result.value - 1.02 ** 10) < 1e-12
    assert abs(result.growth_rate - math.log(1.02)) < 1e-12


def test_absorbed_horizon(absorbed_spec):
    result = worst_case_var(absorbed_spec, 0.05)
    assert result.tag == ABSORPTION
    assert result.value == 0.0
    assert result.growth_rate == -math.inf


def test_epsilon_range():
    with pytest.raises(InvalidSpecError):
        worst_case_var(MomentSpec(5, 1.01, 0.05, 0.0), 1.0)


def test_wvar_brackets_the_level():
    spec = MomentSpec(5, 1.01, 0.05, 0.0)
    settings = SolverSettings(bisect_tol=1e-3)
    epsilon = 0.1
    result = worst_case_var(spec, epsilon, settings)
    assert result.tag is None
    lo, hi = result.bracket
    assert lo == result.value
    assert hi / lo - 1.0 <= 1e-3
    assert left_bound(BoundQuery(spec, lo, LEFT), settings).value <= epsilon
    assert left_bound(BoundQuery(spec, hi, LEFT), settings).value > epsilon
    assert result.evaluations > 2
    assert set(result.to_dict()) == {"value", "tag", "bracket", "evaluations", "growth_rate"}


def test_frank_wolfe_minimum_variance():
    result = frank_wolfe(COV, MEAN, 0.0)
    assert result.converged
    assert np.allclose(result.weights, [0.8, 0.2], atol=1e-9)
    assert np.allclose(minimum_variance_portfolio(COV).weights, [0.8, 0.2], atol=1e-9)


def test_frank_wolfe_reaches_the_vertex():
    assert abs(vertex_tau(MEAN, COV) - 0.04) < 1e-15
    result = frank_wolfe(COV, MEAN, 0.1)
    assert result.converged
    assert np.allclose(result.weights, [0.0, 1.0])
    assert np.allclose(max_expectation_portfolio(MEAN).weights, [0.0, 1.0])


def test_frank_wolfe_open_loop_stays_on_simplex():
    result = frank_wolfe(COV, MEAN, 0.02, max_iterations=50, step_rule="open_loop")
    assert abs(result.weights.sum() - 1.0) < 1e-12
    assert np.all(result.weights >= 0.0)


def test_frontier_sweep(returns_csv):
    mean, cov = estimate_moments(ReturnPanel.from_csv(returns_csv))
    settings = SolverSettings(bisect_tol=1e-2)
    tau_max = 1.5 * vertex_tau(mean, cov)
    assert tau_max > 0.0
    points = frontier_sweep(mean, cov, 4, 0.1, 3, tau_max=tau_max, settings=settings)
    assert [p.tau for p in points] == sorted(p.tau for p in points)
    assert len(points) == 3
    assert points[-1].portfolio.weights[int(np.argmax(mean))] == pytest.approx(1.0, abs=1e-9)
    row = points[0].to_row()
    assert list(row) == ["tau", "weights", "mean", "stdev", "wvar", "growth_rate", "tag"]
    best = best_frontier_point(points)
    assert all(best.wvar.value >= p.wvar.value for p in points)


def test_frontier_needs_two_points():
    with pytest.raises(InvalidSpecError):
        frontier_sweep(MEAN, COV, 4, 0.1, 1)


def test_wvar_result_growth_rate():
    assert abs(WVaRResult(math.e ** 2, 4).growth_rate - 0.5) < 1e-15
