import math

import numpy as np
import pytest

from chebyprod.analytic import gamma_bar_threshold
from chebyprod.errors import GridInfeasibleError, InfeasibleSpecError
from chebyprod.events import Event
from chebyprod.moments import MomentSpec
from chebyprod.primal_oracle import (
    OneDistinct, Uniform, feasibility_distribution, event_probability, lower_bound_lp, special_atoms,
    witness_atoms,
)
from chebyprod.product_bounds import LEFT, RIGHT, BoundQuery, left_bound, right_bound


@pytest.mark.parametrize("spec", [
    MomentSpec(3, 1.0, 1.0, 0.0),
    MomentSpec(3, 1.0, 1.0, -0.25),
    MomentSpec(4, 1.0, 0.5, 0.3),
    MomentSpec(6, 0.2, 1.5, 0.6),
])
def test_feasibility_distribution_matches_moments(spec):
    dist = feasibility_distribution(spec)
    dist.check()
    assert dist.max_residual(spec) < 1e-12


def test_feasibility_weights():
    dist = feasibility_distribution(MomentSpec(3, 1.0, 1.0, 0.0))
    assert isinstance(dist.families[0], OneDistinct)
    assert abs(dist.families[0].prob - 0.75) < 1e-15

    dist = feasibility_distribution(MomentSpec(3, 1.0, 1.0, -0.25))
    assert abs(dist.families[0].prob - 0.6) < 1e-15
    assert abs(dist.families[1].z - 0.5) < 1e-15


def test_feasibility_on_the_boundary():
    # mu^2 + rho sigma^2 = 0 still has a member
    spec = MomentSpec(2, 1.0, 2.0, -0.25)
    assert feasibility_distribution(spec).max_residual(spec) < 1e-12
    with pytest.raises(InfeasibleSpecError):
        feasibility_distribution(MomentSpec(3, 0.1, 1.0, -0.2))


def test_event_probability_delegates():
    dist = feasibility_distribution(MomentSpec(3, 1.0, 1.0, 0.0))
    # the uniform atom sits at the origin
    assert abs(event_probability(dist, Event("min", "leq", 0.01)) - 0.25) < 1e-15


def test_special_atoms_for_product_tails():
    spec = MomentSpec(4, 1.0, 0.5, 0.0)
    atoms = special_atoms(spec, Event("product", "geq", 1.5 ** 4))
    assert any(isinstance(a, Uniform) and abs(a.z - 1.5) < 1e-12 for a in atoms)
    assert any(isinstance(a, OneDistinct) for a in atoms[2:])
    assert any(isinstance(a, Uniform) and a.z == 0.2 for a in special_atoms(spec, Event("sum", "geq", 0.8)))


def test_right_tail_sandwich_closes_above_gamma_bar():
    spec = MomentSpec(4, 1.0, 0.5, 0.0)
    primal = lower_bound_lp(spec, Event("product", "geq", 1.5 ** 4), grid_points=20)
    assert abs(primal.value - 0.2) < 1e-7
    assert primal.max_residual < 1e-8
    primal.distribution.check(tol=1e-9)


def test_left_tail_primal_below_dual(calm_spec, settings):
    gamma = 0.3
    primal = lower_bound_lp(calm_spec, Event("product", "leq", gamma), grid_points=20)
    dual = left_bound(BoundQuery(calm_spec, gamma, LEFT), settings)
    assert 0.0 <= primal.value <= dual.value + 1e-6
    assert primal.candidates > 400


def test_absorbed_left_tail_reaches_one(absorbed_spec):
    primal = lower_bound_lp(absorbed_spec, Event("product", "leq", 1e-6), grid_points=10)
    assert abs(primal.value - 1.0) < 1e-9


def test_coarse_grid_without_seeds_is_infeasible():
    spec = MomentSpec(4, 1.0, 0.5, 0.0)
    with pytest.raises(GridInfeasibleError):
        lower_bound_lp(spec, Event("product", "geq", 2.0), grid_points=2, span_sigmas=0.1, seed_special=False)


def test_extra_atoms_are_offered():
    spec = MomentSpec(4, 1.0, 0.5, 0.0)
    plain = lower_bound_lp(spec, Event("product", "geq", 2.0), grid_points=12, seed_special=False)
    richer = lower_bound_lp(spec, Event("product", "geq", 2.0), grid_points=12, seed_special=False,
                            extra_atoms=[Uniform(2.0 ** 0.25, 0.0)])
    assert richer.candidates == plain.candidates + 1
    assert richer.value >= plain.value - 1e-9
    data = richer.to_dict()
    assert set(data) == {"value", "candidates", "max_residual", "distribution"}


def _left_query(seed: int) -> BoundQuery:
    rng = np.random.default_rng(seed)
    T = int(rng.integers(2, 7))
    mu = float(rng.uniform(0.5, 2.0))
    sigma = mu * float(rng.uniform(0.1, 0.8))
    rho = float(rng.uniform(-0.4 / (T - 1), 0.6))
    gamma = math.exp(T * math.log(mu) + float(rng.uniform(-2.0, 0.3)))
    return BoundQuery(MomentSpec(T, mu, sigma, rho), gamma, LEFT)


@pytest.mark.parametrize("query", [_left_query(seed) for seed in range(6)]
                         + [BoundQuery(MomentSpec(6, 1.45, 0.185, 0.433), 5.585, LEFT)])
def test_left_tail_sandwich_on_random_queries(query, settings):
    dual = left_bound(query, settings)
    primal = lower_bound_lp(query.spec, query.event, grid_points=20,
                            extra_atoms=witness_atoms(query, dual))
    assert primal.value <= dual.value + 1e-5
    assert dual.value - primal.value <= settings.verify_gap_tol
    assert primal.max_residual < 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_right_tail_sandwich_above_gamma_bar_on_random_queries(seed, settings):
    rng = np.random.default_rng(100 + seed)
    T = int(rng.integers(2, 7))
    mu = float(rng.uniform(0.5, 2.0))
    spec = MomentSpec(T, mu, mu * float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.0, 0.6)))
    threshold = gamma_bar_threshold(spec)
    assert threshold.hypothesis_holds
    query = BoundQuery(spec, threshold.value * float(rng.uniform(1.05, 2.0)), RIGHT)
    dual = right_bound(query, settings)
    primal = lower_bound_lp(spec, query.event, grid_points=20)
    assert dual.shortcut == "relaxed_exact"
    assert abs(dual.value - primal.value) <= 1e-6


def test_witness_atoms_follow_the_cuts(calm_spec, settings):
    query = BoundQuery(calm_spec, 0.3, LEFT)
    dual = left_bound(query, settings)
    atoms = witness_atoms(query, dual)
    assert dual.cuts and atoms
    assert all(min(a.representative(calm_spec.T)) >= 0.0 for a in atoms)
    assert witness_atoms(query, left_bound(BoundQuery(MomentSpec(4, 1.0, 1.0, 0.0), 0.3, LEFT), settings)) == []
