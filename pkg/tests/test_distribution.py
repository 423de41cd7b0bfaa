import json

import pytest

from chebyprod.distribution import DiscreteSymmetricDistribution, OneDistinct, Uniform, clamp
from chebyprod.errors import InvalidSpecError
from chebyprod.events import Event
from chebyprod.moments import MomentSpec


@pytest.fixture
def mixture():
    return DiscreteSymmetricDistribution(3, [OneDistinct(3.0, 0.0, 0.25), Uniform(1.0, 0.75)])


def test_family_moments():
    assert Uniform(2.0, 1.0).moments(4) == (2.0, 4.0, 4.0)
    m1, m2, cross = OneDistinct(3.0, 0.0, 1.0).moments(3)
    assert (m1, m2) == (1.0, 3.0)
    assert abs(cross) < 1e-15


def test_mixture_moments(mixture):
    assert abs(mixture.total_mass - 1.0) < 1e-15
    assert abs(mixture.mean() - 1.0) < 1e-15
    assert abs(mixture.second_moment() - 1.5) < 1e-15
    assert abs(mixture.cross_moment() - 0.75) < 1e-15


def test_formulas_agree_with_permutation_average():
    dist = DiscreteSymmetricDistribution(4, [OneDistinct(2.5, 0.4, 0.3), OneDistinct(0.0, 1.1, 0.2),
                                             Uniform(0.9, 0.5)])
    first, second, cross = dist.brute_force_moments()
    assert abs(first - dist.mean()) < 1e-12
    assert abs(second - dist.second_moment()) < 1e-12
    assert abs(cross - dist.cross_moment()) < 1e-12


def test_residuals_against_matching_spec(mixture):
    # mu = 1, sigma^2 = 0.5, rho * sigma^2 = -0.25
    spec = MomentSpec(3, 1.0, 0.5 ** 0.5, -0.5)
    assert mixture.max_residual(spec) < 1e-12
    d_i, d_total = mixture.covariance_deficit(spec)
    assert abs(d_i) < 1e-12
    assert abs(d_total) < 1e-12


def test_expanded_atoms_split_mass(mixture):
    atoms = dict(mixture.expanded_atoms())
    assert len(atoms) == 4
    assert abs(atoms[(3.0, 0.0, 0.0)] - 0.25 / 3) < 1e-15
    assert abs(atoms[(0.0, 0.0, 3.0)] - 0.25 / 3) < 1e-15
    assert atoms[(1.0, 1.0, 1.0)] == 0.75


def test_event_probability(mixture):
    assert mixture.event_probability(Event("max", "geq", 2.0)) == 0.25
    assert mixture.event_probability(Event("product", "leq", 0.5)) == 0.25
    # boundary atoms count for weak inequalities
    assert mixture.event_probability(Event("sum", "geq", 3.0)) == 1.0


def test_zero_mass_families_are_dropped():
    dist = DiscreteSymmetricDistribution(2, [Uniform(1.0, 1.0), OneDistinct(2.0, 0.0, 0.0)])
    assert len(dist.families) == 1


def test_check(mixture):
    mixture.check()
    with pytest.raises(InvalidSpecError):
        DiscreteSymmetricDistribution(2, [Uniform(1.0, 0.5)]).check()
    with pytest.raises(InvalidSpecError):
        DiscreteSymmetricDistribution(2, [Uniform(-1.0, 1.0)]).check()
    with pytest.raises(InvalidSpecError):
        DiscreteSymmetricDistribution(2, [Uniform(1.0, 1.5), Uniform(2.0, -0.5)]).check()
    with pytest.raises(InvalidSpecError):
        DiscreteSymmetricDistribution(0, [])


def test_clamp():
    assert clamp(-1e-13) == 0.0
    assert clamp(-1e-6) == -1e-6
    assert clamp(0.5) == 0.5


def test_serialisation(mixture):
    data = json.loads(mixture.to_json())
    assert data[0] == {"type": "one_distinct", "coords": [3.0, 0.0, 0.0], "prob": 0.25}
    assert data[1]["type"] == "uniform"
    assert data[1]["coords"] == [1.0, 1.0, 1.0]
