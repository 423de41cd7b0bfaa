import os

import pytest

from chebyprod.config_loader import SolverSettings
from chebyprod.moments import MomentSpec

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def settings():
    return SolverSettings()


@pytest.fixture
def absorbed_spec():
    # T0 = (1 + 1) / 1 + 1 = 3 < 4
    return MomentSpec(4, 1.0, 1.0, 0.0)


@pytest.fixture
def calm_spec():
    return MomentSpec(5, 1.0, 0.5, 0.0)


@pytest.fixture
def returns_csv():
    return os.path.join(ROOT, "data", "synthetic_returns.csv")


@pytest.fixture(autouse=True)
def no_slack(monkeypatch):
    monkeypatch.delenv("CHEBYPROD_SLACK_WEBHOOK_URL", raising=False)
    monkeypatch.delenv("CHEBYPROD_THREADS", raising=False)
