import numpy as np
import pytest

from back_end.classe.env_core import CartpoleEnv, cycle_mdp, two_state_fixture
from back_end.classe.rollout import TruncatedEvaluator
from back_end.utils.config import RUNTIME
from back_end.utils.monitoring import PerformanceMonitor


@pytest.fixture(autouse=True)
def isolated_runtime(tmp_path, monkeypatch):
    """Logs in a temporary file, single worker, fresh metrics."""
    monkeypatch.setitem(RUNTIME, "log_file", str(tmp_path / "scorelife.log"))
    monkeypatch.setenv("SCORELIFE_THREADS", "1")
    PerformanceMonitor.reset_metrics()
    yield
    PerformanceMonitor.reset_metrics()


@pytest.fixture
def cycle3():
    return cycle_mdp(3, gamma=0.5)


@pytest.fixture
def cycle3_evaluator(cycle3):
    return TruncatedEvaluator(cycle3, horizon=60)


@pytest.fixture
def two_state():
    return two_state_fixture()


@pytest.fixture
def cartpole():
    return CartpoleEnv(gamma=0.8, cost_kind="quadratic")


@pytest.fixture
def origin():
    return np.zeros(4)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
