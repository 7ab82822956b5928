import numpy as np
import pytest

from costcast.core.config import get_settings
from costcast.models.dataset import Dataset, TestDataset, TrainDataset
from costcast.schemas.forest_schema import ForestConfig
from costcast.schemas.simulation_schema import Design, SimConfig
from costcast.services.simulation.generators import generate


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    """테스트마다 COSTCAST_ 환경 변수 초기화 후 설정 캐시 재생성"""
    for name in ("COSTCAST_THREADS", "COSTCAST_BOOTSTRAP_REPS", "COSTCAST_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def small_forest() -> ForestConfig:
    return ForestConfig(num_trees=50, seed=7, threads=1)


@pytest.fixture
def tiny_forest() -> ForestConfig:
    return ForestConfig(num_trees=20, seed=3, threads=1, centering_trees=10)


def make_dataset(n: int, p: int = 2, seed: int = 0, role: type = Dataset, **kwargs) -> Dataset:
    """
    X ~ Unif(-1, 1)^p, W ~ Bern(0.5), C = W * (1 + x1^2), Y = W * (1 + x1) + N(0, 0.5)
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, p))
    w = rng.binomial(1, 0.5, size=n)
    w[0], w[1] = 1, 0
    c = w * (1.0 + x[:, 0] ** 2)
    y = w * (1.0 + x[:, 0]) + rng.normal(0.0, 0.5, size=n)
    kwargs.setdefault("zero_control_cost", True)
    kwargs.setdefault("default_propensity", 0.5)
    return role(x=x, w=w, y=y, c=c, **kwargs)


@pytest.fixture
def dataset_factory():
    return make_dataset


@pytest.fixture
def train_data() -> TrainDataset:
    return make_dataset(400, seed=1, role=TrainDataset)


@pytest.fixture
def test_data() -> TestDataset:
    return make_dataset(400, seed=2, role=TestDataset)


@pytest.fixture
def predictable_cost_data():
    cfg = SimConfig(design=Design.PREDICTABLE_COST, n_train=600, p=6)
    return generate(cfg, seed=11)
