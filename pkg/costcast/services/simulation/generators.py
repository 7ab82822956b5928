"""
시뮬레이션 데이터 생성기

공통: X ~ Unif(-1, 1)^p, W ~ Bern(pi), eps ~ N(0, 1), C = W * C(1)
- unpredictable_cost: C(1) ~ Pois(1)
- predictable_cost:   C(1) ~ Pois(exp(x2 + x3 + x4 + x5))
  Y = max(x1 + x3, 0) + max(x5 + x6, 0) + W exp(x1 + x2 + x3 + x4) + eps
- linear_rho: C(1) ~ Pois(mu(x)), tau(x) = mu(x) x'beta*, rho(x) = x'beta*
"""

import hashlib
import logging
from typing import Callable, Optional

import numpy as np

from costcast.models.dataset import Dataset, TruthTaggedDataset
from costcast.schemas.simulation_schema import Design, SimConfig
from costcast.utils.exceptions import ConfigInvalid

logger = logging.getLogger(__name__)

MIN_P_NONLINEAR = 6
LINEAR_BETA_DEFAULT = (1.0, -0.5, 0.25)

CustomGenerator = Callable[[SimConfig, np.random.Generator, int], TruthTaggedDataset]


def _baseline(x: np.ndarray) -> np.ndarray:
    return np.maximum(x[:, 0] + x[:, 2], 0.0) + np.maximum(x[:, 4] + x[:, 5], 0.0)


def _tagged(
    x: np.ndarray,
    w: np.ndarray,
    y: np.ndarray,
    c: np.ndarray,
    tau: np.ndarray,
    gamma: np.ndarray,
    pi: float,
) -> TruthTaggedDataset:
    data = Dataset(x=x, w=w, y=y, c=c, zero_control_cost=True, default_propensity=pi)
    return TruthTaggedDataset(data=data, tau=tau, gamma=gamma, rho=tau / gamma)


def generate(
    cfg: SimConfig,
    seed: int,
    n: Optional[int] = None,
    custom: Optional[CustomGenerator] = None,
) -> TruthTaggedDataset:
    """
    설계에 따라 정답이 붙은 데이터셋 생성
    - n 을 비우면 cfg.n_train
    - custom 설계는 generator 인자 필요
    """
    n = cfg.n_train if n is None else n
    rng = np.random.default_rng(seed)
    if cfg.design == Design.LINEAR_RHO:
        return linear_rho_dgp(cfg, seed, n)
    if cfg.design == Design.CUSTOM:
        if custom is None:
            raise ConfigInvalid("custom design needs a generator callable")
        return custom(cfg, rng, n)
    if cfg.p < MIN_P_NONLINEAR:
        raise ConfigInvalid(f"design '{cfg.design.value}' needs p >= {MIN_P_NONLINEAR}, got {cfg.p}")

    x = rng.uniform(-1.0, 1.0, size=(n, cfg.p))
    w = rng.binomial(1, cfg.pi, size=n)
    eps = rng.normal(size=n)
    tau = np.exp(x[:, 0] + x[:, 1] + x[:, 2] + x[:, 3])
    if cfg.design == Design.UNPREDICTABLE_COST:
        gamma = np.ones(n)
    else:
        gamma = np.exp(x[:, 1] + x[:, 2] + x[:, 3] + x[:, 4])
    c1 = rng.poisson(gamma).astype(np.float64)
    y = _baseline(x) + w * tau + eps
    return _tagged(x, w, y, w * c1, tau, gamma, cfg.pi)


def linear_rho_dgp(cfg: SimConfig, seed: int, n: Optional[int] = None) -> TruthTaggedDataset:
    """
    선형 우선순위 설계
    - mu(x) = exp(0.5 x1) + 1 (cfg.mu 가 있으면 상수)
    - Y = baseline + W tau(x) + eps, baseline = max(x1 + x3, 0) (p < 3 이면 max(x1, 0))
    """
    n = cfg.n_train if n is None else n
    beta = np.asarray(linear_beta(cfg), dtype=np.float64)
    rng = np.random.default_rng(seed)

    x = rng.uniform(-1.0, 1.0, size=(n, cfg.p))
    w = rng.binomial(1, cfg.pi, size=n)
    eps = rng.normal(size=n)
    mu = np.full(n, float(cfg.mu)) if cfg.mu is not None else np.exp(0.5 * x[:, 0]) + 1.0
    rho = x @ beta
    tau = mu * rho
    c1 = rng.poisson(mu).astype(np.float64)
    base = np.maximum(x[:, 0] + (x[:, 2] if cfg.p >= 3 else 0.0), 0.0)
    y = base + w * tau + eps
    return _tagged(x, w, y, w * c1, tau, mu, cfg.pi)


def linear_beta(cfg: SimConfig) -> list:
    """beta* (설정값 또는 앞 세 좌표만 0 이 아닌 기본값)"""
    if cfg.beta_star is not None:
        if len(cfg.beta_star) != cfg.p:
            raise ConfigInvalid(f"beta_star has length {len(cfg.beta_star)}, expected p={cfg.p}")
        return list(cfg.beta_star)
    beta = [0.0] * cfg.p
    for j, value in enumerate(LINEAR_BETA_DEFAULT[: cfg.p]):
        beta[j] = value
    return beta


def dataset_hash(tagged: TruthTaggedDataset) -> str:
    """평가 표본 고정 확인용 sha256 (공변량, 처치, 결과, 비용, 정답)"""
    h = hashlib.sha256()
    d = tagged.data
    for arr in (d.x, d.w.astype(np.float64), d.y, d.c, tagged.tau, tagged.gamma):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()
