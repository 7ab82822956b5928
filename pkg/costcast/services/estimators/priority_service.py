import logging
from typing import Optional, Tuple

import numpy as np

from costcast.models.dataset import Dataset
from costcast.models.priority import LARGE, PriorityKind, PriorityModel
from costcast.schemas.forest_schema import ForestConfig, ForestMode, ForestRoles
from costcast.services.estimators.dml_service import design_matrix, fit_dml
from costcast.services.estimators.exceptions import MissingZeroControlCost, NoTreatedUnits
from costcast.services.forests.exceptions import DimensionMismatch
from costcast.services.forests.forest_service import (
    fit_forest,
    predict_ratio_batch,
    predict_regression_batch,
)

logger = logging.getLogger(__name__)

GAMMA_GUARD = 1e-6


def fit_iv_forest(d: Dataset, cfg: Optional[ForestConfig] = None) -> PriorityModel:
    """
    도구변수 포레스트 (instrument = W, treatment = C)
    - 점수 = Cov_a(Y, W) / Cov_a(C, W)
    """
    cfg = (cfg or ForestConfig()).for_mode(ForestMode.INSTRUMENTAL)
    forest = fit_forest(d, ForestRoles.default_for(ForestMode.INSTRUMENTAL), cfg)
    return PriorityModel(kind=PriorityKind.IV_FOREST, p=d.p, forests={"iv": forest})


def fit_direct_ratio(d: Dataset, cfg: Optional[ForestConfig] = None) -> PriorityModel:
    """
    tau / gamma 를 따로 추정해서 나누는 기준선
    1) tau: 인과 포레스트 (전체 행)
    2) gamma: 처치군 행의 비용 회귀 포레스트 (대조군 비용 = 0 이므로 E[C(1) | x])
    3) gamma_hat < 1e-6 * mean(gamma_hat(학습 X)) 인 행은 sign(tau) * LARGE
    """
    if not d.zero_control_cost:
        raise MissingZeroControlCost("direct_ratio needs a dataset flagged zero_control_cost")
    cfg = cfg or ForestConfig()
    reg_cfg = cfg.for_mode(ForestMode.REGRESSION, local_centering=False)
    treated = np.flatnonzero(d.w == 1)
    if treated.shape[0] < reg_cfg.resolved_min_node_size():
        raise NoTreatedUnits(
            f"direct_ratio needs at least {reg_cfg.resolved_min_node_size()} treated rows, got {treated.shape[0]}"
        )

    tau = fit_forest(d, ForestRoles.default_for(ForestMode.CAUSAL), cfg.for_mode(ForestMode.CAUSAL))
    gamma = fit_forest(
        d.subset(treated, require_overlap=False),
        ForestRoles.default_for(ForestMode.REGRESSION, outcome="c"),
        reg_cfg,
    )

    gamma_train = predict_regression_batch(gamma, d.x)
    floor = GAMMA_GUARD * float(np.mean(gamma_train))
    guarded = int(np.sum(gamma_train < floor))
    if guarded:
        logger.warning("direct_ratio: %d training row(s) fall under the gamma guard %.3g", guarded, floor)
    return PriorityModel(
        kind=PriorityKind.DIRECT_RATIO,
        p=d.p,
        forests={"tau": tau, "gamma": gamma},
        gamma_floor=floor,
        diagnostics={"guarded_training_rows": guarded, "n_treated": int(treated.shape[0])},
    )


def fit_ignore_cost(d: Dataset, cfg: Optional[ForestConfig] = None) -> PriorityModel:
    """비용을 무시하고 tau 만 추정하는 기준선 (인과 포레스트)"""
    cfg = (cfg or ForestConfig()).for_mode(ForestMode.CAUSAL)
    forest = fit_forest(d, ForestRoles.default_for(ForestMode.CAUSAL), cfg)
    return PriorityModel(kind=PriorityKind.IGNORE_COST, p=d.p, forests={"tau": forest})


def fit_dml_priority(
    d: Dataset,
    k: Optional[int] = None,
    cfg: Optional[ForestConfig] = None,
    seed: Optional[int] = None,
    add_intercept: bool = False,
) -> PriorityModel:
    """선형 우선순위 x'beta (cross-fitted)"""
    fit = fit_dml(d, k=k, nuisance_cfg=cfg, seed=seed, add_intercept=add_intercept)
    return PriorityModel(
        kind=PriorityKind.DML_LINEAR,
        p=d.p,
        beta=fit.beta,
        add_intercept=add_intercept,
        diagnostics={
            "se": [float(s) for s in fit.se],
            "fold_conditions": [float(c) for c in fit.fold_conditions],
        },
    )


def direct_ratio_scores(model: PriorityModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """direct_ratio 점수와 가드 적용 행 마스크"""
    tau = predict_ratio_batch(model.forests["tau"], x)
    gamma = predict_regression_batch(model.forests["gamma"], x)
    guarded = gamma < model.gamma_floor
    scores = np.empty_like(tau)
    scores[~guarded] = tau[~guarded] / gamma[~guarded]
    scores[guarded] = np.sign(tau[guarded]) * LARGE
    return scores, guarded


def score(model: PriorityModel, x: np.ndarray) -> np.ndarray:
    """
    행별 우선순위 점수
    - 결정적 (같은 모델, 같은 입력이면 같은 값)
    - 배치 결과는 행별 호출 결과와 같음
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != model.p:
        raise DimensionMismatch(f"expected {model.p} covariates, got {x.shape[-1]}")

    if model.kind == PriorityKind.DML_LINEAR:
        return design_matrix(x, model.add_intercept) @ model.beta
    if model.kind == PriorityKind.IV_FOREST:
        return predict_ratio_batch(model.forests["iv"], x)
    if model.kind == PriorityKind.IGNORE_COST:
        return predict_ratio_batch(model.forests["tau"], x)

    scores, guarded = direct_ratio_scores(model, x)
    if guarded.any():
        logger.info("direct_ratio: %d scored row(s) hit the gamma guard", int(guarded.sum()))
    return scores
