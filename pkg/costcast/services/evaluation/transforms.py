import logging
from typing import Optional, Union

import numpy as np

from costcast.models.dataset import Dataset, TrainDataset
from costcast.models.qini import ArmNuisances, EvalWeights
from costcast.schemas.evaluation_schema import EvalMode
from costcast.schemas.forest_schema import ForestConfig, ForestMode
from costcast.services.evaluation.exceptions import (
    LengthMismatch,
    MissingPropensity,
    NuisanceRequired,
    TrainingRowsRejected,
)
from costcast.services.forests.forest_service import fit_arrays, predict_regression_batch

logger = logging.getLogger(__name__)


def require_evaluation_rows(d: Dataset) -> None:
    """평가 연산은 학습 분할을 받지 않음"""
    if isinstance(d, TrainDataset):
        raise TrainingRowsRejected("evaluation operations do not accept a training split")


def eval_weights(
    test: Dataset,
    mode: Union[EvalMode, str] = EvalMode.IPW,
    nuisances: Optional[ArmNuisances] = None,
) -> EvalWeights:
    """
    행별 보상/비용 변환
    - ipw:  (W / pi - (1 - W) / (1 - pi)) * obs
    - aipw: mu1 - mu0 + (W - pi) / (pi (1 - pi)) * (obs - mu_W)
    """
    require_evaluation_rows(test)
    mode = EvalMode(mode)
    pi = test.resolved_propensity()
    if pi is None:
        raise MissingPropensity("evaluation needs a propensity column or a default propensity")
    w = test.w.astype(np.float64)

    if mode == EvalMode.IPW:
        factor = w / pi - (1.0 - w) / (1.0 - pi)
        return EvalWeights(reward=factor * test.y, cost=factor * test.c, mode=mode.value, propensity=pi)

    if nuisances is None:
        raise NuisanceRequired("aipw mode needs arm-wise outcome and cost predictions")
    for name in ("mu1_y", "mu0_y", "mu1_c", "mu0_c"):
        if getattr(nuisances, name).shape[0] != test.n:
            raise LengthMismatch(f"nuisance '{name}' does not match the {test.n} evaluation rows")
    factor = (w - pi) / (pi * (1.0 - pi))
    mu_y = np.where(w == 1, nuisances.mu1_y, nuisances.mu0_y)
    mu_c = np.where(w == 1, nuisances.mu1_c, nuisances.mu0_c)
    reward = nuisances.mu1_y - nuisances.mu0_y + factor * (test.y - mu_y)
    cost = nuisances.mu1_c - nuisances.mu0_c + factor * (test.c - mu_c)
    return EvalWeights(reward=reward, cost=cost, mode=mode.value, propensity=pi)


def fit_arm_nuisances(
    train: Dataset,
    test: Dataset,
    cfg: Optional[ForestConfig] = None,
) -> ArmNuisances:
    """
    학습 분할의 팔별 회귀 포레스트로 평가 행의 mu_w(x) 예측
    - zero_control_cost 데이터셋이면 mu0_c = 0
    """
    reg_cfg = (cfg or ForestConfig(num_trees=500)).for_mode(ForestMode.REGRESSION, local_centering=False)
    preds = {}
    for arm in (0, 1):
        rows = np.flatnonzero(train.w == arm)
        for name, column in (("y", train.y), ("c", train.c)):
            if arm == 0 and name == "c" and train.zero_control_cost:
                preds["mu0_c"] = np.zeros(test.n)
                continue
            model = fit_arrays(train.x[rows], column[rows], cfg=reg_cfg)
            preds[f"mu{arm}_{name}"] = predict_regression_batch(model, test.x)
    logger.info("fit_arm_nuisances: train=%d test=%d", train.n, test.n)
    return ArmNuisances(**preds)
