import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from costcast.core.parallel import derive_seed, run_parallel
from costcast.models.dataset import Dataset, SplitPlan
from costcast.models.estimation import NuisanceFit
from costcast.models.forest import ForestModel
from costcast.schemas.forest_schema import ForestConfig, ForestMode
from costcast.services.forests.forest_service import fit_arrays, predict_regression_batch

logger = logging.getLogger(__name__)


def nuisance_config(cfg: Optional[ForestConfig]) -> ForestConfig:
    """nuisance 회귀 포레스트 설정 (회귀 모드, centering 없음)"""
    cfg = cfg or ForestConfig(num_trees=500)
    return cfg.for_mode(ForestMode.REGRESSION, local_centering=False)


def fit_nuisances(d: Dataset, plan: SplitPlan, cfg: Optional[ForestConfig] = None) -> NuisanceFit:
    """
    cross-fitting nuisance 추정
    1) fold k 마다 나머지 fold 로 E[Y|X], E[C|X] 회귀 포레스트 학습 후 fold k 예측
    2) E[W|X]: 처치 확률이 알려져 있으면 그대로 (상수 pi 포함), 아니면 같은 방식으로 학습
    - 각 행의 nuisance 값은 그 행을 학습에 쓰지 않은 모델에서 나옴
    - fold 는 run_parallel 로 병렬 학습, 시드는 (seed, fold, 대상) 이라 워커 수와 무관
    """
    reg_cfg = nuisance_config(cfg)
    known_w = d.resolved_propensity()
    targets = {"y": d.y, "c": d.c}
    if known_w is None:
        targets["w"] = d.w.astype(np.float64)

    def fit_fold(k: int) -> Dict[str, Tuple[ForestModel, np.ndarray]]:
        train = plan.complement_indices(k)
        held_out_x = d.x[plan.fold_indices(k)]
        out = {}
        for name, response in targets.items():
            fold_cfg = reg_cfg.model_copy(update={"seed": derive_seed(reg_cfg.seed, k, name)})
            model = fit_arrays(d.x[train], response[train], cfg=fold_cfg)
            out[name] = (model, predict_regression_batch(model, held_out_x))
        return out

    fitted = run_parallel(fit_fold, range(plan.k), reg_cfg.threads)

    preds = {name: np.empty(d.n, dtype=np.float64) for name in targets}
    regressors: Dict[str, List[ForestModel]] = {name: [] for name in targets}
    for k, per_fold in enumerate(fitted):
        held_out = plan.fold_indices(k)
        for name, (model, fold_preds) in per_fold.items():
            preds[name][held_out] = fold_preds
            regressors[name].append(model)

    h_w = preds["w"] if known_w is None else np.asarray(known_w, dtype=np.float64)
    logger.info(
        "fit_nuisances: n=%d folds=%d propensity=%s",
        d.n, plan.k, "estimated" if known_w is None else "known",
    )
    return NuisanceFit(
        h_y=preds["y"],
        h_c=preds["c"],
        h_w=h_w,
        plan=plan,
        regressors=regressors,
        propensity=d.known_constant_propensity,
    )
