"""
generalized random forest 서비스

- fit_forest / fit_arrays: 트리 병렬 성장 (트리별 RNG = (seed, 트리 번호))
- forest_weights: 질의점의 적응형 가중치
- predict_ratio(_batch): 가중 공분산 비율 Cov_a(y, z) / Cov_a(t, z)
- predict_regression(_batch): 가중 평균
- predict_oob: out-of-bag 회귀 예측 (local centering용)

예측 합계는 고정 크기 트리 블록 단위로 계산한 뒤 블록 순서대로 더하므로
워커 수와 무관하게 같은 값이 나옴
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from costcast.core.parallel import progress, run_parallel, task_rng
from costcast.models.dataset import Dataset
from costcast.models.forest import STAT_COLUMNS, ForestModel, ForestWeights, Tree
from costcast.schemas.forest_schema import ForestConfig, ForestMode, ForestRoles
from costcast.services.forests.centering import center_responses
from costcast.services.forests.exceptions import (
    ConfigInvalid,
    DegenerateNode,
    DimensionMismatch,
    ModeMismatch,
    ZeroDenominator,
)
from costcast.services.forests.tree_builder import TrainingArrays, TreeParams, grow_tree

logger = logging.getLogger(__name__)

TREE_BLOCK = 64
DENOMINATOR_EPS = 1e-12

_Y, _T, _Z, _YZ, _TZ = range(len(STAT_COLUMNS))


# ─── fitting ──────────────────────────────────────────────────────────
def _check_roles(roles: ForestRoles, mode: ForestMode) -> None:
    if mode == ForestMode.REGRESSION:
        if roles.treatment is not None or roles.instrument is not None:
            raise ConfigInvalid("regression forests take an outcome role only")
        return
    if roles.treatment is None or roles.instrument is None:
        raise ConfigInvalid(f"{mode.value} forests need treatment and instrument roles")
    if mode == ForestMode.CAUSAL and roles.treatment != roles.instrument:
        raise ConfigInvalid("causal forests use the same column as treatment and instrument")


def fit_forest(
    d: Dataset,
    roles: Optional[ForestRoles] = None,
    cfg: Optional[ForestConfig] = None,
) -> ForestModel:
    """
    Dataset 열 역할에 따라 포레스트 학습
    - instrument가 처치 열(w)이고 처치 확률이 알려져 있으면 centering에 그대로 사용
    """
    cfg = cfg or ForestConfig()
    roles = roles or ForestRoles.default_for(cfg.mode)
    _check_roles(roles, cfg.mode)

    columns = {"y": d.y, "c": d.c, "w": d.w.astype(np.float64)}
    y = columns[roles.outcome]
    if cfg.mode == ForestMode.REGRESSION:
        return fit_arrays(d.x, y, cfg=cfg)

    z_mean, z_constant = None, None
    if roles.instrument == "w":
        z_constant = d.known_constant_propensity
        if z_constant is None:
            z_mean = d.resolved_propensity()
    return fit_arrays(
        d.x,
        y,
        t=columns[roles.treatment],
        z=columns[roles.instrument],
        cfg=cfg,
        z_mean=z_mean,
        z_constant=z_constant,
    )


def fit_arrays(
    x: np.ndarray,
    y: np.ndarray,
    t: Optional[np.ndarray] = None,
    z: Optional[np.ndarray] = None,
    cfg: Optional[ForestConfig] = None,
    z_mean: Optional[np.ndarray] = None,
    z_constant: Optional[float] = None,
) -> ForestModel:
    """
    배열 입력 포레스트 학습
    1) 설정/입력 검증
    2) local centering
    3) 트리 블록 단위 병렬 성장
    """
    cfg = cfg or ForestConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n, p = x.shape
    y = np.asarray(y, dtype=np.float64).reshape(-1)

    # 1) 검증
    if n < 2:
        raise ConfigInvalid(f"need at least 2 training rows, got {n}")
    if cfg.mtry is not None and cfg.mtry > p:
        raise ConfigInvalid(f"mtry={cfg.mtry} exceeds number of covariates p={p}")
    raw_z = None
    if cfg.mode != ForestMode.REGRESSION:
        if t is None or z is None:
            raise ConfigInvalid(f"{cfg.mode.value} forests need treatment and instrument arrays")
        t = np.asarray(t, dtype=np.float64).reshape(-1)
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        if not np.isin(z, (0.0, 1.0)).all():
            raise ConfigInvalid("instrument must be binary")
        if z.min() == z.max():
            raise DegenerateNode("instrument has no variation in the training data")
        raw_z = z

    # 2) centering
    residuals, centering = center_responses(
        x, y, t, z, cfg, oob_fitter=_oob_fit, z_mean=z_mean, z_constant=z_constant
    )

    # 3) 성장
    data = TrainingArrays(
        x=x,
        y=residuals["y"],
        t=residuals.get("t"),
        z=residuals.get("z"),
        raw_z=raw_z,
    )
    params = TreeParams.from_config(cfg, p)
    trees: List[Tree] = []
    starts = range(0, cfg.num_trees, TREE_BLOCK)
    for start in progress(starts, desc=f"{cfg.mode.value} forest", total=len(starts)):
        stop = min(start + TREE_BLOCK, cfg.num_trees)
        trees.extend(
            run_parallel(lambda b: grow_tree(data, params, task_rng(cfg.seed, b)), range(start, stop), cfg.threads)
        )

    logger.info(
        "fit_forest: mode=%s n=%d p=%d trees=%d centering=%s",
        cfg.mode.value, n, p, len(trees), centering,
    )
    return ForestModel(
        trees=trees,
        config=cfg,
        p=p,
        n_train=n,
        centering=centering,
        residuals={k: np.asarray(v) for k, v in residuals.items()},
    )


def _oob_fit(x: np.ndarray, response: np.ndarray, reg_cfg: ForestConfig) -> np.ndarray:
    model = fit_arrays(x, response, cfg=reg_cfg)
    return predict_oob(model, x)


# ─── prediction helpers ───────────────────────────────────────────────
def _as_query(model: ForestModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != model.p:
        raise DimensionMismatch(f"query has {x.shape[-1]} covariates, forest was trained on {model.p}")
    return x


def _blocks(trees: Sequence[Tree]) -> List[Sequence[Tree]]:
    return [trees[i:i + TREE_BLOCK] for i in range(0, len(trees), TREE_BLOCK)]


def _stat_means(model: ForestModel, x: np.ndarray, threads: Optional[int]) -> np.ndarray:
    """(n_query, len(STAT_COLUMNS)) 트리 평균 리프 통계 = alpha 가중 모멘트"""

    def block_sum(trees: Sequence[Tree]) -> np.ndarray:
        acc = np.zeros((x.shape[0], len(STAT_COLUMNS)), dtype=np.float64)
        for tree in trees:
            acc += tree.leaf_stats[tree.apply(x)]
        return acc

    partials = run_parallel(block_sum, _blocks(model.trees), threads or model.config.threads)
    total = np.zeros((x.shape[0], len(STAT_COLUMNS)), dtype=np.float64)
    for part in partials:
        total += part
    return total / model.num_trees


# ─── public API ───────────────────────────────────────────────────────
def forest_weights(model: ForestModel, x: np.ndarray) -> ForestWeights:
    """
    alpha_i(x) = (1/T) sum_t 1{i in L_t(x)} / |L_t(x)|  (추정 절반 구성원만)
    """
    q = _as_query(model, x)
    if q.shape[0] != 1:
        raise DimensionMismatch("forest_weights takes a single query point")
    dense = np.zeros(model.n_train, dtype=np.float64)
    for tree in model.trees:
        members = tree.members(int(tree.apply(q)[0]))
        dense[members] += 1.0 / members.shape[0]
    dense /= model.num_trees
    idx = np.flatnonzero(dense > 0)
    return ForestWeights(indices=idx, weights=dense[idx])


def predict_ratio_batch(model: ForestModel, x: np.ndarray, threads: Optional[int] = None) -> np.ndarray:
    """
    rho(x) = (E_a[yz] - E_a[y] E_a[z]) / (E_a[tz] - E_a[t] E_a[z])
    - 분모 절댓값이 1e-12 미만인 행이 있으면 ZeroDenominator
    """
    if model.mode == ForestMode.REGRESSION:
        raise ModeMismatch("ratio predictions need a causal or instrumental forest")
    q = _as_query(model, x)
    m = _stat_means(model, q, threads)
    num = m[:, _YZ] - m[:, _Y] * m[:, _Z]
    den = m[:, _TZ] - m[:, _T] * m[:, _Z]
    bad = np.flatnonzero(np.abs(den) < DENOMINATOR_EPS)
    if bad.size:
        raise ZeroDenominator(
            f"weighted Cov(t, z) is below {DENOMINATOR_EPS:g} at {bad.size} query row(s) (first: {int(bad[0])})"
        )
    return num / den


def predict_ratio(model: ForestModel, x: np.ndarray) -> float:
    return float(predict_ratio_batch(model, _as_query(model, x))[0])


def predict_regression_batch(model: ForestModel, x: np.ndarray, threads: Optional[int] = None) -> np.ndarray:
    """가중 평균 E_a[y] (회귀 모드가 아니면 centered outcome 의 가중 평균)"""
    q = _as_query(model, x)
    return _stat_means(model, q, threads)[:, _Y]


def predict_regression(model: ForestModel, x: np.ndarray) -> float:
    return float(predict_regression_batch(model, _as_query(model, x))[0])


def predict_oob(model: ForestModel, x_train: np.ndarray, threads: Optional[int] = None) -> np.ndarray:
    """
    학습 행별 out-of-bag 회귀 예측
    - 해당 행을 부표본에 포함하지 않은 트리만 평균
    - OOB 트리가 없는 행은 전체 포레스트 예측으로 대체
    """
    if model.mode != ForestMode.REGRESSION:
        raise ModeMismatch("out-of-bag predictions are defined for regression forests")
    x = _as_query(model, x_train)
    n = x.shape[0]
    if n != model.n_train:
        raise DimensionMismatch(f"predict_oob needs the {model.n_train} training rows, got {n}")

    def block_sum(trees: Sequence[Tree]) -> np.ndarray:
        acc = np.zeros((n, 2), dtype=np.float64)
        for tree in trees:
            mask = np.ones(n, dtype=bool)
            mask[tree.subsample] = False
            rows = np.flatnonzero(mask)
            if rows.size == 0:
                continue
            acc[rows, 0] += tree.leaf_stats[tree.apply(x[rows]), _Y]
            acc[rows, 1] += 1.0
        return acc

    total = np.zeros((n, 2), dtype=np.float64)
    for part in run_parallel(block_sum, _blocks(model.trees), threads or model.config.threads):
        total += part

    out = np.empty(n, dtype=np.float64)
    has_oob = total[:, 1] > 0
    out[has_oob] = total[has_oob, 0] / total[has_oob, 1]
    if not has_oob.all():
        missing = np.flatnonzero(~has_oob)
        logger.debug("predict_oob: %d row(s) without OOB trees use full-forest predictions", missing.size)
        out[missing] = predict_regression_batch(model, x[missing], threads)
    return out
