"""
cross-fitted 선형 우선순위 추정 (double machine learning)

점수 함수:
  e_i(beta, h) = (W_i - h_w(X_i)) * ((Y_i - h_y(X_i)) - (C_i - h_c(X_i)) X_i'beta)
모멘트 조건 E[X_i e_i] = 0 을 fold 마다 닫힌 형태로 풀고 fold 평균을 취함
"""

import logging
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from costcast.core.config import get_settings
from costcast.models.dataset import Dataset, SplitPlan
from costcast.models.estimation import DmlFit, NuisanceFit, SupportPoint
from costcast.schemas.forest_schema import ForestConfig
from costcast.services.data.splitting_service import make_folds
from costcast.services.estimators.exceptions import FoldTooSmall, SingularMoment
from costcast.services.estimators.nuisance_service import fit_nuisances

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e10
NUISANCE_NAMES: Tuple[str, ...] = ("h_y", "h_c", "h_w")


def design_matrix(x: np.ndarray, add_intercept: bool) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if add_intercept:
        return np.column_stack([np.ones(x.shape[0]), x])
    return x


def _residuals(d: Dataset, nuisances: NuisanceFit) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rw = d.w.astype(np.float64) - nuisances.h_w
    ry = d.y - nuisances.h_y
    rc = d.c - nuisances.h_c
    return rw, ry, rc


# ─── fit ──────────────────────────────────────────────────────────────
def fit_dml(
    d: Dataset,
    k: Optional[int] = None,
    nuisance_cfg: Optional[ForestConfig] = None,
    seed: Optional[int] = None,
    nuisances: Optional[NuisanceFit] = None,
    add_intercept: bool = False,
    plan: Optional[SplitPlan] = None,
) -> DmlFit:
    """
    1) fold 배정 (nuisances가 주어지고 k=1이면 단일 fold)
    2) nuisance 가 없으면 cross-fitting 으로 추정
    3) fold k: [sum A X X'] beta_k = sum (W - h_w)(Y - h_y) X, A = (W - h_w)(C - h_c)
    4) beta = mean_k beta_k, vcov = J^-1 Omega J^-T / n
    """
    settings = get_settings()
    k = settings.DEFAULT_FOLDS if k is None else k
    seed = settings.DEFAULT_SEED if seed is None else seed
    xs = design_matrix(d.x, add_intercept)
    n, q = xs.shape

    # 1) fold 배정
    if plan is None:
        plan = nuisances.plan if nuisances is not None and nuisances.plan is not None else None
    if plan is None:
        if nuisances is not None and k == 1:
            plan = SplitPlan(fold_assignment=np.zeros(n, dtype=np.int64), seed=seed)
        else:
            plan = make_folds(d, k, seed)

    # 2) nuisance
    if nuisances is None:
        nuisances = fit_nuisances(d, plan, nuisance_cfg)
    rw, ry, rc = _residuals(d, nuisances)
    a = rw * rc

    # 3) fold 별 닫힌 형태 해
    betas: List[np.ndarray] = []
    conditions: List[float] = []
    for fold in range(plan.k):
        idx = plan.fold_indices(fold)
        if idx.shape[0] < q + 1:
            raise FoldTooSmall(f"fold {fold} has {idx.shape[0]} rows; need at least {q + 1}")
        xf = xs[idx]
        m = (xf * a[idx][:, None]).T @ xf
        v = xf.T @ (rw[idx] * ry[idx])
        cond = float(np.linalg.cond(m))
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularMoment(fold, cond)
        betas.append(np.linalg.solve(m, v))
        conditions.append(cond)
    beta_per_fold = np.vstack(betas)
    beta = beta_per_fold.mean(axis=0)

    # 4) sandwich
    j = (xs * a[:, None]).T @ xs / n
    e = rw * (ry - rc * (xs @ beta))
    v_i = xs * e[:, None]
    omega = v_i.T @ v_i / n
    j_inv = np.linalg.inv(j)
    vcov = j_inv @ omega @ j_inv.T / n
    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))

    logger.info("fit_dml: n=%d q=%d folds=%d beta=%s", n, q, plan.k, np.array2string(beta, precision=4))
    return DmlFit(
        beta=beta,
        beta_per_fold=beta_per_fold,
        vcov=vcov,
        se=se,
        J=j,
        omega=omega,
        fold_conditions=tuple(conditions),
        nuisances=nuisances,
        add_intercept=add_intercept,
    )


# ─── orthogonality diagnostics ────────────────────────────────────────
def empirical_moment(
    d: Dataset,
    beta: np.ndarray,
    h_y: np.ndarray,
    h_c: np.ndarray,
    h_w: np.ndarray,
    add_intercept: bool = False,
) -> np.ndarray:
    """(1/n) sum X_i e_i(beta, h)"""
    xs = design_matrix(d.x, add_intercept)
    e = (d.w - h_w) * ((d.y - h_y) - (d.c - h_c) * (xs @ beta))
    return xs.T @ e / d.n


def perturbation_directions(x: np.ndarray, seed: int) -> Dict[str, np.ndarray]:
    """nuisance별 유계 교란 방향 delta(x) = tanh(x'v + u)"""
    rng = np.random.default_rng(seed)
    p = x.shape[1]
    out: Dict[str, np.ndarray] = {}
    for name in NUISANCE_NAMES:
        v = rng.normal(0.0, 1.0 / np.sqrt(p), size=p)
        u = rng.normal()
        out[name] = np.tanh(x @ v + u)
    return out


def _perturbed_moment(
    d: Dataset,
    beta: np.ndarray,
    nuisances: NuisanceFit,
    shifts: Dict[str, np.ndarray],
    add_intercept: bool,
) -> np.ndarray:
    return empirical_moment(
        d,
        beta,
        nuisances.h_y + shifts.get("h_y", 0.0),
        nuisances.h_c + shifts.get("h_c", 0.0),
        nuisances.h_w + shifts.get("h_w", 0.0),
        add_intercept,
    )


def orthogonality_check(
    d: Dataset,
    beta: np.ndarray,
    nuisances: NuisanceFit,
    perturbation_scale: float = 1e-4,
    seed: int = 0,
    add_intercept: bool = False,
) -> Dict[str, float]:
    """
    nuisance 방향별 Gateaux 미분 노름
    d/d eps E_n[X e(beta, h + eps * delta)] 을 eps=0 에서 중심 차분으로 근사
    """
    beta = np.asarray(beta, dtype=np.float64)
    directions = perturbation_directions(d.x, seed)
    h = float(perturbation_scale)
    out: Dict[str, float] = {}
    for name in NUISANCE_NAMES:
        plus = _perturbed_moment(d, beta, nuisances, {name: h * directions[name]}, add_intercept)
        minus = _perturbed_moment(d, beta, nuisances, {name: -h * directions[name]}, add_intercept)
        out[name] = float(np.linalg.norm((plus - minus) / (2.0 * h)))
    logger.debug("orthogonality_check: %s", out)
    return out


def moment_drift(
    d: Dataset,
    beta: np.ndarray,
    nuisances: NuisanceFit,
    eps: float,
    seed: int = 0,
    add_intercept: bool = False,
) -> float:
    """
    세 nuisance 를 동시에 eps * delta 만큼 교란했을 때 모멘트 변화 노름
    - 직교 점수면 eps 에 대해 2차로 줄어듦
    """
    beta = np.asarray(beta, dtype=np.float64)
    directions = perturbation_directions(d.x, seed)
    base = _perturbed_moment(d, beta, nuisances, {}, add_intercept)
    shifted = _perturbed_moment(
        d, beta, nuisances, {name: eps * directions[name] for name in NUISANCE_NAMES}, add_intercept
    )
    return float(np.linalg.norm(shifted - base))


# ─── exact finite-support identities ──────────────────────────────────
FractionDirection = Callable[[Tuple[Fraction, ...]], Fraction]


def _default_direction(x: Tuple[Fraction, ...]) -> Fraction:
    return 1 + sum(x, Fraction(0))


def population_orthogonality(
    support: Sequence[SupportPoint],
    beta: Sequence[Fraction],
    direction: Optional[FractionDirection] = None,
) -> Dict[str, List[Fraction]]:
    """
    유한 지지집합에서 모집단 모멘트의 nuisance 방향 미분을 분수로 정확히 계산
    - 진짜 nuisance (h_y = E[Y|x], h_c = E[C|x], h_w = e(x)) 에서 세 방향 모두 정확히 0
    """
    delta = direction or _default_direction
    beta = [Fraction(b) for b in beta]
    q = len(beta)
    out = {name: [Fraction(0)] * q for name in NUISANCE_NAMES}

    for point in support:
        x = [Fraction(v) for v in point.x]
        xb = sum((xi * bi for xi, bi in zip(x, beta)), Fraction(0))
        e = point.propensity
        h_y = e * point.y1 + (1 - e) * point.y0
        h_c = e * point.c1 + (1 - e) * point.c0
        d = delta(tuple(x))

        # 조건부 기대값 (팔 단위 열거)
        w_resid = sum((prob * (w - e) for w, prob, _, _ in point.arms()), Fraction(0))
        outcome_resid = sum(
            (prob * ((y - h_y) - (c - h_c) * xb) for _, prob, y, c in point.arms()), Fraction(0)
        )
        deriv = {
            "h_y": -d * w_resid,
            "h_c": d * w_resid * xb,
            "h_w": -d * outcome_resid,
        }
        for name, scalar in deriv.items():
            out[name] = [acc + point.weight * xi * scalar for acc, xi in zip(out[name], x)]
    return out


def covariance_ratio_identity(support: Sequence[SupportPoint]) -> List[Tuple[Fraction, Fraction]]:
    """
    지지점마다 (Cov(Y, W | x) / Cov(C, W | x), (y1 - y0) / (c1 - c0)) 쌍을 분수로 반환
    - 처치 확률이 알려진 무작위 배정이면 두 값이 정확히 같음
    """
    pairs: List[Tuple[Fraction, Fraction]] = []
    for point in support:
        arms = point.arms()
        e_w = sum((prob * w for w, prob, _, _ in arms), Fraction(0))
        e_y = sum((prob * y for _, prob, y, _ in arms), Fraction(0))
        e_c = sum((prob * c for _, prob, _, c in arms), Fraction(0))
        e_yw = sum((prob * y * w for w, prob, y, _ in arms), Fraction(0))
        e_cw = sum((prob * c * w for w, prob, _, c in arms), Fraction(0))
        cov_yw = e_yw - e_y * e_w
        cov_cw = e_cw - e_c * e_w
        pairs.append((cov_yw / cov_cw, (point.y1 - point.y0) / (point.c1 - point.c0)))
    return pairs
