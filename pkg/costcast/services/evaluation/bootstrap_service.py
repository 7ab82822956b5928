"""
half-sample bootstrap

- 비복원으로 floor(n/2) 행 (cluster=True면 floor(G/2) 클러스터) 을 뽑아 Delta(b) 재계산
- 편차 (Delta_half - Delta_full) 에 sqrt(m / (n - m)) 를 곱해 전체 표본 추정량의 분포로 사용
  (m = n/2 이면 1)
- 반복별 RNG = (seed, 반복 번호) 이므로 워커 수와 무관
- paired_bootstrap: 두 점수 규칙을 같은 부표본에서 비교
"""

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from costcast.core.config import get_settings
from costcast.core.parallel import run_parallel, task_rng
from costcast.models.dataset import Dataset
from costcast.models.qini import ArmNuisances, QiniCurve
from costcast.schemas.evaluation_schema import (
    BootstrapConfig,
    BootstrapResult,
    EvalMode,
    PairedBootstrapResult,
)
from costcast.services.evaluation.exceptions import EmptyInput, TooFewReps
from costcast.services.evaluation.qini_service import curve_from_units, qini_curve

logger = logging.getLogger(__name__)

MIN_REPS = 100


def lift_delta(curve: QiniCurve, b: float) -> float:
    """
    Delta(b) = Q(b) - R(0) * (b / B(0))
    - b = B(0) 이면 정확히 0
    - B(0) <= 0 이면 정의되지 않음 (nan)
    """
    if not curve.b0 > 0:
        return float("nan")
    k = curve.prefix_index(b)
    return float(curve.reward[k] - curve.r0 * (b / curve.b0))


def _half_sample_plan(curve: QiniCurve, cfg: BootstrapConfig):
    """
    절반 추출 단위 결정
    - cluster=True 이고 클러스터 ID 가 있으면 클러스터, 아니면 행
    - 반환: (단위 수, 추출 수, 클러스터별 행 목록 또는 None)
    """
    if cfg.cluster and curve.cluster_id is not None:
        groups, inverse = np.unique(curve.cluster_id, return_inverse=True)
        members = [np.flatnonzero(inverse == g) for g in range(groups.shape[0])]
        n_units, n_draw = groups.shape[0], groups.shape[0] // 2
    else:
        if cfg.cluster:
            logger.warning("cluster bootstrap requested but no cluster ids are present; resampling rows")
        members = None
        n_units, n_draw = curve.n, curve.n // 2
    if n_draw < 1 or n_draw >= n_units:
        raise EmptyInput(f"cannot draw half samples from {n_units} unit(s)")
    return n_units, n_draw, members


def _half_sample_rows(seed: int, r: int, n_units: int, n_draw: int, members) -> np.ndarray:
    """반복 r 의 절반 부표본 행 인덱스 (같은 seed, r 이면 항상 같은 행)"""
    rng = task_rng(seed, r)
    picked = np.sort(rng.choice(n_units, size=n_draw, replace=False))
    return picked if members is None else np.concatenate([members[g] for g in picked])


def _resolve_reps(cfg: BootstrapConfig) -> int:
    reps = cfg.reps if cfg.reps is not None else get_settings().BOOTSTRAP_REPS
    if reps < MIN_REPS:
        raise TooFewReps(f"half-sample bootstrap needs at least {MIN_REPS} replicates, got {reps}")
    return reps


def _interval(full: float, dev: np.ndarray, alpha: float, symmetric: bool) -> Tuple[float, float]:
    if symmetric:
        half = float(np.quantile(np.abs(dev), 1.0 - alpha))
        return (full - half, full + half)
    lo, hi = np.quantile(dev, [alpha / 2.0, 1.0 - alpha / 2.0])
    return (min(full + float(lo), full), max(full + float(hi), full))


def _sub_curve(curve: QiniCurve, idx: np.ndarray) -> QiniCurve:
    return curve_from_units(curve.scores[idx], curve.unit_reward[idx], curve.unit_cost[idx])


def bootstrap_curve(
    curve: QiniCurve,
    b: float,
    cfg: Optional[BootstrapConfig] = None,
    alpha: float = 0.05,
) -> BootstrapResult:
    """
    곡선에 저장된 행별 값으로 half-sample bootstrap 수행
    1) 전체 표본 Delta(b), Q(b)
    2) 반복마다 절반 부표본의 곡선과 Delta(b), Q(b)
    3) 스케일 조정 편차의 표준편차 = SE, 분위수 구간 (전체 추정값 중심)
    """
    cfg = cfg or BootstrapConfig()
    reps = _resolve_reps(cfg)
    if curve.scores is None:
        raise EmptyInput("curve carries no per-unit values to resample")

    full = lift_delta(curve, b)
    q_full = float(curve.reward[curve.prefix_index(b)])
    n_units, n_draw, members = _half_sample_plan(curve, cfg)
    factor = math.sqrt(n_draw / (n_units - n_draw))

    def replicate(r: int) -> Tuple[float, float]:
        sub = _sub_curve(curve, _half_sample_rows(cfg.seed, r, n_units, n_draw, members))
        return lift_delta(sub, b), float(sub.reward[sub.prefix_index(b)])

    draws = np.asarray(run_parallel(replicate, range(reps), cfg.threads), dtype=np.float64).reshape(reps, 2)
    deltas, qs = draws[:, 0], draws[:, 1]
    ok = np.isfinite(deltas)
    if not ok.all():
        logger.warning("bootstrap: %d of %d replicate(s) had nonpositive B(0) and were dropped", int((~ok).sum()), reps)
    dev = factor * (deltas[ok] - full)
    q_dev = factor * (qs[ok] - q_full)
    if dev.shape[0] < 2:
        raise EmptyInput("too few usable bootstrap replicates")

    se = float(np.std(dev, ddof=1))
    ci = _interval(full, dev, alpha, cfg.symmetric)
    q_ci = _interval(q_full, q_dev, alpha, cfg.symmetric)
    logger.debug("bootstrap: reps=%d se=%.4g ci=(%.4g, %.4g)", reps, se, ci[0], ci[1])
    return BootstrapResult(
        se=se,
        ci=ci,
        estimate=full,
        deviations=dev.tolist(),
        q_estimate=q_full,
        q_se=float(np.std(q_dev, ddof=1)),
        q_ci=q_ci,
    )


def paired_bootstrap(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    test: Dataset,
    b: float,
    cfg: Optional[BootstrapConfig] = None,
    alpha: float = 0.05,
    mode: Union[EvalMode, str] = EvalMode.IPW,
    nuisances: Optional[ArmNuisances] = None,
) -> PairedBootstrapResult:
    """
    두 점수 규칙의 Delta(b) 차이에 대한 짝지은 half-sample bootstrap
    - 두 곡선이 반복마다 같은 절반 부표본을 사용
    - p값 = (1 + #{|편차| >= |차이|}) / (1 + 사용한 반복 수)
    """
    cfg = cfg or BootstrapConfig()
    reps = _resolve_reps(cfg)
    curve_a = qini_curve(test, scores_a, mode, nuisances)
    curve_b = qini_curve(test, scores_b, mode, nuisances)

    est_a, est_b = lift_delta(curve_a, b), lift_delta(curve_b, b)
    diff = est_a - est_b
    if not np.isfinite(diff):
        raise EmptyInput("lift difference is undefined when B(0) <= 0")
    n_units, n_draw, members = _half_sample_plan(curve_a, cfg)
    factor = math.sqrt(n_draw / (n_units - n_draw))

    def replicate(r: int) -> float:
        idx = _half_sample_rows(cfg.seed, r, n_units, n_draw, members)
        return lift_delta(_sub_curve(curve_a, idx), b) - lift_delta(_sub_curve(curve_b, idx), b)

    diffs = np.asarray(run_parallel(replicate, range(reps), cfg.threads), dtype=np.float64)
    ok = np.isfinite(diffs)
    dev = factor * (diffs[ok] - diff)
    if dev.shape[0] < 2:
        raise EmptyInput("too few usable bootstrap replicates")

    se = float(np.std(dev, ddof=1))
    ci = _interval(diff, dev, alpha, cfg.symmetric)
    p_value = float((1 + np.count_nonzero(np.abs(dev) >= abs(diff))) / (1 + dev.shape[0]))
    logger.info("paired_bootstrap: b=%.4g diff=%.4g se=%.4g p=%.4g", b, diff, se, p_value)
    return PairedBootstrapResult(
        b=b,
        estimate_a=est_a,
        estimate_b=est_b,
        difference=diff,
        se=se,
        ci=ci,
        p_value=min(p_value, 1.0),
        alpha=alpha,
        reps=int(dev.shape[0]),
    )


def half_sample_bootstrap(
    test: Dataset,
    scores: Sequence[float],
    b: float,
    reps: Optional[int] = None,
    seed: int = 0,
    cluster: bool = False,
    alpha: float = 0.05,
    mode: Union[EvalMode, str] = EvalMode.IPW,
    nuisances: Optional[ArmNuisances] = None,
    threads: Optional[int] = None,
) -> BootstrapResult:
    """평가 데이터에서 바로 half-sample bootstrap (SE, 구간)"""
    curve = qini_curve(test, scores, mode, nuisances)
    cfg = BootstrapConfig(reps=reps, seed=seed, cluster=cluster, threads=threads)
    return bootstrap_curve(curve, b, cfg, alpha)
