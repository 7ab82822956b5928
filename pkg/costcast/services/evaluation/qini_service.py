"""
비용 가중 QINI 곡선

  B(s) = (1/n) sum (W_i / pi_i - (1 - W_i) / (1 - pi_i)) C_i 1{S_i >= s}
  R(s) = 같은 변환을 Y_i 로

점수 내림차순으로 고유 임계값마다 한 점씩 평가 (동점은 함께 들어감)
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from costcast.models.dataset import Dataset
from costcast.models.qini import ArmNuisances, QiniCurve
from costcast.schemas.evaluation_schema import EvalMode
from costcast.services.evaluation.exceptions import EmptyInput, LengthMismatch
from costcast.services.evaluation.transforms import eval_weights

logger = logging.getLogger(__name__)


def curve_from_units(
    scores: np.ndarray,
    unit_reward: np.ndarray,
    unit_cost: np.ndarray,
    cluster_id: Optional[np.ndarray] = None,
) -> QiniCurve:
    """
    행별 변환값에서 곡선 생성
    1) 점수 내림차순 고유 임계값
    2) 임계값별 변환값 합을 누적해 1인당으로 나눔
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if n == 0:
        raise EmptyInput("cannot build a curve from zero units")
    uniq, inverse = np.unique(scores, return_inverse=True)
    uniq = uniq[::-1]
    inverse = (uniq.shape[0] - 1) - inverse
    reward_mass = np.bincount(inverse, weights=unit_reward, minlength=uniq.shape[0])
    cost_mass = np.bincount(inverse, weights=unit_cost, minlength=uniq.shape[0])
    spend = np.concatenate([[0.0], np.cumsum(cost_mass) / n])
    reward = np.concatenate([[0.0], np.cumsum(reward_mass) / n])
    return QiniCurve(
        thresholds=uniq,
        spend=spend,
        reward=reward,
        b0=float(spend[-1]),
        r0=float(reward[-1]),
        scores=scores,
        unit_reward=np.asarray(unit_reward, dtype=np.float64),
        unit_cost=np.asarray(unit_cost, dtype=np.float64),
        cluster_id=cluster_id,
    )


def qini_curve(
    test: Dataset,
    scores: Sequence[float],
    mode: Union[EvalMode, str] = EvalMode.IPW,
    nuisances: Optional[ArmNuisances] = None,
) -> QiniCurve:
    """평가 데이터와 점수로 QINI 곡선 계산"""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] != test.n:
        raise LengthMismatch(f"{scores.shape[0]} scores for {test.n} evaluation rows")
    weights = eval_weights(test, mode, nuisances)
    curve = curve_from_units(scores, weights.reward, weights.cost, test.cluster_id)
    logger.debug("qini_curve: n=%d points=%d B0=%.4g R0=%.4g", test.n, curve.n_points, curve.b0, curve.r0)
    return curve


def oracle_curve(
    tau: Sequence[float],
    gamma: Sequence[float],
    scores: Sequence[float],
) -> QiniCurve:
    """정답 tau(X_i), gamma(X_i) 를 점수 순서대로 누적한 잡음 없는 곡선"""
    tau = np.asarray(tau, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if not (tau.shape == gamma.shape == scores.shape):
        raise LengthMismatch("tau, gamma and scores must have equal length")
    return curve_from_units(scores, tau, gamma)


def curve_average(curves: Sequence[QiniCurve], grid: Sequence[float]) -> QiniCurve:
    """
    곡선들을 공통 spend 격자에 선형 보간한 뒤 점별 평균
    """
    if len(curves) == 0:
        raise EmptyInput("curve_average needs at least one curve")
    grid = np.asarray(grid, dtype=np.float64)
    values = np.array([[curve.value_at(float(g)) for g in grid] for curve in curves])
    reward = values.mean(axis=0)
    return QiniCurve(
        thresholds=np.full(max(grid.shape[0] - 1, 0), np.nan),
        spend=grid,
        reward=reward,
        b0=float(grid[-1]),
        r0=float(reward[-1]),
    )
