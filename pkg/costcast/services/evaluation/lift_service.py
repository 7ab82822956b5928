import logging
import math
from typing import Optional

import numpy as np
from scipy import stats

from costcast.models.qini import QiniCurve
from costcast.schemas.evaluation_schema import BootstrapConfig, LiftEstimate
from costcast.services.evaluation.bootstrap_service import bootstrap_curve, lift_delta
from costcast.services.evaluation.exceptions import BudgetOutOfRange, EmptyInput

logger = logging.getLogger(__name__)

MIN_BANDWIDTH = 25


def slope_bandwidth(n: int) -> int:
    return max(MIN_BANDWIDTH, n // 100)


def local_slope(curve: QiniCurve, k: int, bandwidth: int) -> float:
    """곡선 인덱스 k 주변 대칭 유한 차분 dR / dB"""
    lo = max(k - bandwidth, 0)
    hi = min(k + bandwidth, curve.n_points - 1)
    ds = curve.spend[hi] - curve.spend[lo]
    if ds == 0:
        return 0.0
    return float((curve.reward[hi] - curve.reward[lo]) / ds)


def delta_at_spend(curve: QiniCurve, b: float) -> float:
    """닫힌 구간 0 < b <= B(0) 에서 Delta(b) (끝점에서 정확히 0)"""
    if not 0 < b <= curve.b0:
        raise BudgetOutOfRange(f"budget {b} outside (0, {curve.b0}]")
    return lift_delta(curve, b)


def lift_at_budget(
    curve: QiniCurve,
    b: float,
    alpha: float = 0.05,
    bootstrap_cfg: Optional[BootstrapConfig] = None,
) -> LiftEstimate:
    """
    예산 b 에서 lift Delta(b) 와 추론
    1) s_hat: spend 가 b 를 처음 넘기 전까지의 가장 긴 접두 구간의 임계값
    2) Q(b) = R(s_hat), Delta(b) = Q(b) - b R(0) / B(0)
    3) 영향함수 psi_q, psi_d (R'/B' 는 국소 유한 차분 기울기)
    4) Delta(b), Q(b) 각각의 Wald 구간과 half-sample bootstrap 구간
    """
    if curve.scores is None:
        raise EmptyInput("lift needs a curve built from evaluation rows")
    if not 0 < b < curve.b0:
        raise BudgetOutOfRange(f"budget {b} outside (0, {curve.b0})")

    n = curve.n
    k = curve.prefix_index(b)
    q_hat = float(curve.reward[k])
    spend_k = float(curve.spend[k])
    delta_hat = lift_delta(curve, b)
    s_hat = float(curve.thresholds[k - 1]) if k >= 1 else math.inf

    # 영향함수
    slope = local_slope(curve, k, slope_bandwidth(n))
    treated = curve.scores >= s_hat
    r_i = curve.unit_reward * treated
    b_i = curve.unit_cost * treated
    psi_q = (r_i - q_hat) - slope * (b_i - spend_k)
    psi_d = (
        psi_q
        - b * (curve.unit_reward - curve.r0) / curve.b0
        + b * curve.r0 * (curve.unit_cost - curve.b0) / curve.b0 ** 2
    )
    se = float(np.sqrt(np.var(psi_d) / n))
    z = float(stats.norm.ppf(1.0 - alpha / 2.0))
    wald_ci = (delta_hat - z * se, delta_hat + z * se)
    q_se = float(np.sqrt(np.var(psi_q) / n))
    q_ci = (q_hat - z * q_se, q_hat + z * q_se)

    cfg = bootstrap_cfg or BootstrapConfig()
    bootstrap_se = None
    ci = wald_ci
    if cfg.enabled:
        result = bootstrap_curve(curve, b, cfg, alpha)
        bootstrap_se, ci = result.se, result.ci
        q_ci = result.q_ci

    logger.info("lift_at_budget: b=%.4g q=%.4g delta=%.4g se=%.4g ci=(%.4g, %.4g)", b, q_hat, delta_hat, se, *ci)
    return LiftEstimate(
        b=b,
        q_hat=q_hat,
        delta_hat=delta_hat,
        s_hat=s_hat,
        se=se,
        ci=ci,
        wald_ci=wald_ci,
        alpha=alpha,
        bootstrap_se=bootstrap_se,
        q_se=q_se,
        q_ci=q_ci,
        slope=slope,
        psi_q=psi_q.tolist(),
        psi_d=psi_d.tolist(),
    )
