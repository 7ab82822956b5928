import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from costcast.schemas.policy_schema import ScoredUnit, ThresholdPolicy
from costcast.services.policy.exceptions import (
    LengthMismatch,
    NonpositiveBudget,
    NonpositiveCost,
)

logger = logging.getLogger(__name__)

BISECTION_MAX_ITER = 200


def _as_arrays(units: Sequence[ScoredUnit]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    priority = np.array([u.priority for u in units], dtype=np.float64)
    cost = np.array([u.expected_cost for u in units], dtype=np.float64)
    ids = np.array([u.unit_id for u in units], dtype=np.int64)
    return priority, cost, ids


def score_units(
    priorities: Sequence[float],
    expected_costs: Sequence[float],
    unit_ids: Optional[Sequence[int]] = None,
) -> List[ScoredUnit]:
    """
    (우선순위, 기대 비용) 벡터를 ScoredUnit 목록으로 변환
    - 기대 비용 0 이하 단위는 거부 (무료 단위는 호출자가 미리 제외)
    """
    priorities = np.asarray(priorities, dtype=np.float64)
    expected_costs = np.asarray(expected_costs, dtype=np.float64)
    if priorities.shape != expected_costs.shape:
        raise LengthMismatch(
            f"priorities ({priorities.shape[0]}) and costs ({expected_costs.shape[0]}) differ in length"
        )
    if unit_ids is None:
        unit_ids = range(len(priorities))
    units = [
        ScoredUnit(priority=float(p), expected_cost=float(c), unit_id=int(i))
        for p, c, i in zip(priorities, expected_costs, unit_ids)
    ]
    _check_costs(expected_costs)
    return units


def _check_costs(cost: np.ndarray) -> None:
    bad = np.flatnonzero(~(cost > 0))
    if bad.size:
        raise NonpositiveCost(
            f"expected_cost must be > 0; {bad.size} unit(s) violate it (first at position {int(bad[0])})"
        )


def spend_above(priority: np.ndarray, cost: np.ndarray, rho: float) -> float:
    """beta(rho) = mean(1{priority > rho} * cost)"""
    return float(np.sum(cost[priority > rho]) / priority.shape[0])


def solve_policy(units: Sequence[ScoredUnit], budget_per_capita: float) -> ThresholdPolicy:
    """
    1인당 예산 B에서 최적 (확률적) 임계값 정책 계산

    1) 우선순위 내림차순 고유값 u_1 > ... > u_m 과 누적 비용 S_k = mean(1{priority >= u_k} * cost)
    2) eta_B = S_k > B 를 처음 만족하는 u_k (없으면 -inf), rho_B = max(eta_B, 0)
    3) rho_B > 0 이면 동점 단위에 a_B = min((B - beta(rho_B)) / tie_mass, 1)
    4) rho_B = 0 이면 a_B = 0 (우선순위 0 이하 단위는 처치하지 않음)
    """
    if not budget_per_capita > 0:
        raise NonpositiveBudget(f"budget must be > 0, got {budget_per_capita}")
    priority, cost, ids = _as_arrays(units)
    n = priority.shape[0]
    if n == 0:
        return ThresholdPolicy(rho_b=0.0, a_b=0.0, per_unit_prob=[], unit_ids=[])
    _check_costs(cost)

    # 1) 고유 우선순위별 비용 질량 (내림차순)
    uniq, inverse = np.unique(priority, return_inverse=True)
    uniq = uniq[::-1]
    inverse = (len(uniq) - 1) - inverse
    mass = np.bincount(inverse, weights=cost, minlength=len(uniq)) / n
    cumulative = np.cumsum(mass)

    # 2) eta_B 위치 탐색
    over = np.flatnonzero(cumulative > budget_per_capita)
    if over.size == 0:
        eta_b = -np.inf
    else:
        eta_b = float(uniq[over[0]])
    rho_b = max(eta_b, 0.0)

    # 3) 혼합 확률
    a_b = 0.0
    if rho_b > 0:
        k = int(over[0])
        spent = float(cumulative[k - 1]) if k > 0 else 0.0
        tie_mass = float(mass[k])
        if tie_mass > 0:
            a_b = min((budget_per_capita - spent) / tie_mass, 1.0)
            a_b = max(a_b, 0.0)

    probs = np.where(priority > rho_b, 1.0, 0.0)
    if rho_b > 0:
        probs[priority == rho_b] = a_b

    value = float(np.mean(probs * priority * cost))
    spend = float(np.mean(probs * cost))
    logger.debug("solve_policy: n=%d B=%.6g rho_b=%.6g a_b=%.6g spend=%.6g", n, budget_per_capita, rho_b, a_b, spend)
    return ThresholdPolicy(
        rho_b=rho_b,
        a_b=a_b,
        per_unit_prob=probs.tolist(),
        unit_ids=ids.tolist(),
        expected_value=value,
        expected_spend=spend,
    )


def bisect_threshold(units: Sequence[ScoredUnit], budget_per_capita: float) -> float:
    """
    eta_B = inf{rho : beta(rho) <= B} 의 이분 탐색 근사 (최대 200회)
    - 정확해(prefix-sum) 검증용
    """
    if not budget_per_capita > 0:
        raise NonpositiveBudget(f"budget must be > 0, got {budget_per_capita}")
    priority, cost, _ = _as_arrays(units)
    _check_costs(cost)
    lo, hi = float(priority.min()), float(priority.max())
    if spend_above(priority, cost, lo - 1.0) <= budget_per_capita:
        return -np.inf
    lo -= 1.0
    # 불변식: beta(lo) > B, beta(hi) <= B
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if spend_above(priority, cost, mid) <= budget_per_capita:
            hi = mid
        else:
            lo = mid
    return hi


def rank_and_allocate(
    scores: Sequence[float],
    realized_costs: Sequence[float],
    total_budget: float,
) -> List[int]:
    """
    점수 내림차순 탐욕 배분
    - 동점은 단위 인덱스 순
    - 점수가 0 이하인 단위를 만나거나 남은 예산으로 다음 단위를 감당할 수 없으면 중단
    """
    scores = np.asarray(scores, dtype=np.float64)
    costs = np.asarray(realized_costs, dtype=np.float64)
    if scores.shape != costs.shape:
        raise LengthMismatch(f"scores ({scores.shape[0]}) and costs ({costs.shape[0]}) differ in length")
    if total_budget < 0:
        raise NonpositiveBudget(f"budget must be >= 0, got {total_budget}")

    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    remaining = float(total_budget)
    treated: List[int] = []
    for i in order:
        if scores[i] <= 0:
            break
        if costs[i] > remaining:
            break
        treated.append(int(i))
        remaining -= float(costs[i])
    return treated


def policy_value(
    policy_probs: Sequence[float],
    true_tau: Sequence[float],
    true_cost: Sequence[float],
) -> Tuple[float, float]:
    """
    정책 가치와 비용: (mean(prob * tau), mean(prob * cost))
    """
    probs = np.asarray(policy_probs, dtype=np.float64)
    tau = np.asarray(true_tau, dtype=np.float64)
    cost = np.asarray(true_cost, dtype=np.float64)
    if not (probs.shape == tau.shape == cost.shape):
        raise LengthMismatch("policy_probs, true_tau and true_cost must have equal length")
    if probs.size == 0:
        return 0.0, 0.0
    return float(np.mean(probs * tau)), float(np.mean(probs * cost))
