"""
QINI 평가 엔티티
- EvalWeights: 행별 보상/비용 변환값 Q^R_i, Q^B_i
- ArmNuisances: aipw 모드용 팔별 회귀 예측
- QiniCurve: 점수 내림차순 누적 (spend, reward) 곡선
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from costcast.services.evaluation.exceptions import DegenerateCurve


@dataclass(frozen=True, eq=False)
class ArmNuisances:
    """
    평가 행별 팔 조건부 평균 예측
    - mu1_y, mu0_y: E[Y | x, W=1], E[Y | x, W=0]
    - mu1_c, mu0_c: E[C | x, W=1], E[C | x, W=0]
    """
    mu1_y: np.ndarray
    mu0_y: np.ndarray
    mu1_c: np.ndarray
    mu0_c: np.ndarray


@dataclass(frozen=True, eq=False)
class EvalWeights:
    """
    행별 변환값
    - reward: Y 로 만든 변환 (평균 = 처치 효과 추정)
    - cost:   C 로 만든 변환 (평균 = 증분 비용 추정)
    - mode:   "ipw" 또는 "aipw"
    """
    reward: np.ndarray
    cost: np.ndarray
    mode: str
    propensity: np.ndarray

    @property
    def n(self) -> int:
        return int(self.reward.shape[0])


@dataclass(frozen=True, eq=False)
class QiniCurve:
    """
    비용 가중 QINI 곡선

    속성:
      thresholds: 점수 내림차순 고유 임계값 (길이 m)
      spend:      (0, B(s_1), ..., B(s_m) = B(0)) 누적 1인당 비용 (길이 m+1)
      reward:     (0, R(s_1), ..., R(s_m) = R(0)) 누적 1인당 보상 (길이 m+1)
      b0, r0:     전원 처치 시 비용 / 보상
      scores, unit_reward, unit_cost, cluster_id: 추론용 행별 값 (평균 곡선에는 없음)
    """
    thresholds: np.ndarray
    spend: np.ndarray
    reward: np.ndarray
    b0: float
    r0: float
    scores: Optional[np.ndarray] = None
    unit_reward: Optional[np.ndarray] = None
    unit_cost: Optional[np.ndarray] = None
    cluster_id: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return 0 if self.scores is None else int(self.scores.shape[0])

    @property
    def n_points(self) -> int:
        return int(self.spend.shape[0])

    def prefix_index(self, b: float) -> int:
        """
        예산 b 안에서 처치할 수 있는 가장 긴 접두 구간의 곡선 인덱스
        - spend 가 처음 b 를 넘기 직전 점 (b >= B(0) 이면 마지막 점)
        """
        if b >= self.b0:
            return self.n_points - 1
        over = np.flatnonzero(self.spend > b)
        if over.size == 0:
            return self.n_points - 1
        return max(int(over[0]) - 1, 0)

    def value_at(self, b: float) -> float:
        """spend = b 에서의 보상 (처음 교차 구간에서 선형 보간, 끝 이후는 평탄)"""
        over = np.flatnonzero(self.spend > b)
        if over.size == 0:
            return float(self.reward[-1])
        j = int(over[0])
        if j == 0:
            return float(self.reward[0])
        s0, s1 = self.spend[j - 1], self.spend[j]
        r0, r1 = self.reward[j - 1], self.reward[j]
        if s1 == s0:
            return float(r1)
        return float(r0 + (r1 - r0) * (b - s0) / (s1 - s0))

    def normalized(self) -> "QiniCurve":
        """단위 없는 곡선 (spend / B(0), reward / R(0))"""
        if self.b0 == 0 or self.r0 == 0:
            raise DegenerateCurve("cannot normalize a curve whose endpoint has zero spend or reward")
        return QiniCurve(
            thresholds=self.thresholds,
            spend=self.spend / self.b0,
            reward=self.reward / self.r0,
            b0=1.0,
            r0=1.0,
            scores=self.scores,
            unit_reward=None if self.unit_reward is None else self.unit_reward / self.r0,
            unit_cost=None if self.unit_cost is None else self.unit_cost / self.b0,
            cluster_id=self.cluster_id,
        )
