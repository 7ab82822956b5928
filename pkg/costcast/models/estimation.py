"""
추정 결과 엔티티
- NuisanceFit: cross-fitted nuisance 예측 h_y, h_c, h_w
- DmlFit: 선형 우선순위 계수와 sandwich 분산
- SupportPoint: 유한 공변량 지지집합의 한 점 (정확한 분수 계산용)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from costcast.models.dataset import SplitPlan
from costcast.models.forest import ForestModel
from costcast.utils.exceptions import ConfigInvalid


@dataclass(frozen=True, eq=False)
class NuisanceFit:
    """
    out-of-fold nuisance 예측

    속성:
      h_y, h_c, h_w: 행별 E[Y|X], E[C|X], E[W|X] 예측 (해당 행을 학습에 쓰지 않은 모델)
      plan:          사용한 fold 배정
      regressors:    fold별 회귀 포레스트 {"y": [...], "c": [...], "w": [...]}
      propensity:    h_w 가 알려진 상수 처치 확률이면 그 값
    """
    h_y: np.ndarray
    h_c: np.ndarray
    h_w: np.ndarray
    plan: Optional[SplitPlan] = None
    regressors: Dict[str, List[ForestModel]] = field(default_factory=dict)
    propensity: Optional[float] = None

    @classmethod
    def known(
        cls,
        h_y,
        h_c,
        h_w,
        plan: Optional[SplitPlan] = None,
        n: Optional[int] = None,
    ) -> "NuisanceFit":
        """
        이미 알고 있는 nuisance 값 (정답 함수, 0 함수 등) 으로 생성
        - 스칼라는 길이 n 으로 펼침 (n 을 비우면 배열 인자의 길이)
        """
        if n is None:
            lengths = [np.asarray(v).shape[0] for v in (h_y, h_c, h_w) if np.ndim(v) > 0]
            if not lengths:
                raise ConfigInvalid("pass n when every nuisance is a scalar")
            n = lengths[0]

        def _vec(v) -> np.ndarray:
            arr = np.asarray(v, dtype=np.float64)
            return np.full(n, float(arr)) if arr.ndim == 0 else arr.reshape(-1)

        return cls(h_y=_vec(h_y), h_c=_vec(h_c), h_w=_vec(h_w), plan=plan)


@dataclass(frozen=True, eq=False)
class DmlFit:
    """
    cross-fitted 선형 우선순위 추정 결과

    속성:
      beta:             fold 평균 계수
      beta_per_fold:    (K, q) fold별 계수
      vcov:             J^-1 Omega J^-T / n
      se:               sqrt(diag(vcov))
      J:                E[A S'] 추정 (A = (W - h_w)(C - h_c))
      omega:            E[V V'] 추정
      fold_conditions:  fold별 모멘트 행렬 조건수
      nuisances:        사용한 NuisanceFit
      add_intercept:    설계 행렬에 절편 열 포함 여부
    """
    beta: np.ndarray
    beta_per_fold: np.ndarray
    vcov: np.ndarray
    se: np.ndarray
    J: np.ndarray
    omega: np.ndarray
    fold_conditions: Tuple[float, ...]
    nuisances: NuisanceFit
    add_intercept: bool = False

    def wald_interval(self, z: float) -> Tuple[np.ndarray, np.ndarray]:
        return self.beta - z * self.se, self.beta + z * self.se


@dataclass(frozen=True)
class SupportPoint:
    """
    유한 지지집합의 공변량 값 하나와 그 조건부 분포 요약

    속성:
      x:          공변량 (Fraction)
      weight:     P(X = x)
      propensity: e(x) = P(W = 1 | X = x)
      y0, y1:     E[Y(0) | x], E[Y(1) | x]
      c0, c1:     E[C(0) | x], E[C(1) | x]
    """
    x: Tuple[Fraction, ...]
    weight: Fraction
    propensity: Fraction
    y0: Fraction
    y1: Fraction
    c0: Fraction
    c1: Fraction

    def arms(self) -> Tuple[Tuple[int, Fraction, Fraction, Fraction], ...]:
        """(w, P(W=w|x), E[Y|x,w], E[C|x,w])"""
        return (
            (1, self.propensity, self.y1, self.c1),
            (0, 1 - self.propensity, self.y0, self.c0),
        )
