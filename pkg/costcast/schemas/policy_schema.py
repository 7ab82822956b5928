"""
예산 제약 정책 스키마 정의 모듈
- 우선순위 점수가 매겨진 단위와 임계값 정책 결과를 위한 Pydantic 모델
"""

from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class ScoredUnit(BaseModel):
    """
    우선순위 점수가 매겨진 단위

    속성:
      priority:      rho(x) 추정값
      expected_cost: delta_C(x) = E[C(1)-C(0)|X=x] 추정값 (양수여야 함, solve_policy에서 검증)
      unit_id:       단위 식별자
    """
    model_config = ConfigDict(frozen=True)

    priority: float
    expected_cost: float
    unit_id: int


class ThresholdPolicy(BaseModel):
    """
    최적 임계값 정책 (rho_B, a_B)

    속성:
      rho_b:          임계값 rho_B
      a_b:            임계값과 같은 단위에 적용하는 처치 확률 a_B
      per_unit_prob:  입력 순서대로의 단위별 처치 확률
      expected_value: mean(prob * priority * expected_cost)
      expected_spend: mean(prob * expected_cost)
    """
    model_config = ConfigDict(frozen=True)

    rho_b: float = Field(..., description="임계값 rho_B")
    a_b: float = Field(..., ge=0.0, le=1.0, description="혼합 확률 a_B")
    per_unit_prob: List[float] = Field(..., description="단위별 처치 확률")
    unit_ids: List[int] = Field(default_factory=list, description="per_unit_prob와 같은 순서의 단위 ID")
    expected_value: float = Field(0.0, description="정책의 기대 가치 (1인당)")
    expected_spend: float = Field(0.0, description="정책의 기대 비용 (1인당)")

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.per_unit_prob, dtype=np.float64)
