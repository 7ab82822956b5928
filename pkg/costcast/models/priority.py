"""
우선순위 점수 모델 엔티티
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from costcast.models.forest import ForestModel

# direct_ratio에서 gamma가 사실상 0인 행에 부여하는 우선순위 크기
LARGE = 1e12


class PriorityKind(str, Enum):
    """점수 모델 종류"""
    DML_LINEAR = "dml_linear"
    IV_FOREST = "iv_forest"
    DIRECT_RATIO = "direct_ratio"
    IGNORE_COST = "ignore_cost"


@dataclass(eq=False)
class PriorityModel:
    """
    학습된 우선순위 모델

    속성:
      kind:          모델 종류
      p:             공변량 차원
      forests:       구성 포레스트 ("iv", "tau", "gamma")
      beta:          dml_linear 계수 (add_intercept면 첫 원소가 절편)
      add_intercept: 선형 점수에 절편 포함 여부
      gamma_floor:   direct_ratio 가드 임계값 1e-6 * mean(gamma_hat(학습 X))
      diagnostics:   JSON 직렬화 가능한 진단 정보
    """
    kind: PriorityKind
    p: int
    forests: Dict[str, ForestModel] = field(default_factory=dict)
    beta: Optional[np.ndarray] = None
    add_intercept: bool = False
    gamma_floor: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
