"""
평가 설정/결과 스키마
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class EvalMode(str, Enum):
    """보상/비용 변환 방식"""
    IPW = "ipw"
    AIPW = "aipw"


class BootstrapConfig(BaseModel):
    """
    half-sample bootstrap 설정
    - reps를 비워 두면 COSTCAST_BOOTSTRAP_REPS
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    reps: Optional[int] = Field(None, description="반복 횟수 (>= 100)")
    seed: int = Field(0, description="반복별 RNG 시드")
    cluster: bool = Field(False, description="클러스터 단위로 절반 추출")
    symmetric: bool = Field(False, description="|편차| 분위수로 대칭 구간")
    enabled: bool = Field(True, description="False면 Wald 구간만 보고")
    threads: Optional[int] = Field(None, ge=1, description="워커 수")


class BootstrapResult(BaseModel):
    """half-sample bootstrap 결과"""
    se: float = Field(..., description="전체 표본 추정량의 표준오차")
    ci: Tuple[float, float] = Field(..., description="신뢰구간")
    estimate: float = Field(..., description="전체 표본 Delta(b)")
    deviations: List[float] = Field(default_factory=list, description="스케일 조정된 반복별 편차")
    q_estimate: Optional[float] = Field(None, description="전체 표본 Q(b)")
    q_se: Optional[float] = Field(None, description="Q(b) 표준오차")
    q_ci: Optional[Tuple[float, float]] = Field(None, description="Q(b) 신뢰구간")


class PairedBootstrapResult(BaseModel):
    """
    같은 평가 데이터에서 두 점수 규칙의 비교
    - difference = Delta_a(b) - Delta_b(b) (기준선이 같으므로 Q_a(b) - Q_b(b) 와 같음)
    - p_value: 차이가 0 이라는 귀무가설의 양측 bootstrap p값
    """
    b: float
    estimate_a: float
    estimate_b: float
    difference: float
    se: float
    ci: Tuple[float, float]
    p_value: float
    alpha: float
    reps: int

    def summary(self) -> dict:
        """CLI 출력용 요약"""
        return {
            "delta_a": self.estimate_a,
            "delta_b": self.estimate_b,
            "difference": self.difference,
            "se": self.se,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "p_value": self.p_value,
        }


class LiftEstimate(BaseModel):
    """
    예산 b 에서의 lift 추정

    - delta_hat = q_hat - b * R(0) / B(0)
    - se: 영향함수 기반 sqrt(Var(psi_d) / n)
    - ci: bootstrap 구간 (bootstrap 비활성 시 wald_ci 와 같음)
    - q_ci: Q(b) 구간 (bootstrap 비활성 시 psi_q 기반 Wald 구간)
    """
    model_config = ConfigDict(json_schema_extra={
        "example": {
            "b": 0.5,
            "q_hat": 1.04,
            "delta_hat": 0.31,
            "s_hat": 0.82,
            "se": 0.04,
            "ci": [0.23, 0.39],
            "wald_ci": [0.23, 0.39],
            "alpha": 0.05,
        }
    })

    b: float
    q_hat: float
    delta_hat: float
    s_hat: float
    se: float
    ci: Tuple[float, float]
    wald_ci: Tuple[float, float]
    alpha: float
    bootstrap_se: Optional[float] = None
    q_se: float = Field(0.0, description="psi_q 기반 Q(b) 표준오차")
    q_ci: Tuple[float, float] = Field((0.0, 0.0), description="Q(b) 신뢰구간")
    slope: float = Field(0.0, description="R'(s)/B'(s) 유한 차분 추정")
    psi_q: List[float] = Field(default_factory=list)
    psi_d: List[float] = Field(default_factory=list)

    def summary(self) -> dict:
        """CLI 출력용 요약"""
        return {
            "q_hat": self.q_hat,
            "delta_hat": self.delta_hat,
            "se": self.se,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "q_ci_lo": self.q_ci[0],
            "q_ci_hi": self.q_ci[1],
        }
