"""
시뮬레이션 설정/보고서 스키마
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from costcast.schemas.forest_schema import ForestConfig

METHOD_NAMES = ("iv_forest", "direct_ratio", "ignore_cost", "dml", "oracle")


class Design(str, Enum):
    """데이터 생성 설계"""
    UNPREDICTABLE_COST = "unpredictable_cost"
    PREDICTABLE_COST = "predictable_cost"
    LINEAR_RHO = "linear_rho"
    CUSTOM = "custom"


class BudgetScale(str, Enum):
    """예산 단위: 원래 비용 단위 또는 B(0) = R(0) = 1 로 정규화"""
    RAW = "raw"
    NORMALIZED = "normalized"


class SimConfig(BaseModel):
    """
    시뮬레이션 연구 설정
    - methods: iv_forest, direct_ratio, ignore_cost, dml, oracle (정답 rho 로 순위)
    - beta_star, mu: linear_rho 설계 전용
    """
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "design": "predictable_cost",
                "n_train": 1000,
                "n_test": 10000,
                "pi": 0.5,
                "replicates": 100,
                "seed": 42,
                "p": 12,
                "methods": ["iv_forest", "direct_ratio", "ignore_cost"],
                "budgets": [0.5],
                "budget_scale": "raw",
            }
        },
    )

    design: Design = Field(Design.PREDICTABLE_COST, description="데이터 생성 설계")
    n_train: int = Field(1000, ge=2, description="복제별 학습 표본 크기")
    n_test: int = Field(10000, ge=2, description="고정 평가 표본 크기")
    pi: float = Field(0.5, gt=0.0, lt=1.0, description="처치 확률")
    replicates: int = Field(1, ge=1, description="학습 데이터 복제 수")
    seed: int = Field(42, description="연구 시드")
    p: int = Field(12, ge=1, description="공변량 차원")
    methods: List[str] = Field(
        default_factory=lambda: ["iv_forest", "direct_ratio", "ignore_cost"],
        description="비교할 점수 방법",
    )
    budgets: List[float] = Field(default_factory=lambda: [0.5], description="가치를 보고할 예산")
    budget_scale: BudgetScale = Field(BudgetScale.RAW, description="예산 단위")
    grid_points: int = Field(101, ge=2, description="평균 곡선 spend 격자 점 수")
    dml_folds: int = Field(5, ge=2, description="dml 방법의 fold 수")
    forest: ForestConfig = Field(default_factory=ForestConfig, description="포레스트 설정")
    beta_star: Optional[List[float]] = Field(None, description="linear_rho 계수 (길이 p)")
    mu: Optional[float] = Field(None, gt=0.0, description="linear_rho 상수 비용 평균")

    @field_validator("methods")
    @classmethod
    def _validate_methods(cls, v: List[str]) -> List[str]:
        unknown = [m for m in v if m not in METHOD_NAMES]
        if unknown:
            raise ValueError(f"unknown method(s): {unknown}; choose from {list(METHOD_NAMES)}")
        if len(set(v)) != len(v):
            raise ValueError("methods must be distinct")
        return v


class MethodSummary(BaseModel):
    """방법별 평균 곡선 요약"""
    method: str
    values: Dict[str, float] = Field(..., description="예산(문자열) → 평균 곡선 보상")
    replicate_values: Dict[str, List[float]] = Field(
        default_factory=dict, description="예산 → 복제별 보상"
    )


class StudyReport(BaseModel):
    """시뮬레이션 연구 결과"""
    config: SimConfig
    test_hash: str = Field(..., description="평가 표본 sha256")
    replicates: int
    grid: List[float]
    methods: List[MethodSummary]
    averaged_curves: Dict[str, List[float]] = Field(..., description="방법 → 격자 위 평균 보상")

    def value(self, method: str, budget: float) -> float:
        for summary in self.methods:
            if summary.method == method:
                return summary.values[budget_key(budget)]
        raise KeyError(method)


def budget_key(budget: float) -> str:
    return repr(float(budget))
