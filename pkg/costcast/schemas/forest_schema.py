"""
포레스트 설정 스키마 정의 모듈
- 회귀 / 인과 / 도구변수 모드 공통 하이퍼파라미터
"""

import math
from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class ForestMode(str, Enum):
    """포레스트 모드"""
    REGRESSION = "regression"
    CAUSAL = "causal"
    INSTRUMENTAL = "instrumental"


class ForestConfig(BaseModel):
    """
    honest generalized random forest 설정

    - min_node_size, mtry를 비워 두면 모드/차원에 맞는 기본값 사용
    - centering_trees를 비워 두면 max(50, num_trees // 4)
    """
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "num_trees": 2000,
                "subsample_fraction": 0.5,
                "honesty_fraction": 0.5,
                "min_node_size": 10,
                "mtry": None,
                "max_depth": None,
                "seed": 42,
                "mode": "instrumental",
            }
        },
    )

    num_trees: int = Field(2000, ge=1, description="트리 수")
    subsample_fraction: float = Field(0.5, gt=0.0, le=1.0, description="트리별 비복원 부표본 비율")
    honesty_fraction: float = Field(0.5, gt=0.0, lt=1.0, description="부표본 중 분할용 절반의 비율")
    honesty: bool = Field(True, description="False면 분할/추정에 같은 부표본 사용")
    min_node_size: Optional[int] = Field(None, ge=1, description="노드 최소 크기")
    mtry: Optional[int] = Field(None, ge=1, description="노드마다 시도하는 변수 수")
    max_depth: Optional[int] = Field(None, ge=0, description="최대 깊이 (0이면 루트 리프)")
    seed: int = Field(42, description="난수 시드")
    mode: ForestMode = Field(ForestMode.INSTRUMENTAL, description="포레스트 모드")
    local_centering: bool = Field(True, description="OOB 회귀 포레스트로 Y, C, W 잔차화")
    centering_trees: Optional[int] = Field(None, ge=1, description="centering 포레스트 트리 수")
    threads: Optional[int] = Field(None, ge=1, description="워커 수 (None이면 설정값)")

    def resolved_min_node_size(self) -> int:
        if self.min_node_size is not None:
            return self.min_node_size
        return 5 if self.mode == ForestMode.REGRESSION else 10

    def resolved_mtry(self, p: int) -> int:
        if self.mtry is not None:
            return self.mtry
        return min(p, math.ceil(math.sqrt(p)) + 3)

    def resolved_centering_trees(self) -> int:
        if self.centering_trees is not None:
            return self.centering_trees
        return max(50, self.num_trees // 4)

    def for_mode(self, mode: ForestMode, **overrides) -> "ForestConfig":
        """같은 설정을 다른 모드로 복제 (nuisance / centering 포레스트용)"""
        return self.model_copy(update={"mode": mode, **overrides})


class ForestRoles(BaseModel):
    """
    Dataset 열을 포레스트 역할에 매핑 (열 이름은 "y", "c", "w" 중 하나)

    - regression: outcome만 사용
    - causal: treatment = instrument = "w"
    - instrumental: instrument = "w", treatment = "c"
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    outcome: Literal["y", "c", "w"] = Field("y", description="반응 열")
    treatment: Optional[Literal["y", "c", "w"]] = Field(None, description="분모 공분산의 처치 열")
    instrument: Optional[Literal["y", "c", "w"]] = Field(None, description="도구변수 열")

    @classmethod
    def default_for(cls, mode: ForestMode, outcome: str = "y") -> "ForestRoles":
        if mode == ForestMode.REGRESSION:
            return cls(outcome=outcome)
        if mode == ForestMode.CAUSAL:
            return cls(outcome=outcome, treatment="w", instrument="w")
        return cls(outcome=outcome, treatment="c", instrument="w")
