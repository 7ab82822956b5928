"""
데이터 입력 스키마 정의 모듈
- CSV 컬럼 이름 매핑과 데이터셋 플래그를 위한 Pydantic 모델
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ColumnSchema(BaseModel):
    """
    CSV 컬럼 이름 매핑

    - covariates를 비워 두면 covariate_prefix로 시작하는 모든 컬럼을 헤더 순서대로 사용
    """
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "covariates": ["x1", "x2"],
                "treatment": "w",
                "outcome": "y",
                "cost": "c",
                "propensity": None,
                "cluster": None,
                "zero_control_cost": True,
                "default_propensity": 0.5,
            }
        },
    )

    covariates: Optional[List[str]] = Field(
        None, description="공변량 컬럼 목록 (None이면 prefix 규칙 사용)"
    )
    covariate_prefix: str = Field(
        "x", description="covariates 미지정 시 공변량 컬럼 접두사"
    )
    treatment: str = Field("w", description="처치 컬럼")
    outcome: str = Field("y", description="결과 컬럼")
    cost: str = Field("c", description="비용 컬럼")
    propensity: Optional[str] = Field(None, description="행별 처치 확률 컬럼 (선택)")
    cluster: Optional[str] = Field(None, description="클러스터 ID 컬럼 (선택)")
    zero_control_cost: bool = Field(
        False, description="대조군 비용이 0으로 알려져 있는지 여부"
    )
    default_propensity: Optional[float] = Field(
        None, gt=0, lt=1, description="propensity 컬럼이 없을 때 모든 행에 적용할 처치 확률"
    )
    require_propensity: bool = Field(
        True, description="False면 처치 확률 없이 적재 (관측 자료, h_w 추정)"
    )

    @model_validator(mode="after")
    def _check_distinct(self) -> "ColumnSchema":
        """
        처치/결과/비용 컬럼 이름이 서로 겹치지 않는지 확인
        """
        roles = [self.treatment, self.outcome, self.cost]
        if len(set(roles)) != len(roles):
            raise ValueError("treatment, outcome and cost columns must be distinct")
        return self

    def resolve_covariates(self, header: List[str]) -> List[str]:
        """
        헤더에서 실제 공변량 컬럼 목록을 결정
        """
        if self.covariates:
            return list(self.covariates)
        reserved = {self.treatment, self.outcome, self.cost, self.propensity, self.cluster}
        return [
            name for name in header
            if name.startswith(self.covariate_prefix) and name not in reserved
        ]
