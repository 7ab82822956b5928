"""
실행 기록 스키마 (모든 출력 디렉토리에 run_config.json 으로 저장)
"""

from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class RunConfig(BaseModel):
    """
    CLI 실행 provenance
    - 시각 정보와 워커 수는 넣지 않음 (같은 입력이면 같은 파일)
    """
    command: str = Field(..., description="하위 명령 이름")
    version: str = Field(..., description="패키지 버전")
    params: Dict[str, Any] = Field(default_factory=dict, description="명령 인자")
    seed: Optional[int] = Field(None, description="사용한 시드")
    config: Optional[Dict[str, Any]] = Field(None, description="방법/연구 설정 JSON")
