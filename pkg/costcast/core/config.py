from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# 패키지 루트 디렉토리
BASE_DIR = Path(__file__).resolve().parent.parent


def _resolve_path(path_str: str) -> str:
    """
    입력된 경로가 절대 경로인지 확인하고 상대 경로일 경우 BASE_DIR 기준으로 변환
    """
    path = Path(path_str)
    return str(path if path.is_absolute() else BASE_DIR / path)


class Settings(BaseSettings):
    """
    costcast 실행 환경 설정 모델
    - config/settings.env 파일(있을 경우)과 COSTCAST_ 접두사 환경 변수를 자동 로드
    """
    model_config = SettingsConfigDict(
        env_file=str(BASE_DIR / "config" / "settings.env"),
        env_file_encoding="utf-8",
        env_prefix="COSTCAST_",
        extra="ignore",
    )

    # Parallelism
    THREADS: Optional[int] = Field(
        None,
        description="joblib 워커 수 (None이면 논리 코어 수)",
    )

    # Logging
    LOG_LEVEL: str = Field(
        "INFO",
        description="루트 로거 레벨",
    )

    # Randomness
    DEFAULT_SEED: int = Field(
        42,
        description="--seed 미지정 시 사용하는 기본 시드",
    )

    # Model files
    MODEL_MAGIC: bytes = Field(
        b"CCST",
        description="모델 파일 매직 바이트",
    )
    MODEL_FORMAT_VERSION: str = Field(
        "1.0.0",
        description="모델 파일 포맷 semantic version",
    )

    # Estimation defaults
    DEFAULT_FOLDS: int = Field(
        5,
        description="cross-fitting 기본 fold 수",
    )
    BOOTSTRAP_REPS: int = Field(
        1000,
        description="half-sample bootstrap 기본 반복 횟수",
    )

    # Simulation
    STUDY_DIR: str = Field(
        default=str(BASE_DIR.parent / "runs"),
        description="시뮬레이션 산출물 기본 디렉토리",
    )

    @field_validator("THREADS")
    @classmethod
    def _validate_threads(cls, v: Optional[int]) -> Optional[int]:
        """
        워커 수는 1 이상이어야 함 (None은 자동 감지)
        """
        if v is not None and v < 1:
            raise ValueError("THREADS must be >= 1")
        return v

    @field_validator("STUDY_DIR", mode="before")
    @classmethod
    def _validate_paths(cls, v: str) -> str:
        """
        경로 필드가 절대 경로가 아닐 경우 BASE_DIR 기준으로 변환
        """
        return _resolve_path(v)


@lru_cache()
def get_settings() -> Settings:
    """
    Settings 인스턴스를 싱글톤으로 반환
    최초 호출 시 객체를 생성하고, 이후 캐싱된 인스턴스를 반환
    """
    return Settings()
