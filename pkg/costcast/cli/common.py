import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from costcast import __version__
from costcast.repositories.exceptions import InputFileNotFound, MissingColumn
from costcast.schemas.data_schema import ColumnSchema
from costcast.schemas.run_schema import RunConfig
from costcast.utils.exceptions import ConfigInvalid

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)

RUN_CONFIG_FILE = "run_config.json"
SCORE_COLUMN = "score"
UNIT_ID_COLUMN = "unit_id"


def load_model_config(model_cls: Type[M], path: Optional[Union[str, Path]], **overrides: Any) -> M:
    """
    JSON 설정 파일 → pydantic 모델
    - 파일이 없으면 기본값, overrides 는 None 이 아닌 값만 덮어씀
    - 검증 실패는 ConfigInvalid
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise InputFileNotFound(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"{path}: invalid JSON ({e})") from e
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model_cls.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigInvalid(f"invalid {model_cls.__name__}: {e}") from e


def load_schema(path: Optional[Union[str, Path]]) -> ColumnSchema:
    return load_model_config(ColumnSchema, path)


def _without_threads(value: Any) -> Any:
    """설정 dump 에서 워커 수 키 제거 (중첩 포함)"""
    if isinstance(value, dict):
        return {k: _without_threads(v) for k, v in value.items() if k != "threads"}
    return value


def write_run_config(
    out_dir: Union[str, Path],
    command: str,
    params: Dict[str, Any],
    seed: Optional[int] = None,
    config: Optional[BaseModel] = None,
) -> Path:
    """
    출력 디렉토리에 run_config.json 저장
    - 워커 수 키는 기록하지 않음
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = RunConfig(
        command=command,
        version=__version__,
        params={k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()},
        seed=seed,
        config=None if config is None else _without_threads(config.model_dump(mode="json")),
    )
    path = out_dir / RUN_CONFIG_FILE
    path.write_text(json.dumps(run.model_dump(mode="json"), indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_column(path: Union[str, Path], column: str = SCORE_COLUMN) -> np.ndarray:
    """점수 CSV 에서 한 열 읽기"""
    path = Path(path)
    if not path.is_file():
        raise InputFileNotFound(f"input file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    if column not in frame.columns:
        raise MissingColumn(f"{path}: missing column '{column}'")
    return frame[column].to_numpy(dtype=np.float64)


def output_dir_of(path: Union[str, Path]) -> Path:
    """파일 출력이면 상위 디렉토리, 디렉토리 출력이면 그대로"""
    path = Path(path)
    return path if path.suffix == "" else path.parent
