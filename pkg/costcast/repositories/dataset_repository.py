import logging
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from costcast.models.dataset import Dataset
from costcast.repositories.exceptions import (
    InputFileNotFound,
    InvalidClusterId,
    MissingColumn,
    MissingValue,
    NonBinaryTreatment,
    NonFiniteValue,
)
from costcast.schemas.data_schema import ColumnSchema

logger = logging.getLogger(__name__)

# %.17g 는 유한 double을 비트 단위로 복원 가능한 최소 표현
FLOAT_FORMAT = "%.17g"


class DatasetRepository:
    """
    CSV 기반 Dataset 입출력
    - 헤더 필수, UTF-8, 소수점 '.'
    - 결측값은 대체하지 않고 행 번호와 함께 거부
    """

    def __init__(self, schema: Optional[ColumnSchema] = None):
        self.schema = schema or ColumnSchema()

    def load(self, path: Union[str, Path]) -> Dataset:
        """
        CSV 파일을 읽어 검증된 Dataset 반환
        1) 헤더 확인 및 선언 컬럼 존재 여부 검사
        2) 선언 필드 결측 행 거부
        3) 처치 컬럼 이진성 검사
        4) Dataset 생성 (나머지 불변식 검증은 Dataset이 담당)
        """
        path = Path(path)
        if not path.exists():
            raise InputFileNotFound(f"input file not found: {path}")

        frame = pd.read_csv(
            path,
            encoding="utf-8",
            float_precision="round_trip",
        )
        header = [str(col) for col in frame.columns]
        schema = self.schema

        # 1) 컬럼 존재 여부
        covariates = schema.resolve_covariates(header)
        if not covariates:
            raise MissingColumn(
                f"no covariate columns found in {path} (prefix '{schema.covariate_prefix}')"
            )
        declared = covariates + [schema.treatment, schema.outcome, schema.cost]
        if schema.propensity:
            declared.append(schema.propensity)
        if schema.cluster:
            declared.append(schema.cluster)
        missing = [col for col in declared if col not in frame.columns]
        if missing:
            raise MissingColumn(f"missing declared columns in {path}: {missing}")

        # 2) 결측 행
        subset = frame[declared]
        na_rows = subset.isna().any(axis=1).to_numpy()
        if na_rows.any():
            raise MissingValue(f"missing values in declared columns of {path}", np.flatnonzero(na_rows))

        # 3) 처치 이진성 (숫자가 아닌 값 포함)
        w = pd.to_numeric(frame[schema.treatment], errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isin(w, (0.0, 1.0))
        if bad.any():
            raise NonBinaryTreatment(
                f"treatment column '{schema.treatment}' must contain only 0/1",
                np.flatnonzero(bad),
            )

        x = self._numeric(frame, covariates)
        y = self._numeric(frame, [schema.outcome])[:, 0]
        c = self._numeric(frame, [schema.cost])[:, 0]
        propensity = self._numeric(frame, [schema.propensity])[:, 0] if schema.propensity else None
        cluster = self._cluster_ids(frame, schema.cluster) if schema.cluster else None

        dataset = Dataset(
            x=x,
            w=w,
            y=y,
            c=c,
            propensity=propensity,
            cluster_id=cluster,
            zero_control_cost=schema.zero_control_cost,
            default_propensity=schema.default_propensity,
            require_propensity=schema.require_propensity,
        )
        logger.info("Loaded dataset %s: n=%d, p=%d, treated=%d", path, dataset.n, dataset.p, dataset.n_treated)
        return dataset

    def load_covariates(self, path: Union[str, Path]) -> np.ndarray:
        """
        공변량 열만 읽기 (점수 계산용, 처치/결과/비용 열은 없어도 됨)
        """
        path = Path(path)
        if not path.exists():
            raise InputFileNotFound(f"input file not found: {path}")
        frame = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
        covariates = self.schema.resolve_covariates([str(col) for col in frame.columns])
        missing = [col for col in covariates if col not in frame.columns]
        if not covariates or missing:
            raise MissingColumn(f"missing covariate columns in {path}: {missing or self.schema.covariate_prefix}")
        na_rows = frame[covariates].isna().any(axis=1).to_numpy()
        if na_rows.any():
            raise MissingValue(f"missing covariate values in {path}", np.flatnonzero(na_rows))
        x = self._numeric(frame, covariates)
        bad = ~np.isfinite(x).all(axis=1)
        if bad.any():
            raise NonFiniteValue(f"NaN/Inf in covariates of {path}", np.flatnonzero(bad))
        return x

    def write(
        self,
        dataset: Dataset,
        path: Union[str, Path],
        extra_columns: Optional[Dict[str, np.ndarray]] = None,
    ) -> Path:
        """
        Dataset을 load()와 같은 레이아웃으로 저장
        - extra_columns: 정답 컬럼 등 추가 열 (로드 시 무시됨)
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        schema = self.schema
        names = schema.covariates or [f"{schema.covariate_prefix}{j + 1}" for j in range(dataset.p)]
        if len(names) != dataset.p:
            raise MissingColumn(f"schema names {len(names)} covariates but dataset has p={dataset.p}")

        columns: Dict[str, np.ndarray] = {name: dataset.x[:, j] for j, name in enumerate(names)}
        columns[schema.treatment] = dataset.w.astype(np.int64)
        columns[schema.outcome] = dataset.y
        columns[schema.cost] = dataset.c
        if dataset.propensity is not None:
            columns[schema.propensity or "propensity"] = dataset.propensity
        if dataset.cluster_id is not None:
            columns[schema.cluster or "cluster"] = dataset.cluster_id
        for name, values in (extra_columns or {}).items():
            columns[name] = np.asarray(values)

        pd.DataFrame(columns).to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding="utf-8")
        logger.debug("Wrote dataset to %s", path)
        return path

    @staticmethod
    def _cluster_ids(frame: pd.DataFrame, name: str) -> np.ndarray:
        """
        클러스터 ID 정수 변환
        - 숫자가 아니거나 무한대, 소수부가 있는 값은 행 번호와 함께 InvalidClusterId
        """
        values = pd.to_numeric(frame[name], errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(values)
        bad[~bad] = values[~bad] != np.round(values[~bad])
        if bad.any():
            raise InvalidClusterId(f"cluster column '{name}' must contain integers", np.flatnonzero(bad))
        return values.astype(np.int64)

    @staticmethod
    def _numeric(frame: pd.DataFrame, names: list) -> np.ndarray:
        """
        숫자 변환 (변환 불가 값은 NaN → Dataset의 유한성 검사에서 행 번호와 함께 거부)
        """
        return np.column_stack(
            [pd.to_numeric(frame[name], errors="coerce").to_numpy(dtype=np.float64) for name in names]
        )


def load_dataset(path: Union[str, Path], schema: Optional[ColumnSchema] = None) -> Dataset:
    """CSV 파일 → Dataset"""
    return DatasetRepository(schema).load(path)


def write_dataset(
    dataset: Dataset,
    path: Union[str, Path],
    schema: Optional[ColumnSchema] = None,
    extra_columns: Optional[Dict[str, np.ndarray]] = None,
) -> Path:
    """Dataset → CSV 파일"""
    return DatasetRepository(schema).write(dataset, path, extra_columns)
