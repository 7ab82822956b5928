"""
실험 데이터 모델
- Sample: 실험 단위 하나
- Dataset: 열 단위(column-major) 배열 모음, 생성 후 불변
- SplitPlan: fold 배정 결과
- TruthTaggedDataset: 시뮬레이션 정답(tau, gamma, rho)이 붙은 Dataset
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from costcast.repositories.exceptions import (
    DimensionMismatch,
    NegativeCost,
    NoOverlap,
    NonBinaryTreatment,
    NonFiniteValue,
    NonzeroControlCost,
    PropensityOutOfRange,
    UnknownPropensity,
)


def _frozen(arr: np.ndarray) -> np.ndarray:
    """배열 복사본을 읽기 전용으로 반환"""
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


def _bad_rows(mask: np.ndarray) -> list[int]:
    return [int(i) for i in np.flatnonzero(mask)]


@dataclass(frozen=True)
class Sample:
    """
    실험 단위 하나

    속성:
      x:          공변량 벡터 (길이 p)
      w:          처치 여부 {0,1}
      y:          결과
      c:          실현 비용 (>= 0)
      propensity: 처치 확률 (선택)
      cluster_id: 클러스터 ID (선택)
    """
    x: Tuple[float, ...]
    w: int
    y: float
    c: float
    propensity: Optional[float] = None
    cluster_id: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    불변 실험 데이터셋
    - 생성 시점에 모든 불변식을 검증하고 배열을 읽기 전용으로 고정
    - 여러 스레드에서 동시에 읽어도 안전
    - 처치 확률(행별 또는 기본값)이 없으면 거부, require_propensity=False면 관측 자료로 보고 추정에 맡김
    """
    x: np.ndarray
    w: np.ndarray
    y: np.ndarray
    c: np.ndarray
    propensity: Optional[np.ndarray] = None
    cluster_id: Optional[np.ndarray] = None
    zero_control_cost: bool = False
    default_propensity: Optional[float] = None
    row_labels: Optional[np.ndarray] = field(default=None, compare=False)
    require_overlap: bool = field(default=True, compare=False, repr=False)
    require_propensity: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[1] < 1:
            raise DimensionMismatch("covariates must be an (n, p) matrix with p >= 1")
        n = x.shape[0]

        w_raw = np.asarray(self.w, dtype=np.float64).reshape(-1)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        for name, arr in (("w", w_raw), ("y", y), ("c", c)):
            if arr.shape[0] != n:
                raise DimensionMismatch(
                    f"column '{name}' has {arr.shape[0]} rows, expected {n}"
                )

        # 1) 유한성 검사 (행 단위 보고)
        bad = ~np.isfinite(x).all(axis=1) | ~np.isfinite(y) | ~np.isfinite(c)
        if bad.any():
            raise NonFiniteValue("NaN/Inf in covariates, outcome or cost", _bad_rows(bad))

        # 2) 처치 이진성
        bad = ~np.isin(w_raw, (0.0, 1.0))
        if bad.any():
            raise NonBinaryTreatment("treatment must be 0 or 1", _bad_rows(bad))
        w = w_raw.astype(np.int8)

        # 3) 비용 부호 및 대조군 비용
        bad = c < 0
        if bad.any():
            raise NegativeCost("cost must be nonnegative", _bad_rows(bad))
        if self.zero_control_cost:
            bad = (w == 0) & (c != 0)
            if bad.any():
                raise NonzeroControlCost(
                    "control units must have zero cost when zero_control_cost is set",
                    _bad_rows(bad),
                )

        # 4) 처치 확률
        propensity = None
        if self.propensity is not None:
            propensity = np.asarray(self.propensity, dtype=np.float64).reshape(-1)
            if propensity.shape[0] != n:
                raise DimensionMismatch("propensity column length mismatch")
            bad = ~np.isfinite(propensity) | (propensity <= 0) | (propensity >= 1)
            if bad.any():
                raise PropensityOutOfRange("propensity must lie in (0, 1)", _bad_rows(bad))
        if self.default_propensity is not None and not 0 < self.default_propensity < 1:
            raise PropensityOutOfRange(
                f"default propensity {self.default_propensity} must lie in (0, 1)"
            )
        if self.require_propensity and propensity is None and self.default_propensity is None:
            raise UnknownPropensity(
                "dataset needs a propensity column or a default propensity "
                "(set require_propensity=False to estimate it from data)"
            )

        # 5) overlap
        n_treated = int(w.sum())
        if self.require_overlap and (n_treated == 0 or n_treated == n):
            raise NoOverlap("dataset needs at least one treated and one control unit")

        cluster_id = None
        if self.cluster_id is not None:
            cluster_id = np.asarray(self.cluster_id).reshape(-1).astype(np.int64)
            if cluster_id.shape[0] != n:
                raise DimensionMismatch("cluster column length mismatch")

        labels = self.row_labels
        if labels is None:
            labels = np.arange(n, dtype=np.int64)

        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "w", _frozen(w))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "c", _frozen(c))
        object.__setattr__(self, "propensity", None if propensity is None else _frozen(propensity))
        object.__setattr__(self, "cluster_id", None if cluster_id is None else _frozen(cluster_id))
        object.__setattr__(self, "row_labels", _frozen(np.asarray(labels, dtype=np.int64)))

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def n_treated(self) -> int:
        return int(self.w.sum())

    def sample(self, i: int) -> Sample:
        """i번째 행을 Sample로 변환"""
        return Sample(
            x=tuple(float(v) for v in self.x[i]),
            w=int(self.w[i]),
            y=float(self.y[i]),
            c=float(self.c[i]),
            propensity=None if self.propensity is None else float(self.propensity[i]),
            cluster_id=None if self.cluster_id is None else int(self.cluster_id[i]),
        )

    def resolved_propensity(self) -> Optional[np.ndarray]:
        """
        행별 처치 확률 벡터
        - 행별 값이 있으면 그대로, 없으면 default_propensity로 채움
        - 둘 다 없으면 None
        """
        if self.propensity is not None:
            return self.propensity
        if self.default_propensity is not None:
            return np.full(self.n, float(self.default_propensity))
        return None

    @property
    def known_constant_propensity(self) -> Optional[float]:
        """모든 행의 처치 확률이 같은 상수일 때 그 값"""
        resolved = self.resolved_propensity()
        if resolved is None:
            return None
        first = float(resolved[0])
        return first if bool(np.all(resolved == first)) else None

    def subset(self, idx: np.ndarray, require_overlap: bool = True) -> "Dataset":
        """
        행 인덱스 부분집합으로 같은 타입의 새 Dataset 생성 (검증 포함)
        - require_overlap=False: 한쪽 처치군만 남는 부분집합 허용 (처치군 전용 비용 모델 등)
        """
        idx = np.asarray(idx, dtype=np.int64)
        return type(self)(
            x=self.x[idx],
            w=self.w[idx],
            y=self.y[idx],
            c=self.c[idx],
            propensity=None if self.propensity is None else self.propensity[idx],
            cluster_id=None if self.cluster_id is None else self.cluster_id[idx],
            zero_control_cost=self.zero_control_cost,
            default_propensity=self.default_propensity,
            row_labels=self.row_labels[idx],
            require_overlap=require_overlap,
            require_propensity=self.require_propensity,
        )

    def as_role(self, role: type) -> "Dataset":
        """같은 배열을 TrainDataset / TestDataset 등 다른 역할 타입으로 감싸기"""
        return role(
            x=self.x,
            w=self.w,
            y=self.y,
            c=self.c,
            propensity=self.propensity,
            cluster_id=self.cluster_id,
            zero_control_cost=self.zero_control_cost,
            default_propensity=self.default_propensity,
            row_labels=self.row_labels,
            require_overlap=self.require_overlap,
            require_propensity=self.require_propensity,
        )


@dataclass(frozen=True, eq=False)
class TrainDataset(Dataset):
    """학습 분할 (평가 연산에 넘기면 거부됨)"""


@dataclass(frozen=True, eq=False)
class TestDataset(Dataset):
    """
    평가 분할
    - 평가 연산은 TrainDataset을 거부하므로 학습 행이 평가에 섞이지 않음
    """
    __test__ = False


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """
    fold 배정 결과

    속성:
      fold_assignment: 행별 fold 번호 [0, K)
      seed:            배정에 사용한 시드
      stratify_on:     층화 기준 ("treatment", "cluster" 조합) 또는 None
    """
    fold_assignment: np.ndarray
    seed: int
    stratify_on: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fold_assignment", _frozen(np.asarray(self.fold_assignment, dtype=np.int64))
        )

    @property
    def k(self) -> int:
        return int(self.fold_assignment.max()) + 1

    def fold_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignment == k)

    def complement_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignment != k)


@dataclass(frozen=True, eq=False)
class TruthTaggedDataset:
    """
    시뮬레이션 데이터 + 행별 정답
    - tau: 조건부 처치 효과 E[Y(1)-Y(0)|X]
    - gamma: 조건부 증분 비용 E[C(1)-C(0)|X] (> 0)
    - rho: tau / gamma
    """
    data: Dataset
    tau: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray

    def __post_init__(self) -> None:
        for name in ("tau", "gamma", "rho"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=np.float64)))
        if not np.all(self.gamma > 0):
            raise NegativeCost("truth gamma(x) must be positive rowwise")
