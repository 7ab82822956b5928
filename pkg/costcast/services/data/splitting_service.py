import hashlib
import logging
import math
from typing import Optional, Tuple

import numpy as np

from costcast.models.dataset import Dataset, SplitPlan, TestDataset, TrainDataset
from costcast.services.data.exceptions import InvalidFraction, TooFewSamples

logger = logging.getLogger(__name__)


def _row_keys(d: Dataset, seed: int) -> np.ndarray:
    """
    행 내용 + 시드 해시로 정렬 키 생성
    - 키가 행 순서가 아닌 행 내용에만 의존하므로 행을 섞어도 배정이 같이 섞임
    """
    payload = np.column_stack([d.x, d.w, d.y, d.c]).astype("<f8")
    salt = int(seed).to_bytes(8, "little", signed=True)
    keys = np.empty(d.n, dtype=np.uint64)
    for i in range(d.n):
        digest = hashlib.blake2b(payload[i].tobytes(), digest_size=8, key=salt).digest()
        keys[i] = int.from_bytes(digest, "little")
    return keys


def _cluster_keys(clusters: np.ndarray, seed: int) -> np.ndarray:
    """클러스터 ID + 시드 해시 키"""
    salt = int(seed).to_bytes(8, "little", signed=True)
    return np.array(
        [
            int.from_bytes(
                hashlib.blake2b(int(cid).to_bytes(8, "little", signed=True), digest_size=8, key=salt).digest(),
                "little",
            )
            for cid in clusters
        ],
        dtype=np.uint64,
    )


def _stratified_order(d: Dataset, keys: np.ndarray, stratify_treatment: bool) -> np.ndarray:
    """
    (처치군 → 대조군) 블록 안에서 키 순으로 정렬한 행 순서
    - 층화하지 않으면 키 순서만 사용
    """
    if stratify_treatment:
        # lexsort: 마지막 키가 1순위
        return np.lexsort((np.arange(d.n), keys, 1 - d.w.astype(np.int64)))
    return np.lexsort((np.arange(d.n), keys))


def make_folds(
    d: Dataset,
    k: int,
    seed: int,
    stratify_treatment: bool = False,
) -> SplitPlan:
    """
    K-fold 배정 생성
    1) K 범위 검사 (2 <= K <= n)
    2) 클러스터가 없으면 키 순서의 j번째 행을 fold j mod K 에 배정
    3) 클러스터가 있으면 클러스터 단위로, 큰 클러스터부터 현재 가장 작은 fold에 배정
       (stratify_treatment 면 처치 단위가 있는 클러스터를 먼저, 처치 수가 가장 적은 fold에 배정)
    """
    n = d.n
    if k < 2 or k > n:
        raise TooFewSamples(f"need 2 <= K <= n, got K={k}, n={n}")

    if d.cluster_id is None:
        keys = _row_keys(d, seed)
        order = _stratified_order(d, keys, stratify_treatment)
        assignment = np.empty(n, dtype=np.int64)
        assignment[order] = np.arange(n) % k
        stratify_on: Optional[Tuple[str, ...]] = ("treatment",) if stratify_treatment else None
        return SplitPlan(fold_assignment=assignment, seed=seed, stratify_on=stratify_on)

    clusters, inverse, sizes = np.unique(d.cluster_id, return_inverse=True, return_counts=True)
    if len(clusters) < k:
        raise TooFewSamples(f"need at least K={k} clusters, got {len(clusters)}")

    ckeys = _cluster_keys(clusters, seed)
    treated = np.bincount(inverse, weights=d.w, minlength=len(clusters)).astype(np.int64)
    fold_sizes = np.zeros(k, dtype=np.int64)
    fold_treated = np.zeros(k, dtype=np.int64)
    cluster_fold = np.empty(len(clusters), dtype=np.int64)
    if stratify_treatment:
        # 처치 수 내림차순 → 크기 내림차순 → 해시 키
        cluster_order = np.lexsort((ckeys, -sizes, -treated))
    else:
        # 크기 내림차순, 동률은 해시 키 순
        cluster_order = np.lexsort((ckeys, -sizes))
    for ci in cluster_order:
        if stratify_treatment and treated[ci] > 0:
            # 처치 수가 가장 적은 fold, 동률이면 크기가 작은 fold
            target = int(np.lexsort((np.arange(k), fold_sizes, fold_treated))[0])
        else:
            target = int(np.argmin(fold_sizes))
        cluster_fold[ci] = target
        fold_sizes[target] += sizes[ci]
        fold_treated[target] += treated[ci]

    assignment = cluster_fold[inverse]
    logger.debug(
        "make_folds: %d clusters into %d folds, sizes=%s treated=%s",
        len(clusters), k, fold_sizes.tolist(), fold_treated.tolist(),
    )
    stratify_on = ("cluster", "treatment") if stratify_treatment else ("cluster",)
    return SplitPlan(fold_assignment=assignment, seed=seed, stratify_on=stratify_on)


def train_test_split(
    d: Dataset,
    test_fraction: float,
    seed: int,
) -> Tuple[TrainDataset, TestDataset]:
    """
    처치 층화 + 클러스터 일관 학습/평가 분할
    1) 평가 목표 크기 t = ceil(n * fraction)
    2) (처치군, 대조군) 블록 순서에서 균등 간격으로 t개 선택 → 처치 수가 양쪽에서 최대 1 차이
    3) 클러스터가 있으면 클러스터를 통째로, 목표 크기에 더 가까워지는 쪽으로 이동
    """
    if not 0 < test_fraction < 1:
        raise InvalidFraction(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = d.n
    t = math.ceil(n * test_fraction)
    if t >= n or n < 2:
        raise TooFewSamples(f"cannot split n={n} rows with test_fraction={test_fraction}")

    keys = _row_keys(d, seed)
    if d.cluster_id is None:
        order = _stratified_order(d, keys, stratify_treatment=True)
        j = np.arange(n, dtype=np.int64)
        picked = ((j + 1) * t) // n - (j * t) // n == 1
        is_test = np.zeros(n, dtype=bool)
        is_test[order[picked]] = True
    else:
        clusters, inverse, sizes = np.unique(d.cluster_id, return_inverse=True, return_counts=True)
        ckeys = _cluster_keys(clusters, seed)
        cluster_test = np.zeros(len(clusters), dtype=bool)
        current = 0
        for ci in np.argsort(ckeys, kind="stable"):
            size = int(sizes[ci])
            if abs(current + size - t) < abs(current - t):
                cluster_test[ci] = True
                current += size
        is_test = cluster_test[inverse]

    n_test = int(is_test.sum())
    if n_test == 0 or n_test == n:
        raise TooFewSamples("split left one side empty; use more rows or clusters")

    train_idx = np.flatnonzero(~is_test)
    test_idx = np.flatnonzero(is_test)
    logger.info("train_test_split: train=%d test=%d (target test=%d)", len(train_idx), len(test_idx), t)
    train = d.subset(train_idx, require_overlap=False).as_role(TrainDataset)
    test = d.subset(test_idx, require_overlap=False).as_role(TestDataset)
    return train, test
