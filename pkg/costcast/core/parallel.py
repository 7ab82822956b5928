import hashlib
import logging
import os
from typing import Callable, Iterable, List, Optional, TypeVar, Union

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from costcast.core.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")


def resolve_threads(threads: Optional[int] = None) -> int:
    """
    워커 수 결정
    1) 명시적 인자
    2) COSTCAST_THREADS 설정값
    3) 논리 코어 수
    """
    if threads is not None:
        return max(1, int(threads))
    configured = get_settings().THREADS
    if configured is not None:
        return configured
    return os.cpu_count() or 1


def task_rng(seed: int, index: int) -> np.random.Generator:
    """
    (seed, index) 쌍에서 독립 RNG 생성
    - 트리/복제/fold 단위 난수가 워커 수와 무관하게 고정됨
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def run_parallel(
    fn: Callable[..., T],
    items: Iterable,
    threads: Optional[int] = None,
) -> List[T]:
    """
    joblib 스레드 백엔드로 fn(item)을 병렬 실행하고 입력 순서대로 결과 반환
    """
    n_jobs = resolve_threads(threads)
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("run_parallel: %d tasks on %d workers", len(items), n_jobs)
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(fn)(item) for item in items)


def progress(items: Iterable[T], desc: str, total: Optional[int] = None) -> Iterable[T]:
    """
    tqdm 진행 표시 (루트 로거 레벨이 INFO보다 높으면 비활성)
    """
    disabled = logging.getLogger().getEffectiveLevel() > logging.INFO
    return tqdm(items, desc=desc, total=total, disable=disabled, leave=False)


def derive_seed(seed: int, *keys: Union[int, str]) -> int:
    """
    (seed, key...) 에서 파생 시드 생성
    - 문자열 키는 blake2b 해시로 정수화 (메서드 이름 등, 실행 순서와 무관)
    """
    entropy = [int(seed)]
    for key in keys:
        if isinstance(key, str):
            entropy.append(int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little"))
        else:
            entropy.append(int(key))
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)[0])
