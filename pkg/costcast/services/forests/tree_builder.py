"""
honest 트리 성장기

분할 기준 (인과/도구변수 모드):
  노드에서 theta_P = Cov(y, z) / Cov(t, z) 를 풀고
  pseudo-outcome rho_i = (z_i - z̄)((y_i - ȳ) - (t_i - t̄) theta_P) / Cov(t, z)
  위에서 CART 기준(좌우 합의 제곱 / 크기)을 최대화하는 분할을 선택
회귀 모드는 노드 평균을 뺀 응답을 pseudo-outcome으로 사용
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from costcast.models.forest import LEAF, Tree
from costcast.schemas.forest_schema import ForestConfig, ForestMode
from costcast.services.forests.exceptions import DegenerateNode, EmptyLeaf

logger = logging.getLogger(__name__)

# |Cov(t, z)| 가 이보다 작은 노드/자식은 분할 불가
COV_EPS = 1e-12
MAX_RESAMPLE = 100


@dataclass(frozen=True)
class TrainingArrays:
    """
    트리 성장에 쓰는 학습 배열 묶음

    속성:
      x:     공변량 (n, p)
      y:     (centered) outcome
      t:     (centered) treatment (회귀 모드에서는 사용하지 않음)
      z:     (centered) instrument (회귀 모드에서는 사용하지 않음)
      raw_z: centering 전 instrument (처치 변동 검사용, 0/1)
    """
    x: np.ndarray
    y: np.ndarray
    t: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    raw_z: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return int(self.x.shape[0])


@dataclass(frozen=True)
class TreeParams:
    """트리 하나를 키우는 데 필요한 설정값 (ForestConfig에서 해석된 값)"""
    mode: ForestMode
    subsample_fraction: float
    honesty_fraction: float
    honesty: bool
    min_node_size: int
    mtry: int
    max_depth: Optional[int]

    @classmethod
    def from_config(cls, cfg: ForestConfig, p: int) -> "TreeParams":
        return cls(
            mode=cfg.mode,
            subsample_fraction=cfg.subsample_fraction,
            honesty_fraction=cfg.honesty_fraction,
            honesty=cfg.honesty,
            min_node_size=cfg.resolved_min_node_size(),
            mtry=cfg.resolved_mtry(p),
            max_depth=cfg.max_depth,
        )


# ─── pseudo-outcome ───────────────────────────────────────────────────
def pseudo_outcomes(
    mode: ForestMode,
    y: np.ndarray,
    t: Optional[np.ndarray],
    z: Optional[np.ndarray],
) -> Optional[np.ndarray]:
    """
    노드 pseudo-outcome 계산
    - Cov(t, z)가 0에 가까우면 None (노드는 리프가 됨)
    """
    yc = y - y.mean()
    if mode == ForestMode.REGRESSION:
        return yc
    zc = z - z.mean()
    tc = t - t.mean()
    cov_tz = float(np.mean(tc * zc))
    if abs(cov_tz) < COV_EPS:
        return None
    theta = float(np.mean(yc * zc)) / cov_tz
    return zc * (yc - tc * theta) / cov_tz


def _has_variation(raw_z: np.ndarray) -> bool:
    total = raw_z.sum()
    return 0 < total < raw_z.shape[0]


# ─── split search ─────────────────────────────────────────────────────
def best_split(
    data: TrainingArrays,
    rows: np.ndarray,
    rho: np.ndarray,
    features: np.ndarray,
    params: TreeParams,
) -> Optional[Tuple[int, float]]:
    """
    주어진 후보 변수들에서 CART 기준이 가장 큰 분할 (feature, threshold) 반환
    - 자식 크기 >= min_node_size
    - 인과/도구변수 모드: 자식마다 처치군/대조군 존재, |Cov(t, z)| >= COV_EPS
    - 부모 대비 개선이 없으면 None
    """
    n = rows.shape[0]
    total = float(rho.sum())
    parent = total * total / n
    tol = 1e-12 * (abs(parent) + float(np.dot(rho, rho)))
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    instrumental = params.mode != ForestMode.REGRESSION

    if instrumental:
        t_rows = data.t[rows]
        z_rows = data.z[rows]
        raw_rows = data.raw_z[rows]
        total_t, total_z = float(t_rows.sum()), float(z_rows.sum())
        total_tz = float(np.dot(t_rows, z_rows))
        total_raw = float(raw_rows.sum())

    best: Optional[Tuple[int, float]] = None
    best_gain = parent + tol
    for feature in features:
        xs = data.x[rows, feature]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        gain_left = np.cumsum(rho[order])[:-1]

        valid = (xs_sorted[:-1] < xs_sorted[1:]) & (nl >= params.min_node_size) & (nr >= params.min_node_size)
        if instrumental:
            raw_left = np.cumsum(raw_rows[order])[:-1]
            valid &= (raw_left > 0) & (raw_left < nl)
            valid &= (total_raw - raw_left > 0) & (total_raw - raw_left < nr)
            ts, zs = t_rows[order], z_rows[order]
            st = np.cumsum(ts)[:-1]
            sz = np.cumsum(zs)[:-1]
            stz = np.cumsum(ts * zs)[:-1]
            cov_left = stz / nl - (st / nl) * (sz / nl)
            cov_right = (total_tz - stz) / nr - ((total_t - st) / nr) * ((total_z - sz) / nr)
            valid &= (np.abs(cov_left) >= COV_EPS) & (np.abs(cov_right) >= COV_EPS)

        if not valid.any():
            continue
        gain = gain_left ** 2 / nl + (total - gain_left) ** 2 / nr
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            lo, hi = xs_sorted[i], xs_sorted[i + 1]
            threshold = lo + (hi - lo) / 2.0
            if not lo <= threshold < hi:
                threshold = lo
            best_gain = float(gain[i])
            best = (int(feature), float(threshold))
    return best


# ─── subsampling ──────────────────────────────────────────────────────
def draw_halves(
    data: TrainingArrays,
    params: TreeParams,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    비복원 부표본을 뽑고 분할용 / 추정용 절반으로 나눔
    - 인과/도구변수 모드: 분할 절반에 처치군과 대조군이 모두 있을 때까지 재추출
    """
    n = data.n
    m = min(n, max(2, int(np.floor(params.subsample_fraction * n))))
    for _ in range(MAX_RESAMPLE):
        subsample = np.sort(rng.choice(n, size=m, replace=False))
        if params.honesty:
            shuffled = rng.permutation(subsample)
            n_split = min(m - 1, max(1, int(np.floor(params.honesty_fraction * m))))
            split_half = np.sort(shuffled[:n_split])
            est_half = np.sort(shuffled[n_split:])
        else:
            split_half = subsample
            est_half = subsample
        if params.mode == ForestMode.REGRESSION or _has_variation(data.raw_z[split_half]):
            return subsample, split_half, est_half
    raise DegenerateNode(
        f"could not draw a split half with both treated and control units after {MAX_RESAMPLE} attempts"
    )


# ─── tree growing ─────────────────────────────────────────────────────
def _descend(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    x: np.ndarray,
) -> np.ndarray:
    """행렬의 각 행이 도달하는 (리프) 노드 번호"""
    node = np.zeros(x.shape[0], dtype=np.int64)
    active = feature[node] != LEAF
    while active.any():
        rows = np.flatnonzero(active)
        cur = node[rows]
        go_left = x[rows, feature[cur]] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        active[rows] = feature[node[rows]] != LEAF
    return node


def grow_tree(data: TrainingArrays, params: TreeParams, rng: np.random.Generator) -> Tree:
    """
    honest 트리 하나 성장
    1) 부표본 추출 및 분할/추정 절반 분리
    2) 분할 절반으로 깊이 우선 성장 (pseudo-outcome CART)
    3) 추정 절반으로 리프 채우기
    4) 추정 구성원이 min_node_size 미만인 리프가 생기면 부모를 리프로 접기
    5) 도달 가능한 노드만 남기고 리프 통계 계산
    """
    subsample, split_half, est_half = draw_halves(data, params, rng)
    p = data.x.shape[1]

    feature: List[int] = [LEAF]
    threshold: List[float] = [0.0]
    left: List[int] = [LEAF]
    right: List[int] = [LEAF]
    stack: List[Tuple[int, np.ndarray, int]] = [(0, split_half, 0)]

    # 2) 성장
    while stack:
        node_id, rows, depth = stack.pop()
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if rows.shape[0] < 2 * params.min_node_size:
            continue
        if params.mode != ForestMode.REGRESSION and not _has_variation(data.raw_z[rows]):
            continue
        rho = pseudo_outcomes(
            params.mode,
            data.y[rows],
            None if data.t is None else data.t[rows],
            None if data.z is None else data.z[rows],
        )
        if rho is None:
            continue
        features = np.sort(rng.choice(p, size=params.mtry, replace=False))
        split = best_split(data, rows, rho, features, params)
        if split is None:
            continue

        f, thr = split
        go_left = data.x[rows, f] <= thr
        left_id, right_id = len(feature), len(feature) + 1
        for _ in range(2):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
        feature[node_id], threshold[node_id] = f, thr
        left[node_id], right[node_id] = left_id, right_id
        stack.append((right_id, rows[~go_left], depth + 1))
        stack.append((left_id, rows[go_left], depth + 1))

    feature_arr = np.asarray(feature, dtype=np.int64)
    threshold_arr = np.asarray(threshold, dtype=np.float64)
    left_arr = np.asarray(left, dtype=np.int64)
    right_arr = np.asarray(right, dtype=np.int64)

    # 3) 추정 절반 배치
    est_nodes = _descend(feature_arr, threshold_arr, left_arr, right_arr, data.x[est_half])
    counts = np.bincount(est_nodes, minlength=feature_arr.shape[0]).astype(np.int64)

    # 4) honest pruning (자식은 항상 부모보다 뒤 번호)
    for node_id in range(feature_arr.shape[0] - 1, -1, -1):
        if feature_arr[node_id] == LEAF:
            continue
        l_id, r_id = left_arr[node_id], right_arr[node_id]
        counts[node_id] = counts[l_id] + counts[r_id]
        too_small = any(
            feature_arr[c] == LEAF and counts[c] < params.min_node_size for c in (l_id, r_id)
        )
        if too_small:
            feature_arr[node_id] = LEAF

    # 5) 압축 및 리프 통계
    tree = _compact(feature_arr, threshold_arr, left_arr, right_arr)
    return _populate(tree, data, subsample, split_half, est_half, params)


def _compact(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """루트에서 도달 가능한 노드만 번호를 다시 매겨 반환 (너비 우선)"""
    order: List[int] = [0]
    remap = {0: 0}
    head = 0
    while head < len(order):
        old = order[head]
        head += 1
        if feature[old] != LEAF:
            for child in (left[old], right[old]):
                remap[int(child)] = len(order)
                order.append(int(child))
    old_ids = np.asarray(order, dtype=np.int64)
    new_feature = feature[old_ids].copy()
    new_threshold = np.where(new_feature == LEAF, 0.0, threshold[old_ids])
    new_left = np.full(len(order), LEAF, dtype=np.int64)
    new_right = np.full(len(order), LEAF, dtype=np.int64)
    for new_id, old in enumerate(order):
        if feature[old] != LEAF:
            new_left[new_id] = remap[int(left[old])]
            new_right[new_id] = remap[int(right[old])]
    return new_feature, new_threshold, new_left, new_right


def _populate(
    arrays: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    data: TrainingArrays,
    subsample: np.ndarray,
    split_half: np.ndarray,
    est_half: np.ndarray,
    params: TreeParams,
) -> Tree:
    """추정 절반 구성원으로 리프 구성원 목록과 통계 생성"""
    feature, threshold, left, right = arrays
    is_leaf = feature == LEAF
    leaf_of_node = np.full(feature.shape[0], LEAF, dtype=np.int64)
    leaf_of_node[is_leaf] = np.arange(int(is_leaf.sum()), dtype=np.int64)
    n_leaves = int(is_leaf.sum())

    est_leaf = leaf_of_node[_descend(feature, threshold, left, right, data.x[est_half])]
    order = np.lexsort((est_half, est_leaf))
    members = est_half[order]
    sizes = np.bincount(est_leaf, minlength=n_leaves)
    if np.any(sizes == 0):
        raise EmptyLeaf("honest pruning left a leaf without estimation-half members")
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    leaf_ids = est_leaf[order]
    y = data.y[members]
    if params.mode == ForestMode.REGRESSION:
        zeros = np.zeros_like(y)
        columns = (y, zeros, zeros, zeros, zeros)
    else:
        t = data.t[members]
        z = data.z[members]
        columns = (y, t, z, y * z, t * z)
    stats = np.column_stack(
        [np.bincount(leaf_ids, weights=col, minlength=n_leaves) / sizes for col in columns]
    )

    return Tree(
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        leaf_of_node=leaf_of_node,
        leaf_offsets=offsets,
        leaf_members=members.astype(np.int64),
        leaf_stats=stats,
        subsample=subsample.astype(np.int64),
        split_half=split_half.astype(np.int64),
        estimation_half=est_half.astype(np.int64),
    )
