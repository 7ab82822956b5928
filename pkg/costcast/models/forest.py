"""
포레스트 모델 엔티티
- Tree: 평탄화된 노드 배열 + honest 리프 구성원 + 리프 통계
- ForestModel: 트리 목록, centering 정보, 모드/설정
- ForestWeights: 질의점의 적응형 가중치 alpha_i(x)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from costcast.schemas.forest_schema import ForestConfig, ForestMode

# 리프 통계 열 순서: 잔차 outcome, treatment, instrument 의 평균과 교차곱 평균
STAT_COLUMNS: Tuple[str, ...] = ("y", "t", "z", "yz", "tz")
LEAF = -1


@dataclass(frozen=True)
class TreeNode:
    """
    트리 노드 하나의 읽기 전용 뷰
    - 내부 노드: split_feature, split_value, children
    - 리프: members (추정 절반 인덱스만)
    """
    node_id: int
    split_feature: int
    split_value: float
    children: Optional[Tuple[int, int]]
    members: Optional[np.ndarray]

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass(eq=False)
class Tree:
    """
    평탄화된 honest 트리

    속성:
      feature / threshold / left / right: 노드별 분할 정보 (리프는 feature = -1)
      leaf_of_node:   노드 → 리프 번호 (내부 노드는 -1)
      leaf_offsets:   리프별 구성원 구간 (CSR 형식)
      leaf_members:   추정 절반 학습 인덱스
      leaf_stats:     (n_leaves, len(STAT_COLUMNS)) 리프 평균 통계
      subsample / split_half / estimation_half: 트리별 인덱스 집합
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_of_node: np.ndarray
    leaf_offsets: np.ndarray
    leaf_members: np.ndarray
    leaf_stats: np.ndarray
    subsample: np.ndarray
    split_half: np.ndarray
    estimation_half: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(self.leaf_offsets.shape[0] - 1)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """
        질의 행렬의 각 행이 떨어지는 리프 번호 반환 (벡터화된 하강)
        """
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = x[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active[rows] = self.feature[node[rows]] != LEAF
        return self.leaf_of_node[node]

    def members(self, leaf: int) -> np.ndarray:
        return self.leaf_members[self.leaf_offsets[leaf]:self.leaf_offsets[leaf + 1]]

    def leaf_sizes(self) -> np.ndarray:
        return np.diff(self.leaf_offsets)

    def node(self, node_id: int) -> TreeNode:
        """노드 하나를 TreeNode 뷰로 변환"""
        if self.feature[node_id] == LEAF:
            return TreeNode(
                node_id=node_id,
                split_feature=LEAF,
                split_value=float("nan"),
                children=None,
                members=self.members(int(self.leaf_of_node[node_id])),
            )
        return TreeNode(
            node_id=node_id,
            split_feature=int(self.feature[node_id]),
            split_value=float(self.threshold[node_id]),
            children=(int(self.left[node_id]), int(self.right[node_id])),
            members=None,
        )


@dataclass(eq=False)
class ForestModel:
    """
    학습된 포레스트

    속성:
      trees:     Tree 목록 (트리 번호 순)
      config:    학습 설정 (모드 포함)
      p:         공변량 차원
      n_train:   학습 행 수
      centering: 변수별 centering 방식 ("forest", "constant", "propensity", "none", "shared")
      residuals: 학습 행의 (centered) y, t, z
    """
    trees: List[Tree]
    config: ForestConfig
    p: int
    n_train: int
    centering: Dict[str, str] = field(default_factory=dict)
    residuals: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def mode(self) -> ForestMode:
        return self.config.mode

    @property
    def num_trees(self) -> int:
        return len(self.trees)


@dataclass(frozen=True, eq=False)
class ForestWeights:
    """
    질의점 x의 포레스트 가중치 (0이 아닌 항목만)
    - weights >= 0, 합계 1
    """
    indices: np.ndarray
    weights: np.ndarray

    def dense(self, n_train: int) -> np.ndarray:
        out = np.zeros(n_train, dtype=np.float64)
        out[self.indices] = self.weights
        return out

    def pairs(self) -> List[Tuple[int, float]]:
        return [(int(i), float(w)) for i, w in zip(self.indices, self.weights)]
