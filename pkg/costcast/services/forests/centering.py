"""
local centering

인과/도구변수 포레스트 학습 전에 y, t, z 를 OOB 회귀 포레스트 예측으로 잔차화
- z 의 조건부 평균이 알려진 처치 확률이면 그 값을 그대로 사용
- t 와 z 가 같은 열이면 (인과 모드) 잔차도 공유
"""

import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from costcast.schemas.forest_schema import ForestConfig, ForestMode

logger = logging.getLogger(__name__)

CENTERING_MIN_NODE_SIZE = 5

# (x, response, cfg) -> OOB 예측. forest_service가 주입 (순환 import 방지)
OobFitter = Callable[[np.ndarray, np.ndarray, ForestConfig], np.ndarray]


def centering_config(cfg: ForestConfig) -> ForestConfig:
    """centering 회귀 포레스트 설정 (같은 시드, 트리 수는 resolved_centering_trees)"""
    return cfg.for_mode(
        ForestMode.REGRESSION,
        num_trees=cfg.resolved_centering_trees(),
        min_node_size=CENTERING_MIN_NODE_SIZE,
        local_centering=False,
        centering_trees=None,
    )


def center_responses(
    x: np.ndarray,
    y: np.ndarray,
    t: Optional[np.ndarray],
    z: Optional[np.ndarray],
    cfg: ForestConfig,
    oob_fitter: OobFitter,
    z_mean: Optional[np.ndarray] = None,
    z_constant: Optional[float] = None,
) -> Tuple[Dict[str, np.ndarray], Dict[str, str]]:
    """
    학습 응답 잔차화
    1) 회귀 모드 / local_centering=False: 원본 그대로 ("none")
    2) y: OOB 회귀 포레스트
    3) z: 상수 처치 확률 → "constant", 행별 처치 확률 → "propensity", 그 외 OOB 포레스트
    4) t: z 와 같은 배열이면 z 잔차 공유 ("shared"), 아니면 OOB 포레스트
    """
    if cfg.mode == ForestMode.REGRESSION:
        return {"y": y}, {"y": "none"}
    if not cfg.local_centering:
        return {"y": y, "t": t, "z": z}, {"y": "none", "t": "none", "z": "none"}

    reg_cfg = centering_config(cfg)
    info: Dict[str, str] = {}

    y_hat = oob_fitter(x, y, reg_cfg)
    info["y"] = "forest"

    if z_constant is not None:
        z_hat = np.full(z.shape[0], float(z_constant))
        info["z"] = "constant"
    elif z_mean is not None:
        z_hat = np.asarray(z_mean, dtype=np.float64)
        info["z"] = "propensity"
    else:
        z_hat = oob_fitter(x, z, reg_cfg)
        info["z"] = "forest"

    if np.array_equal(t, z):
        t_hat = z_hat
        info["t"] = "shared"
    else:
        t_hat = oob_fitter(x, t, reg_cfg)
        info["t"] = "forest"

    logger.debug("centering: %s", info)
    return {"y": y - y_hat, "t": t - t_hat, "z": z - z_hat}, info
