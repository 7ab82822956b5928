"""
모델 파일 저장소

파일 구조:
  b"CCST" | major(1B) | minor(1B) | patch(1B) | header_len(4B, little-endian)
  | UTF-8 JSON 헤더 (키 정렬) | 배열 payload (little-endian, 헤더 배열표 순서)

동일한 모델은 바이트 단위로 동일한 파일을 만든다
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from costcast.core.config import get_settings
from costcast.models.forest import ForestModel, Tree
from costcast.models.priority import PriorityKind, PriorityModel
from costcast.repositories.exceptions import InputFileNotFound, ModelFormatError
from costcast.schemas.forest_schema import ForestConfig

logger = logging.getLogger(__name__)

_TREE_ARRAYS: Tuple[Tuple[str, str], ...] = (
    ("feature", "<i8"),
    ("threshold", "<f8"),
    ("left", "<i8"),
    ("right", "<i8"),
    ("leaf_of_node", "<i8"),
    ("leaf_offsets", "<i8"),
    ("leaf_members", "<i8"),
    ("leaf_stats", "<f8"),
    ("subsample", "<i8"),
    ("split_half", "<i8"),
    ("estimation_half", "<i8"),
)

ModelLike = Union[PriorityModel, ForestModel]


def _version_bytes(version: str) -> bytes:
    try:
        major, minor, patch = (int(v) for v in version.split("."))
    except ValueError as e:
        raise ModelFormatError(f"invalid format version '{version}'") from e
    return bytes([major, minor, patch])


class _ArrayTable:
    """헤더 배열표와 payload를 함께 쌓는 버퍼"""

    def __init__(self) -> None:
        self.entries: List[Dict[str, Any]] = []
        self.chunks: List[bytes] = []
        self.offset = 0

    def add(self, name: str, arr: np.ndarray, dtype: str) -> None:
        data = np.ascontiguousarray(np.asarray(arr).astype(dtype, copy=False))
        raw = data.tobytes(order="C")
        self.entries.append({"name": name, "dtype": dtype, "shape": list(data.shape), "offset": self.offset})
        self.chunks.append(raw)
        self.offset += len(raw)


# ─── encode ───────────────────────────────────────────────────────────
def _encode_forest(prefix: str, forest: ForestModel, table: _ArrayTable) -> Dict[str, Any]:
    """트리 배열을 이어 붙이고 트리별 길이를 별도 배열로 기록"""
    for name, dtype in _TREE_ARRAYS:
        parts = [getattr(tree, name) for tree in forest.trees]
        lengths = np.array([part.shape[0] for part in parts], dtype=np.int64)
        table.add(f"{prefix}/{name}", np.concatenate(parts, axis=0), dtype)
        table.add(f"{prefix}/{name}.lengths", lengths, "<i8")
    for key in sorted(forest.residuals):
        table.add(f"{prefix}/residuals/{key}", forest.residuals[key], "<f8")
    return {
        "config": forest.config.model_dump(mode="json", exclude={"threads"}),
        "centering": dict(forest.centering),
        "p": forest.p,
        "n_train": forest.n_train,
        "num_trees": forest.num_trees,
        "residuals": sorted(forest.residuals),
    }


def dumps(model: ModelLike) -> bytes:
    """모델을 바이트열로 직렬화"""
    settings = get_settings()
    table = _ArrayTable()
    header: Dict[str, Any] = {"format_version": settings.MODEL_FORMAT_VERSION}

    if isinstance(model, ForestModel):
        header["kind"] = "forest"
        header["forests"] = {"forest": _encode_forest("forest", model, table)}
    else:
        header["kind"] = model.kind.value
        header["p"] = model.p
        header["add_intercept"] = model.add_intercept
        header["gamma_floor"] = model.gamma_floor
        header["diagnostics"] = model.diagnostics
        header["forests"] = {
            name: _encode_forest(name, model.forests[name], table) for name in sorted(model.forests)
        }
        if model.beta is not None:
            table.add("beta", model.beta, "<f8")

    header["arrays"] = table.entries
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return b"".join(
        [
            settings.MODEL_MAGIC,
            _version_bytes(settings.MODEL_FORMAT_VERSION),
            struct.pack("<I", len(header_bytes)),
            header_bytes,
            *table.chunks,
        ]
    )


# ─── decode ───────────────────────────────────────────────────────────
def _read_arrays(header: Dict[str, Any], payload: bytes) -> Dict[str, np.ndarray]:
    arrays: Dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = int(entry["offset"])
        stop = start + count * dtype.itemsize
        if stop > len(payload):
            raise ModelFormatError(f"array '{entry['name']}' runs past the end of the file")
        arrays[entry["name"]] = np.frombuffer(payload[start:stop], dtype=dtype).reshape(shape).copy()
    return arrays


def _decode_forest(prefix: str, meta: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> ForestModel:
    split: Dict[str, List[np.ndarray]] = {}
    for name, _ in _TREE_ARRAYS:
        lengths = arrays[f"{prefix}/{name}.lengths"]
        bounds = np.concatenate([[0], np.cumsum(lengths)])
        flat = arrays[f"{prefix}/{name}"]
        split[name] = [flat[bounds[i]:bounds[i + 1]] for i in range(lengths.shape[0])]
    trees = [
        Tree(**{name: split[name][i] for name, _ in _TREE_ARRAYS})
        for i in range(int(meta["num_trees"]))
    ]
    return ForestModel(
        trees=trees,
        config=ForestConfig.model_validate(meta["config"]),
        p=int(meta["p"]),
        n_train=int(meta["n_train"]),
        centering=dict(meta["centering"]),
        residuals={key: arrays[f"{prefix}/residuals/{key}"] for key in meta["residuals"]},
    )


def loads(blob: bytes) -> ModelLike:
    """
    바이트열에서 모델 복원
    1) 매직 바이트 / major 버전 확인
    2) JSON 헤더 파싱
    3) 배열표대로 payload 해석
    """
    settings = get_settings()
    magic = settings.MODEL_MAGIC
    fixed = len(magic) + 3 + 4
    if len(blob) < fixed or blob[: len(magic)] != magic:
        raise ModelFormatError("not a costcast model file (bad magic bytes)")
    major = blob[len(magic)]
    expected_major = _version_bytes(settings.MODEL_FORMAT_VERSION)[0]
    if major != expected_major:
        raise ModelFormatError(f"unsupported model format major version {major} (expected {expected_major})")
    (header_len,) = struct.unpack("<I", blob[len(magic) + 3:fixed])
    try:
        header = json.loads(blob[fixed:fixed + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"corrupt model header: {e}") from e

    try:
        arrays = _read_arrays(header, blob[fixed + header_len:])
        forests = {
            name: _decode_forest(name, meta, arrays) for name, meta in header["forests"].items()
        }
        if header["kind"] == "forest":
            return forests["forest"]
        return PriorityModel(
            kind=PriorityKind(header["kind"]),
            p=int(header["p"]),
            forests=forests,
            beta=arrays.get("beta"),
            add_intercept=bool(header["add_intercept"]),
            gamma_floor=header["gamma_floor"],
            diagnostics=header["diagnostics"],
        )
    except (KeyError, ValueError) as e:
        raise ModelFormatError(f"corrupt model file: {e}") from e


class ModelRepository:
    """
    모델 파일 입출력
    - save: 모델 → 파일
    - load: 파일 → 모델
    """

    def save(self, model: ModelLike, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = dumps(model)
        path.write_bytes(blob)
        logger.info("saved model to %s (%d bytes)", path, len(blob))
        return path

    def load(self, path: Union[str, Path]) -> ModelLike:
        path = Path(path)
        if not path.is_file():
            raise InputFileNotFound(f"model file not found: {path}")
        return loads(path.read_bytes())
