"""
시뮬레이션 연구

1) 고정 평가 표본 생성 (해시로 고정 여부 확인, 출력 디렉토리에 저장)
2) 복제마다 새 학습 표본 → 방법별 학습 → 평가 표본 점수 → 정답 기반 oracle 곡선
   (복제가 끝날 때마다 평가 표본 해시 재확인)
3) 방법별 곡선을 공통 spend 격자에서 평균, 요청 예산에서 값 보고
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from costcast.core.parallel import derive_seed, run_parallel
from costcast.models.dataset import Dataset, TruthTaggedDataset
from costcast.models.qini import QiniCurve
from costcast.repositories.dataset_repository import write_dataset
from costcast.schemas.simulation_schema import (
    BudgetScale,
    MethodSummary,
    SimConfig,
    StudyReport,
    budget_key,
)
from costcast.services.estimators.priority_service import (
    fit_direct_ratio,
    fit_dml_priority,
    fit_ignore_cost,
    fit_iv_forest,
    score,
)
from costcast.services.evaluation.qini_service import curve_average, oracle_curve
from costcast.services.simulation.exceptions import TestSetHashMismatch
from costcast.services.simulation.generators import CustomGenerator, dataset_hash, generate

logger = logging.getLogger(__name__)

TEST_SET_FILE = "test_set.csv"
TEST_HASH_FILE = "test_set.sha256"


def method_scores(method: str, train: Dataset, test: TruthTaggedDataset, cfg: SimConfig, seed: int) -> np.ndarray:
    """
    방법 하나를 학습해서 평가 표본 점수 반환
    - seed 는 (연구 시드, 복제, 방법 이름) 에서 파생되므로 방법 순서와 무관
    """
    if method == "oracle":
        return np.asarray(test.rho)
    forest_cfg = cfg.forest.model_copy(update={"seed": seed})
    if method == "iv_forest":
        model = fit_iv_forest(train, forest_cfg)
    elif method == "direct_ratio":
        model = fit_direct_ratio(train, forest_cfg)
    elif method == "ignore_cost":
        model = fit_ignore_cost(train, forest_cfg)
    else:
        model = fit_dml_priority(train, k=cfg.dml_folds, cfg=forest_cfg, seed=seed)
    return score(model, test.data.x)


def _scaled(curve: QiniCurve, scale: BudgetScale) -> QiniCurve:
    return curve.normalized() if scale == BudgetScale.NORMALIZED else curve


def _persist_test_set(test: TruthTaggedDataset, digest: str, out_dir: Path) -> None:
    """
    평가 표본 저장 (이미 있으면 해시 비교)
    - 저장된 해시가 다르면 TestSetHashMismatch
    """
    hash_path = out_dir / TEST_HASH_FILE
    if hash_path.exists():
        stored = hash_path.read_text(encoding="utf-8").strip()
        if stored != digest:
            raise TestSetHashMismatch(
                f"persisted test set hash {stored[:12]}… differs from regenerated {digest[:12]}…; "
                "use a fresh output directory or the original configuration"
            )
        return
    write_dataset(
        test.data,
        out_dir / TEST_SET_FILE,
        extra_columns={"tau": test.tau, "gamma": test.gamma, "rho": test.rho},
    )
    hash_path.write_text(digest + "\n", encoding="utf-8")


def _verify_test_set(test: TruthTaggedDataset, digest: str, replicate: int) -> None:
    """복제가 끝날 때마다 평가 표본 해시 재확인 (달라졌으면 TestSetHashMismatch)"""
    current = dataset_hash(test)
    if current != digest:
        raise TestSetHashMismatch(
            f"test set changed during replicate {replicate}: hash {current[:12]}… != {digest[:12]}…"
        )


def run_study(
    cfg: SimConfig,
    out_dir: Optional[Union[str, Path]] = None,
    custom: Optional[CustomGenerator] = None,
) -> StudyReport:
    """시뮬레이션 연구 실행"""
    out_path = Path(out_dir) if out_dir is not None else None

    # 1) 고정 평가 표본
    test = generate(cfg, seed=derive_seed(cfg.seed, "test"), n=cfg.n_test, custom=custom)
    digest = dataset_hash(test)
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        _persist_test_set(test, digest, out_path)
    logger.info("run_study: design=%s test n=%d hash=%s", cfg.design.value, cfg.n_test, digest[:12])

    # 2) 복제 (run_parallel, 복제별 시드라 워커 수와 무관)
    def replicate(r: int) -> Dict[str, QiniCurve]:
        train = generate(cfg, seed=derive_seed(cfg.seed, "train", r), n=cfg.n_train, custom=custom)
        out = {}
        for method in cfg.methods:
            scores = method_scores(method, train.data, test, cfg, derive_seed(cfg.seed, r, method))
            out[method] = _scaled(oracle_curve(test.tau, test.gamma, scores), cfg.budget_scale)
        _verify_test_set(test, digest, r)
        logger.debug("run_study: replicate %d done", r)
        return out

    per_replicate = run_parallel(replicate, range(cfg.replicates), cfg.forest.threads)
    curves: Dict[str, List[QiniCurve]] = {m: [rep[m] for rep in per_replicate] for m in cfg.methods}

    # 3) 평균 곡선
    end = max(c.b0 for per_method in curves.values() for c in per_method)
    grid = np.linspace(0.0, end, cfg.grid_points)
    averaged = {m: curve_average(cs, grid) for m, cs in curves.items()}

    summaries = []
    for method in cfg.methods:
        values = {budget_key(b): averaged[method].value_at(b) for b in cfg.budgets}
        per_rep = {budget_key(b): [c.value_at(b) for c in curves[method]] for b in cfg.budgets}
        summaries.append(MethodSummary(method=method, values=values, replicate_values=per_rep))

    report = StudyReport(
        config=cfg,
        test_hash=digest,
        replicates=cfg.replicates,
        grid=grid.tolist(),
        methods=summaries,
        averaged_curves={m: averaged[m].reward.tolist() for m in cfg.methods},
    )
    if out_path is not None:
        write_study_artifacts(report, curves, grid, out_path)
    return report


def write_study_artifacts(
    report: StudyReport,
    curves: Dict[str, List[QiniCurve]],
    grid: np.ndarray,
    out_dir: Path,
) -> None:
    """
    보고서 JSON, 평균 곡선 CSV, 복제별 격자 곡선 CSV 저장
    """
    (out_dir / "report.json").write_text(
        json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True), encoding="utf-8"
    )
    averaged = pd.DataFrame({"spend": grid, **report.averaged_curves})
    averaged.to_csv(out_dir / "averaged_curves.csv", index=False, float_format="%.17g")

    rows = []
    for method, per_method in curves.items():
        for r, curve in enumerate(per_method):
            for g in grid:
                rows.append({"method": method, "replicate": r, "spend": g, "reward": curve.value_at(float(g))})
    pd.DataFrame(rows).to_csv(out_dir / "replicate_curves.csv", index=False, float_format="%.17g")
    logger.info("run_study: wrote artifacts to %s", out_dir)
