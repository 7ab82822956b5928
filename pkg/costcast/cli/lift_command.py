import json
import logging
from pathlib import Path
from typing import Optional

import click

from costcast.cli.common import load_schema, output_dir_of, read_column, write_run_config
from costcast.models.dataset import TestDataset
from costcast.repositories.dataset_repository import load_dataset
from costcast.schemas.evaluation_schema import BootstrapConfig
from costcast.services.evaluation.bootstrap_service import paired_bootstrap
from costcast.services.evaluation.lift_service import lift_at_budget
from costcast.services.evaluation.qini_service import qini_curve

logger = logging.getLogger(__name__)


@click.command("lift")
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True, help="평가 CSV")
@click.option("--scores", "scores_path", type=click.Path(path_type=Path), required=True, help="점수 CSV")
@click.option("--compare-scores", "compare_path", type=click.Path(path_type=Path), default=None,
              help="비교할 두 번째 점수 CSV (짝지은 bootstrap)")
@click.option("--budget", type=float, required=True, help="1인당 예산 b")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--reps", type=int, default=None, help="bootstrap 반복 수 (기본: COSTCAST_BOOTSTRAP_REPS)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cluster", is_flag=True, help="클러스터 단위 half-sample")
@click.option("--schema", "schema_path", type=click.Path(path_type=Path), default=None, help="ColumnSchema JSON")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="결과 JSON")
def lift(
    data_path: Path,
    scores_path: Path,
    compare_path: Optional[Path],
    budget: float,
    alpha: float,
    reps: Optional[int],
    seed: int,
    cluster: bool,
    schema_path: Optional[Path],
    out: Path,
) -> None:
    """
    예산 b 에서의 lift 와 신뢰구간 JSON 저장
    - 기본 키: q_hat, delta_hat, se, ci_lo, ci_hi, q_ci_lo, q_ci_hi
    - --compare-scores: "comparison" 키에 두 점수 규칙 차이의 구간과 p값 추가
    """
    test = load_dataset(data_path, load_schema(schema_path)).as_role(TestDataset)
    scores = read_column(scores_path)
    curve = qini_curve(test, scores)
    cfg = BootstrapConfig(reps=reps, seed=seed, cluster=cluster)
    summary = lift_at_budget(curve, budget, alpha, cfg).summary()
    if compare_path is not None:
        paired = paired_bootstrap(scores, read_column(compare_path), test, budget, cfg, alpha)
        summary["comparison"] = paired.summary()

    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    write_run_config(
        output_dir_of(out),
        "lift",
        {
            "data": data_path,
            "scores": scores_path,
            "compare_scores": compare_path,
            "budget": budget,
            "alpha": alpha,
            "cluster": cluster,
        },
        seed=seed,
        config=cfg,
    )
    click.echo(json.dumps(summary, sort_keys=True))
